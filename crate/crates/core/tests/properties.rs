mod common;

use std::collections::BTreeSet;

use hetsched::allocator::score;
use hetsched::model::{BenchmarkVector, ClusterSpec, NodeSpec, TaskTrace};
use hetsched::monitor::{capacity_fractions, PercentileBoundaries, TraceStore, UsageFeature};
use hetsched::profiler::{dense_rank, profile, NodeGroupSet, ProfileConfig};
use hetsched::simulator::run;
use proptest::prelude::*;

type Row = (usize, usize, f64, f64, f64, f64);

/// Groups as sets of node ids, independent of group numbering.
fn partition(groups: &NodeGroupSet) -> BTreeSet<BTreeSet<String>> {
    groups
        .groups
        .iter()
        .map(|g| g.members.iter().cloned().collect())
        .collect()
}

fn bench_strategy() -> impl Strategy<Value = BenchmarkVector> {
    (
        prop_oneof![300.0..320.0, 450.0..470.0, 520.0..530.0],
        prop_oneof![13_000.0..14_000.0, 17_500.0..18_000.0],
        400.0..500.0,
        400.0..500.0,
        100.0..110.0,
        100.0..110.0,
    )
        .prop_map(|(c, r, sr, sw, rr, rw)| BenchmarkVector {
            cpu_events_per_s: c,
            ram_mib_per_s: r,
            seq_read_iops: sr,
            seq_write_iops: sw,
            rnd_read_iops: rr,
            rnd_write_iops: rw,
        })
}

fn cluster_strategy() -> impl Strategy<Value = ClusterSpec> {
    prop::collection::vec(bench_strategy(), 3..12).prop_map(|benches| ClusterSpec {
        nodes: benches
            .into_iter()
            .enumerate()
            .map(|(i, bench)| NodeSpec {
                node_id: format!("n{i:02}"),
                cpus: 8,
                mem_gb: 32.0,
                enabled: true,
                bench,
            })
            .collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profiling_ignores_node_order(cluster in cluster_strategy(), shift in 0usize..12) {
        let cfg = ProfileConfig::default();
        let mut rotated = cluster.clone();
        let len = rotated.nodes.len();
        rotated.nodes.rotate_left(shift % len);
        rotated.nodes.reverse();
        let a = profile(&cluster, &cfg).unwrap();
        let b = profile(&rotated, &cfg).unwrap();
        prop_assert_eq!(partition(&a), partition(&b));
        prop_assert_eq!(a.groups.iter().map(|g| g.labels).collect::<Vec<_>>(), b.groups.iter().map(|g| g.labels).collect::<Vec<_>>());
    }

    #[test]
    fn profiling_ignores_feature_units(cluster in cluster_strategy(), exp in -6i32..6) {
        // Power-of-two scaling is exact, so z-scores are bit-identical.
        let factor = 2f64.powi(exp);
        let mut scaled = cluster.clone();
        for n in &mut scaled.nodes {
            n.bench.cpu_events_per_s *= factor;
            n.bench.ram_mib_per_s *= factor;
        }
        let cfg = ProfileConfig::default();
        prop_assert_eq!(partition(&profile(&cluster, &cfg).unwrap()), partition(&profile(&scaled, &cfg).unwrap()));
    }

    #[test]
    fn labels_lie_in_range(cluster in cluster_strategy()) {
        let g = profile(&cluster, &ProfileConfig::default()).unwrap();
        let n = g.len() as u32;
        for i in 0..g.len() {
            let l = g.labels(i).unwrap();
            for v in l.as_array() {
                prop_assert!((1..=n).contains(&v));
            }
        }
    }

    #[test]
    fn dense_rank_is_order_preserving(values in prop::collection::vec(1.0f64..1000.0, 1..10)) {
        let ranks = dense_rank(&values, 0.02);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(ranks[i] <= ranks[j]);
                }
            }
        }
        prop_assert_eq!(*ranks.iter().min().unwrap(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn label_is_monotone_in_usage(
        mut cuts in prop::collection::vec(0.0f64..500.0, 0..5),
        a in 0.0f64..600.0,
        b in 0.0f64..600.0,
    ) {
        cuts.sort_by(f64::total_cmp);
        let n = cuts.len() + 1;
        let bounds = PercentileBoundaries {
            feature: UsageFeature::Cpu,
            fractions: (0..=n).map(|i| i as f64 / n as f64).collect(),
            cuts,
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bounds.label_of(lo) <= bounds.label_of(hi));
        // Exactly one interval holds each value.
        let hits = bounds.intervals().iter().filter(|&&(l, h)| l <= a && a < h).count();
        prop_assert_eq!(hits, 1);
        prop_assert!((1..=n as u32).contains(&bounds.label_of(a)));
    }

    #[test]
    fn capacity_fractions_follow_shares(caps in prop::collection::vec(0.5f64..500.0, 1..8)) {
        let p = capacity_fractions(&caps);
        let total: f64 = caps.iter().sum();
        prop_assert_eq!(p[0], 0.0);
        prop_assert_eq!(*p.last().unwrap(), 1.0);
        for i in 1..p.len() {
            prop_assert!(p[i] >= p[i - 1]);
            prop_assert!((p[i] - p[i - 1] - caps[i - 1] / total).abs() <= 1e-12);
        }
    }

    #[test]
    fn score_is_l1_distance(g in prop::array::uniform3(1u32..7), t in prop::array::uniform3(1u32..7)) {
        let expected: u32 = g.iter().zip(&t).map(|(a, b)| a.abs_diff(*b)).sum();
        prop_assert_eq!(score(&g, &t).unwrap(), expected);
        prop_assert_eq!(score(&g, &t).unwrap(), score(&t, &g).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn aggregates_match_recomputation(
        rows in prop::collection::vec((0usize..3, 0usize..4, 0.1f64..500.0, 0.0f64..400.0, 0.0f64..8.0, 0.0f64..90.0), 1..300)
    ) {
        let mut store = TraceStore::new();
        for &(w, t, rt, cpu, mem, io) in &rows {
            store.record(TaskTrace {
                workflow_id: format!("wf{w}"),
                task_name: format!("t{t}"),
                runtime_s: rt,
                cpu_util_pct: cpu,
                mem_gb_used: mem,
                io_mb_per_s: io,
                node_id: "n".into(),
                seq: 0,
            }).unwrap();
        }
        for w in 0..3 {
            for t in 0..4 {
                let sel: Vec<_> = rows.iter().filter(|r| r.0 == w && r.1 == t).collect();
                let agg = store.aggregate(&format!("wf{w}"), &format!("t{t}"));
                if sel.is_empty() {
                    prop_assert!(agg.is_none());
                    continue;
                }
                let agg = agg.unwrap();
                let n = sel.len() as f64;
                let mean = |f: fn(&&Row) -> f64| sel.iter().map(f).sum::<f64>() / n;
                prop_assert!((agg.mean_runtime_s() - mean(|r| r.2)).abs() < 1e-9);
                prop_assert!((agg.mean_usage(UsageFeature::Cpu) - mean(|r| r.3)).abs() < 1e-9);
                prop_assert!((agg.mean_usage(UsageFeature::Mem) - mean(|r| r.4)).abs() < 1e-9);
                prop_assert!((agg.mean_usage(UsageFeature::Io) - mean(|r| r.5)).abs() < 1e-9);
            }
        }
        let seqs: Vec<u64> = store.traces().iter().map(|t| t.seq).collect();
        prop_assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn simulator_conserves_resources_and_order(seed in any::<u64>()) {
        let sc = common::random_scenario(seed);
        let mut store = TraceStore::new();
        let report = run(&sc, &mut store).unwrap();
        if let Err(e) = common::check_run(&sc, &report, &store) {
            return Err(TestCaseError::fail(e));
        }
        let mut again = TraceStore::new();
        prop_assert_eq!(&report, &run(&sc, &mut again).unwrap());
        prop_assert_eq!(store.traces(), again.traces());
    }
}
