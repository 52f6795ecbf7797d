use std::collections::BTreeMap;

use hetsched::allocator::SchedulerKind;
use hetsched::harness::{compare, ClusterSource, ComparisonSpec, ScenarioSpec, WorkloadSource};
use hetsched::model::{BenchmarkVector, ClusterSpec, NodeSpec};
use hetsched::monitor::TraceScope;
use hetsched::simulator::{geometric_mean, WorkloadProfile};

fn spec(cluster: ClusterSource, schedulers: Vec<SchedulerKind>) -> ComparisonSpec {
    ComparisonSpec {
        cluster,
        scenarios: vec![
            ScenarioSpec {
                name: "solo".into(),
                workflows: vec![WorkloadSource::Synthetic {
                    profile: WorkloadProfile::Mixed,
                    size: 10,
                    arrival_s: 0.0,
                }],
            },
            ScenarioSpec {
                name: "pair".into(),
                workflows: vec![
                    WorkloadSource::Synthetic {
                        profile: WorkloadProfile::CpuHeavy,
                        size: 8,
                        arrival_s: 0.0,
                    },
                    WorkloadSource::Synthetic {
                        profile: WorkloadProfile::MemHeavy,
                        size: 8,
                        arrival_s: 25.0,
                    },
                ],
            },
        ],
        schedulers,
        seeds: vec![4, 5, 6],
        repetitions: 3,
        warmup: true,
        keep_warmup_traces: true,
        alpha: 0.3,
        disable_fraction: 0.0,
        profile_seed: 0,
        trace_scope: TraceScope::SameWorkflow,
        base_dir: Default::default(),
    }
}

#[test]
fn homogeneous_cluster_makes_tarema_and_fair_equivalent() {
    let nodes = (0..6)
        .map(|i| NodeSpec {
            node_id: format!("h{i}"),
            cpus: 8,
            mem_gb: 32.0,
            enabled: true,
            bench: BenchmarkVector {
                cpu_events_per_s: 470.0,
                ram_mib_per_s: 17_700.0,
                seq_read_iops: 481.0,
                seq_write_iops: 483.0,
                rnd_read_iops: 102.0,
                rnd_write_iops: 107.0,
            },
        })
        .collect();
    let report = compare(&spec(
        ClusterSource::Inline {
            nodes: ClusterSpec { nodes },
        },
        vec![SchedulerKind::Tarema, SchedulerKind::Fair],
    ))
    .unwrap();
    assert_eq!(report.groups.len(), 1);
    for cell in report.cells.iter().filter(|c| c.scheduler == SchedulerKind::Tarema) {
        let t = cell.report().unwrap();
        let f = report.cell(&cell.scenario, cell.seed, SchedulerKind::Fair).unwrap().report().unwrap();
        assert_eq!(t.measured_makespans(), f.measured_makespans());
        assert_eq!(t.measured_group_counts(), f.measured_group_counts());
        // Same number of decisions, all of them placements.
        assert_eq!(t.audit().count(), f.audit().count());
    }
}

#[test]
fn summary_recomputes_from_raw_rows() {
    let report = compare(&spec(
        ClusterSource::Preset {
            preset: "5442".into(),
            seed: 2,
        },
        SchedulerKind::ALL.to_vec(),
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write_all(dir.path()).unwrap();

    let mut raw: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut rows = csv::Reader::from_path(dir.path().join("report.csv")).unwrap();
    for row in rows.records() {
        let row = row.unwrap();
        if &row[3] == "ok" && &row[5] == "false" {
            raw.entry((row[0].to_string(), row[2].to_string()))
                .or_default()
                .push(row[6].parse().unwrap());
        }
    }
    let mut summary = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let mut checked = 0;
    for row in summary.records() {
        let row = row.unwrap();
        if &row[0] != "scheduler" {
            continue;
        }
        let values = &raw[&(row[1].to_string(), row[2].to_string())];
        assert_eq!(values.len(), 3 * 3);
        assert_eq!(row[6].parse::<f64>().unwrap(), geometric_mean(values));
        checked += 1;
    }
    assert_eq!(checked, 2 * 5);

    let groups = std::fs::read_to_string(dir.path().join("groups.csv")).unwrap();
    assert_eq!(groups.lines().count(), 1 + 2 * 5 * report.groups.len());
}
