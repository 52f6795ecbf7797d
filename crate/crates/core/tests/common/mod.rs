//! Helpers shared by the integration tests: random scenario construction and
//! oracles that recheck simulator output from the raw instance timelines.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hetsched::allocator::SchedulerKind;
use hetsched::model::{BenchmarkVector, ClusterSpec, NodeSpec, ResourceRequest, WorkflowDag};
use hetsched::monitor::TraceStore;
use hetsched::simulator::{synthesize_workflow, RunReport, SimScenario, WorkloadProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_cluster(rng: &mut ChaCha8Rng) -> ClusterSpec {
    let n = rng.gen_range(2..=8);
    let nodes = (0..n)
        .map(|i| NodeSpec {
            node_id: format!("node-{i:02}"),
            cpus: rng.gen_range(4..=16),
            mem_gb: rng.gen_range(10..=64) as f64,
            enabled: true,
            bench: BenchmarkVector {
                cpu_events_per_s: rng.gen_range(300.0..600.0),
                ram_mib_per_s: rng.gen_range(10_000.0..20_000.0),
                seq_read_iops: rng.gen_range(400.0..500.0),
                seq_write_iops: rng.gen_range(400.0..500.0),
                rnd_read_iops: rng.gen_range(90.0..110.0),
                rnd_write_iops: rng.gen_range(90.0..110.0),
            },
        })
        .collect();
    ClusterSpec { nodes }
}

/// Synthetic workflow with per-task requests redrawn so that resource
/// shapes vary; usage stays within the reservation.
pub fn random_workflow(rng: &mut ChaCha8Rng, tag: usize) -> WorkflowDag {
    let profile = *[WorkloadProfile::CpuHeavy, WorkloadProfile::MemHeavy, WorkloadProfile::Mixed]
        .choose(rng)
        .unwrap();
    let mut dag = synthesize_workflow(profile, rng.gen_range(1..=8), rng.gen()).unwrap();
    dag.workflow_id = format!("{}#{tag}", dag.workflow_id);
    for t in &mut dag.tasks {
        t.instances = t.instances.min(6);
        t.request = ResourceRequest {
            cpus: rng.gen_range(1..=4),
            mem_gb: rng.gen_range(1..=8) as f64,
        };
        t.behavior.cpu_util_pct = t.behavior.cpu_util_pct.min(100.0 * t.request.cpus as f64);
        t.behavior.mem_gb_used = t.behavior.mem_gb_used.min(t.request.mem_gb);
    }
    dag
}

pub fn random_scenario(seed: u64) -> SimScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cluster = random_cluster(&mut rng);
    let workflows = (0..rng.gen_range(1..=2)).map(|j| random_workflow(&mut rng, j)).collect();
    let scheduler = *SchedulerKind::ALL.choose(&mut rng).unwrap();
    let mut sc = SimScenario::new(cluster, workflows, scheduler);
    for (j, w) in sc.workflows.iter_mut().enumerate() {
        w.arrival_s = j as f64 * rng.gen_range(0.0..50.0);
    }
    sc.seed = rng.gen();
    sc.repetitions = rng.gen_range(1..=3);
    sc.warmup = rng.gen_bool(0.3);
    sc.keep_warmup_traces = rng.gen_bool(0.7);
    sc.warm_start = rng.gen_bool(0.8);
    sc.disable_fraction = *[0.0, 0.2, 0.4].choose(&mut rng).unwrap();
    sc.alpha = rng.gen_range(0.0..1.0);
    sc
}

/// Checks the simulator invariants on one run; returns a description of the
/// first violation.
pub fn check_run(sc: &SimScenario, report: &RunReport, store: &TraceStore) -> Result<(), String> {
    let requests: BTreeMap<(String, String), ResourceRequest> = sc
        .workflows
        .iter()
        .flat_map(|w| {
            w.dag
                .tasks
                .iter()
                .map(move |t| ((w.dag.workflow_id.clone(), t.name.clone()), t.request))
        })
        .collect();
    let capacity: BTreeMap<&str, (u32, f64)> = sc
        .cluster
        .nodes
        .iter()
        .map(|n| (n.node_id.as_str(), (n.cpus, n.mem_gb)))
        .collect();
    let total_instances: u64 = sc.workflows.iter().map(|w| w.dag.total_instances()).sum();

    for rep in &report.repetitions {
        if rep.instances_executed != total_instances || rep.instances.len() as u64 != total_instances {
            return Err(format!("rep {}: executed {} of {total_instances}", rep.index, rep.instances_executed));
        }
        // workflow run id is "<workflow_id>#r<rep>"
        let wf_of = |run: &str| run.rsplit_once("#r").unwrap().0.to_string();
        for inst in &rep.instances {
            if !inst.timeline_is_monotone() {
                return Err(format!("{}: non-monotone timeline", inst.instance_id));
            }
            let node = inst.assigned_node.as_deref().ok_or("unplaced instance")?;
            if report.disabled_nodes.iter().any(|d| d == node) {
                return Err(format!("{} ran on disabled node {node}", inst.instance_id));
            }
        }

        // Conservation: at every start instant, sum of running requests per
        // node within capacity. Intervals are [start, end).
        for probe in &rep.instances {
            let t = probe.start_time.unwrap();
            let node = probe.assigned_node.as_deref().unwrap();
            let (mut cpus, mut mem) = (0u32, 0.0f64);
            for other in &rep.instances {
                if other.assigned_node.as_deref() == Some(node)
                    && other.start_time.unwrap() <= t
                    && t < other.end_time.unwrap()
                {
                    let req = requests[&(wf_of(&other.workflow_run_id), other.task_name.clone())];
                    cpus += req.cpus;
                    mem += req.mem_gb;
                }
            }
            let (cap_cpu, cap_mem) = capacity[node];
            if cpus > cap_cpu || mem > cap_mem + 1e-9 {
                return Err(format!("over-commit on {node} at t={t}: {cpus} cpus, {mem} GB"));
            }
        }

        // DAG order: every instance of a successor starts after every
        // instance of each predecessor ended.
        for w in &sc.workflows {
            let of_task = |name: &str| -> Vec<&hetsched::model::TaskInstance> {
                rep.instances
                    .iter()
                    .filter(|i| i.task_name == name && wf_of(&i.workflow_run_id) == w.dag.workflow_id)
                    .collect()
            };
            for (a, b) in &w.dag.edges {
                let last_end = of_task(a).into_iter().map(|i| i.end_time.unwrap()).fold(f64::MIN, f64::max);
                let first_start = of_task(b).into_iter().map(|i| i.start_time.unwrap()).fold(f64::MAX, f64::min);
                if first_start < last_end {
                    return Err(format!("{}: {b} started at {first_start} before {a} ended at {last_end}", w.dag.workflow_id));
                }
            }
        }
    }

    let expected_traces: u64 = report
        .repetitions
        .iter()
        .filter(|r| !(r.warmup && !sc.keep_warmup_traces))
        .map(|r| r.instances_executed)
        .sum();
    if store.len() as u64 != expected_traces {
        return Err(format!("{} traces for {expected_traces} instances", store.len()));
    }
    Ok(())
}
