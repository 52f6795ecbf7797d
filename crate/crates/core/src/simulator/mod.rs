//! Deterministic discrete-event execution of workflows on a modeled cluster.
//!
//! A repetition starts every workflow at its arrival time. When all instances
//! of a task finish, every instance of each successor whose predecessors are
//! all done becomes ready at that instant. After each batch of same-time
//! events the queued instances are offered to the scheduler one by one; those
//! that cannot be placed stay queued.
//!
//! Labels and SJFN runtimes are looked up in the trace history as it stood
//! when the repetition began. Traces produced by a repetition are appended to
//! the store when it ends.

pub mod events;
pub mod runtime;
pub mod synth;

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocator::{
    sjfn_queue_order, ClusterState, Rationale, ScheduleDecision, Scheduler, SchedulerKind,
};
use crate::error::{Error, Result};
use crate::model::{
    validate_workflow, ClusterSpec, TaskInstance, TaskTrace, ValidatedWorkflow, WorkflowDag,
};
use crate::monitor::{Labeler, TaskLabels, TraceScope, TraceStore};
use crate::profiler::{profile, NodeGroupSet, ProfileConfig};

pub use events::EventQueue;
pub use runtime::effective_runtime;
pub use synth::{synthesize_workflow, WorkloadProfile};

pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadEntry {
    pub dag: WorkflowDag,
    pub arrival_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub cluster: ClusterSpec,
    pub workflows: Vec<WorkloadEntry>,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    /// Measured repetitions.
    pub repetitions: u32,
    /// Run one extra initial repetition that is excluded from aggregates.
    pub warmup: bool,
    /// Whether the warm-up repetition's traces enter the store.
    pub keep_warmup_traces: bool,
    /// Refresh the label history between repetitions.
    pub warm_start: bool,
    pub disable_fraction: f64,
    pub alpha: f64,
    pub profile: ProfileConfig,
    pub trace_scope: TraceScope,
}

impl SimScenario {
    pub fn new(cluster: ClusterSpec, workflows: Vec<WorkflowDag>, scheduler: SchedulerKind) -> Self {
        Self {
            cluster,
            workflows: workflows
                .into_iter()
                .map(|dag| WorkloadEntry { dag, arrival_s: 0.0 })
                .collect(),
            scheduler,
            seed: 0,
            repetitions: 1,
            warmup: false,
            keep_warmup_traces: true,
            warm_start: true,
            disable_fraction: 0.0,
            alpha: DEFAULT_ALPHA,
            profile: ProfileConfig::default(),
            trace_scope: TraceScope::SameWorkflow,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if self.repetitions == 0 {
            return Err(Error::invalid("scenario", "repetitions must be >= 1"));
        }
        if self.workflows.is_empty() {
            return Err(Error::invalid("scenario", "no workflows"));
        }
        if !(0.0..1.0).contains(&self.disable_fraction) {
            return Err(Error::invalid("scenario", "disable fraction must be in [0, 1)"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("scenario", "alpha must be >= 0"));
        }
        let mut ids = BTreeSet::new();
        for w in &self.workflows {
            if !(w.arrival_s.is_finite() && w.arrival_s >= 0.0) {
                return Err(Error::invalid("scenario", "arrival times must be >= 0"));
            }
            if !ids.insert(w.dag.workflow_id.as_str()) {
                return Err(Error::invalid(
                    "scenario",
                    format!("workflow `{}` listed twice", w.dag.workflow_id),
                ));
            }
        }
        Ok(())
    }

    fn total_repetitions(&self) -> u32 {
        self.repetitions + u32::from(self.warmup)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub repetition: u32,
    pub instance_id: String,
    pub scheduler: SchedulerKind,
    pub group: usize,
    pub node: String,
    pub score: Option<u32>,
    pub rationale: Rationale,
    pub sim_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub index: u32,
    pub warmup: bool,
    pub makespan_s: f64,
    pub instances_executed: u64,
    pub traces_recorded: u64,
    pub group_counts: Vec<u64>,
    pub group_busy_core_s: Vec<f64>,
    pub wait_mean_s: f64,
    pub wait_max_s: f64,
    pub unknown_decisions: u64,
    #[serde(skip)]
    pub audit: Vec<AuditRecord>,
    #[serde(skip)]
    pub instances: Vec<TaskInstance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MakespanSummary {
    pub count: usize,
    pub mean_s: f64,
    pub std_s: f64,
    pub geomean_s: f64,
}

impl MakespanSummary {
    /// Arithmetic mean, sample standard deviation and geometric mean.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            count: n,
            mean_s: mean,
            std_s: std,
            geomean_s: geometric_mean(values),
        }
    }
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scheduler: SchedulerKind,
    pub groups: NodeGroupSet,
    pub disabled_nodes: Vec<String>,
    pub repetitions: Vec<RepetitionReport>,
    pub summary: MakespanSummary,
}

impl RunReport {
    pub fn measured(&self) -> impl Iterator<Item = &RepetitionReport> {
        self.repetitions.iter().filter(|r| !r.warmup)
    }

    pub fn measured_makespans(&self) -> Vec<f64> {
        self.measured().map(|r| r.makespan_s).collect()
    }

    /// Per-group instance counts summed over measured repetitions.
    pub fn measured_group_counts(&self) -> Vec<u64> {
        let mut out = vec![0; self.groups.len()];
        for r in self.measured() {
            for (o, c) in out.iter_mut().zip(&r.group_counts) {
                *o += c;
            }
        }
        out
    }

    pub fn audit(&self) -> impl Iterator<Item = &AuditRecord> {
        self.repetitions.iter().flat_map(|r| r.audit.iter())
    }

    pub const CSV_HEADER: [&'static str; 14] = [
        "row",
        "scheduler",
        "repetition",
        "warmup",
        "makespan_s",
        "instances",
        "wait_mean_s",
        "wait_max_s",
        "unknown_decisions",
        "group_counts",
        "group_busy_core_s",
        "mean_s",
        "std_s",
        "geomean_s",
    ];

    /// One row per repetition and a trailing summary row over the measured
    /// repetitions.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(";");
        for r in &self.repetitions {
            w.write_record([
                "rep".to_string(),
                self.scheduler.to_string(),
                r.index.to_string(),
                r.warmup.to_string(),
                r.makespan_s.to_string(),
                r.instances_executed.to_string(),
                r.wait_mean_s.to_string(),
                r.wait_max_s.to_string(),
                r.unknown_decisions.to_string(),
                join(&mut r.group_counts.iter().map(u64::to_string)),
                join(&mut r.group_busy_core_s.iter().map(f64::to_string)),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        let s = &self.summary;
        w.write_record([
            "summary".to_string(),
            self.scheduler.to_string(),
            s.count.to_string(),
            String::new(),
            String::new(),
            self.measured().map(|r| r.instances_executed).sum::<u64>().to_string(),
            String::new(),
            String::new(),
            self.measured().map(|r| r.unknown_decisions).sum::<u64>().to_string(),
            join(&mut self.measured_group_counts().iter().map(u64::to_string)),
            String::new(),
            s.mean_s.to_string(),
            s.std_s.to_string(),
            s.geomean_s.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }

    pub fn write_audit_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["instance_id", "scheduler", "group", "node", "score", "rationale", "sim_time"])?;
        for a in self.audit() {
            w.write_record([
                a.instance_id.clone(),
                a.scheduler.to_string(),
                a.group.to_string(),
                a.node.clone(),
                a.score.map(|s| s.to_string()).unwrap_or_default(),
                a.rationale.to_string(),
                a.sim_time.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Node groups and cluster as seen by a scenario after profiling and the
/// node-disable restriction.
pub struct PreparedCluster {
    pub cluster: ClusterSpec,
    pub groups: NodeGroupSet,
    pub disabled: BTreeSet<String>,
    pub ref_cpu_speed: f64,
}

/// Profiles the cluster, then disables ⌊fraction × size⌋ nodes per group.
pub fn prepare_cluster(
    cluster: &ClusterSpec,
    config: &ProfileConfig,
    disable_fraction: f64,
) -> Result<PreparedCluster> {
    let full = profile(cluster, config)?;
    let disabled = full.nodes_to_disable(disable_fraction);
    // Nodes disabled in the cluster file are not profiled; give them no group
    // and drop them from the simulated cluster.
    let mut restricted = ClusterSpec {
        nodes: cluster
            .nodes
            .iter()
            .filter(|n| n.enabled)
            .cloned()
            .collect(),
    };
    for n in &mut restricted.nodes {
        n.enabled = !disabled.contains(&n.node_id);
    }
    let groups = full.with_enabled_capacity(&restricted);
    let ref_cpu_speed = restricted
        .nodes
        .iter()
        .map(|n| n.bench.cpu_events_per_s)
        .fold(f64::MIN, f64::max);
    Ok(PreparedCluster {
        cluster: restricted,
        groups,
        disabled,
        ref_cpu_speed,
    })
}

/// Runs every repetition of `scenario`, appending traces to `store`.
pub fn run(scenario: &SimScenario, store: &mut TraceStore) -> Result<RunReport> {
    scenario.validate()?;
    let prepared = prepare_cluster(&scenario.cluster, &scenario.profile, scenario.disable_fraction)?;
    let workflows = scenario
        .workflows
        .iter()
        .map(|w| validate_workflow(w.dag.clone()))
        .collect::<Result<Vec<_>>>()?;
    let arrivals: Vec<f64> = scenario.workflows.iter().map(|w| w.arrival_s).collect();

    let initial_history = store.clone();
    let mut repetitions = Vec::new();
    for rep in 0..scenario.total_repetitions() {
        let warmup = scenario.warmup && rep == 0;
        let history = if scenario.warm_start {
            store.clone()
        } else {
            initial_history.clone()
        };
        let (report, traces) = Repetition::new(scenario, &prepared, &workflows, &arrivals, &history, rep)?
            .execute()?;
        let mut report = report;
        if !(warmup && !scenario.keep_warmup_traces) {
            for t in traces {
                store.record(t)?;
                report.traces_recorded += 1;
            }
        }
        report.warmup = warmup;
        repetitions.push(report);
    }

    let makespans: Vec<f64> = repetitions
        .iter()
        .filter(|r| !r.warmup)
        .map(|r| r.makespan_s)
        .collect();
    Ok(RunReport {
        scheduler: scenario.scheduler,
        groups: prepared.groups,
        disabled_nodes: prepared.disabled.into_iter().collect(),
        summary: MakespanSummary::from_values(&makespans),
        repetitions,
    })
}

enum Event {
    Arrival(usize),
    Finished(usize),
}

struct InstanceRt {
    inst: TaskInstance,
    workflow: usize,
    task: usize,
    node: Option<usize>,
    runtime_s: f64,
}

struct Repetition<'a> {
    scenario: &'a SimScenario,
    prepared: &'a PreparedCluster,
    workflows: &'a [ValidatedWorkflow],
    arrivals: &'a [f64],
    history: &'a TraceStore,
    rep: u32,
    state: ClusterState,
    scheduler: Scheduler,
    instances: Vec<InstanceRt>,
    /// instance indices per workflow and task
    task_instances: Vec<Vec<Vec<usize>>>,
    pending_preds: Vec<Vec<usize>>,
    remaining: Vec<Vec<u32>>,
    busy_cores: Vec<f64>,
    queue: Vec<usize>,
    events: EventQueue<Event>,
    traces: Vec<TaskTrace>,
    audit: Vec<AuditRecord>,
}

impl<'a> Repetition<'a> {
    fn new(
        scenario: &'a SimScenario,
        prepared: &'a PreparedCluster,
        workflows: &'a [ValidatedWorkflow],
        arrivals: &'a [f64],
        history: &'a TraceStore,
        rep: u32,
    ) -> Result<Self> {
        let state = ClusterState::new(&prepared.cluster, &prepared.groups)?;
        let mut order = state.enabled_indices();
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(rep as u64));
        order.shuffle(&mut rng);
        let scheduler = Scheduler::new(scenario.scheduler, order);

        let mut instances = Vec::new();
        let mut task_instances = Vec::new();
        for (w, wf) in workflows.iter().enumerate() {
            let run_id = format!("{}#r{rep}", wf.workflow_id());
            let mut per_task = Vec::new();
            for (t, task) in wf.dag.tasks.iter().enumerate() {
                let mut ids = Vec::new();
                for k in 0..task.instances {
                    ids.push(instances.len());
                    instances.push(InstanceRt {
                        inst: TaskInstance::new(
                            format!("{run_id}/{}/{k:05}", task.name),
                            task.name.clone(),
                            run_id.clone(),
                        ),
                        workflow: w,
                        task: t,
                        node: None,
                        runtime_s: 0.0,
                    });
                }
                per_task.push(ids);
            }
            task_instances.push(per_task);
        }

        let mut events = EventQueue::new();
        for (w, &t) in arrivals.iter().enumerate() {
            events.push(t, Event::Arrival(w));
        }

        Ok(Self {
            scenario,
            prepared,
            workflows,
            arrivals,
            history,
            rep,
            busy_cores: vec![0.0; state.len()],
            state,
            scheduler,
            instances,
            task_instances,
            pending_preds: workflows
                .iter()
                .map(|wf| wf.predecessors.iter().map(Vec::len).collect())
                .collect(),
            remaining: workflows
                .iter()
                .map(|wf| wf.dag.tasks.iter().map(|t| t.instances).collect())
                .collect(),
            queue: Vec::new(),
            events,
            traces: Vec::new(),
            audit: Vec::new(),
        })
    }

    fn execute(mut self) -> Result<(RepetitionReport, Vec<TaskTrace>)> {
        let groups = &self.prepared.groups;
        let mut labeler = Labeler::new(self.history, groups, self.scenario.trace_scope);
        while let Some((now, batch)) = self.events.pop_batch() {
            let mut newly_ready = Vec::new();
            for event in batch {
                match event {
                    Event::Arrival(w) => {
                        for t in 0..self.workflows[w].dag.tasks.len() {
                            if self.pending_preds[w][t] == 0 {
                                self.release_task(w, t, now, &mut newly_ready)?;
                            }
                        }
                    }
                    Event::Finished(i) => self.finish(i, now, &mut newly_ready)?,
                }
            }
            newly_ready.sort_by(|&a, &b| self.instances[a].inst.instance_id.cmp(&self.instances[b].inst.instance_id));
            self.queue.extend(newly_ready);
            self.schedule(now, &mut labeler)?;

            if self.events.is_empty() && !self.queue.is_empty() {
                let inst = &self.instances[self.queue[0]].inst;
                return Err(Error::Deadlock {
                    instance: inst.instance_id.clone(),
                    time: now,
                    reason: "is queued while nothing runs and no node accepts it".into(),
                });
            }
        }
        Ok(self.report())
    }

    fn release_task(&mut self, w: usize, t: usize, now: f64, ready: &mut Vec<usize>) -> Result<()> {
        let request = self.workflows[w].task(t).request;
        for &i in &self.task_instances[w][t] {
            let inst = &mut self.instances[i].inst;
            inst.mark_ready(now)?;
            inst.mark_queued()?;
            if !self.state.any_could_fit(&request) {
                return Err(Error::Deadlock {
                    instance: inst.instance_id.clone(),
                    time: now,
                    reason: format!("requests {request:?}, more than any enabled node offers"),
                });
            }
            ready.push(i);
        }
        Ok(())
    }

    fn finish(&mut self, i: usize, now: f64, ready: &mut Vec<usize>) -> Result<()> {
        let (w, t, node) = {
            let rt = &self.instances[i];
            (rt.workflow, rt.task, rt.node.expect("finished instance was placed"))
        };
        let task = self.workflows[w].task(t);
        self.state.release(node, &self.instances[i].inst.instance_id, &task.request)?;
        self.busy_cores[node] -= runtime::busy_cores(&task.behavior);
        if self.state.node(node).running.is_empty() {
            self.busy_cores[node] = 0.0;
        }
        self.instances[i].inst.mark_done(now)?;
        self.traces.push(TaskTrace {
            workflow_id: self.workflows[w].workflow_id().to_string(),
            task_name: task.name.clone(),
            runtime_s: self.instances[i].runtime_s,
            cpu_util_pct: task.behavior.cpu_util_pct,
            mem_gb_used: task.behavior.mem_gb_used,
            io_mb_per_s: task.behavior.io_mb_per_s,
            node_id: self.state.node(node).node_id.clone(),
            seq: 0,
        });

        self.remaining[w][t] -= 1;
        if self.remaining[w][t] == 0 {
            for &s in &self.workflows[w].successors[t] {
                self.pending_preds[w][s] -= 1;
                if self.pending_preds[w][s] == 0 {
                    self.release_task(w, s, now, ready)?;
                }
            }
        }
        Ok(())
    }

    fn schedule(&mut self, now: f64, labeler: &mut Labeler<'_>) -> Result<()> {
        if self.queue.is_empty() {
            return Ok(());
        }
        let offer: Vec<usize> = if self.scheduler.kind == SchedulerKind::Sjfn {
            let runtimes: Vec<Option<f64>> = self
                .queue
                .iter()
                .map(|&i| {
                    let rt = &self.instances[i];
                    self.history
                        .mean_runtime(self.workflows[rt.workflow].workflow_id(), &rt.inst.task_name)
                })
                .collect();
            sjfn_queue_order(&runtimes)
                .into_iter()
                .map(|pos| self.queue[pos])
                .collect()
        } else {
            self.queue.clone()
        };

        let mut placed = BTreeSet::new();
        for i in offer {
            let (w, t) = (self.instances[i].workflow, self.instances[i].task);
            let wf = &self.workflows[w];
            let task = wf.task(t);
            let labels = if self.scheduler.kind == SchedulerKind::Tarema {
                labeler.label(wf.workflow_id(), &task.name)?
            } else {
                TaskLabels::Unknown
            };
            let decision = self.scheduler.decide(
                &self.state,
                &self.prepared.groups,
                labels,
                &task.request,
                &self.instances[i].inst.instance_id,
            );
            if let Some(node) = decision.node {
                self.start(i, node, now, &decision)?;
                placed.insert(i);
            }
        }
        self.queue.retain(|i| !placed.contains(i));
        Ok(())
    }

    fn start(&mut self, i: usize, node: usize, now: f64, decision: &ScheduleDecision) -> Result<()> {
        let (w, t) = (self.instances[i].workflow, self.instances[i].task);
        let task = self.workflows[w].task(t);
        let spec = self
            .prepared
            .cluster
            .node(&self.state.node(node).node_id)
            .expect("state nodes come from the cluster");
        let runtime = effective_runtime(
            &task.behavior,
            spec,
            self.prepared.ref_cpu_speed,
            self.busy_cores[node],
            self.scenario.alpha,
        );
        self.state.allocate(node, &self.instances[i].inst.instance_id, &task.request)?;
        self.state.check_consistency()?;
        self.busy_cores[node] += runtime::busy_cores(&task.behavior);

        let rt = &mut self.instances[i];
        rt.inst.mark_running(&spec.node_id, now)?;
        rt.node = Some(node);
        rt.runtime_s = runtime;
        self.events.push(now + runtime, Event::Finished(i));
        self.audit.push(AuditRecord {
            repetition: self.rep,
            instance_id: rt.inst.instance_id.clone(),
            scheduler: self.scheduler.kind,
            group: self.state.node(node).group,
            node: spec.node_id.clone(),
            score: decision.score,
            rationale: decision.rationale,
            sim_time: now,
        });
        Ok(())
    }

    fn report(self) -> (RepetitionReport, Vec<TaskTrace>) {
        let k = self.prepared.groups.len();
        let mut group_counts = vec![0u64; k];
        let mut group_busy = vec![0.0; k];
        let mut waits = Vec::with_capacity(self.instances.len());
        let mut end = f64::MIN;
        for rt in &self.instances {
            let node = rt.node.expect("all instances ran");
            let g = self.state.node(node).group;
            group_counts[g] += 1;
            let task = self.workflows[rt.workflow].task(rt.task);
            group_busy[g] += task.request.cpus as f64 * rt.runtime_s;
            waits.push(rt.inst.start_time.unwrap() - rt.inst.submit_time.unwrap());
            end = end.max(rt.inst.end_time.unwrap());
        }
        let start = self.arrivals.iter().copied().fold(f64::MAX, f64::min);
        let unknown = self
            .audit
            .iter()
            .filter(|a| a.rationale == Rationale::UnknownLeastLoad)
            .count() as u64;
        let report = RepetitionReport {
            index: self.rep,
            warmup: false,
            makespan_s: end - start,
            instances_executed: self.instances.len() as u64,
            traces_recorded: 0,
            group_counts,
            group_busy_core_s: group_busy,
            wait_mean_s: waits.iter().sum::<f64>() / waits.len().max(1) as f64,
            wait_max_s: waits.iter().copied().fold(0.0, f64::max),
            unknown_decisions: unknown,
            audit: self.audit,
            instances: self.instances.into_iter().map(|rt| rt.inst).collect(),
        };
        (report, self.traces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BenchmarkVector, NodeSpec, ResourceRequest, TaskBehavior, TaskDef};

    fn node(id: &str, cpus: u32, speed: f64) -> NodeSpec {
        NodeSpec {
            node_id: id.into(),
            cpus,
            mem_gb: 1000.0,
            enabled: true,
            bench: BenchmarkVector {
                cpu_events_per_s: speed,
                ram_mib_per_s: 10_000.0,
                seq_read_iops: 481.0,
                seq_write_iops: 483.0,
                rnd_read_iops: 102.0,
                rnd_write_iops: 107.0,
            },
        }
    }

    fn task(name: &str, instances: u32, runtime: f64) -> TaskDef {
        TaskDef {
            name: name.into(),
            instances,
            request: ResourceRequest { cpus: 2, mem_gb: 5.0 },
            behavior: TaskBehavior {
                base_runtime_s: runtime,
                cpu_util_pct: 100.0,
                mem_gb_used: 1.0,
                io_mb_per_s: 1.0,
            },
        }
    }

    #[test]
    fn single_task_single_node() {
        let cluster = ClusterSpec {
            nodes: vec![node("a", 4, 400.0), node("b", 4, 400.0)],
        };
        let wf = WorkflowDag {
            workflow_id: "wf".into(),
            tasks: vec![task("x", 1, 42.0)],
            edges: vec![],
        };
        let mut sc = SimScenario::new(cluster, vec![wf], SchedulerKind::Fair);
        sc.alpha = 0.0;
        let mut store = TraceStore::new();
        let report = run(&sc, &mut store).unwrap();
        assert_eq!(report.repetitions[0].makespan_s, 42.0);
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn fork_join_on_one_large_node_follows_the_critical_path() {
        // A(10) -> B×2(20) -> C(5) -> {D(7), E(9)} -> F(3)
        let cluster = ClusterSpec {
            nodes: vec![node("big", 1000, 500.0), node("other", 1000, 500.0)],
        };
        let wf = WorkflowDag {
            workflow_id: "fig".into(),
            tasks: vec![
                task("A", 1, 10.0),
                task("B", 2, 20.0),
                task("C", 1, 5.0),
                task("D", 1, 7.0),
                task("E", 1, 9.0),
                task("F", 1, 3.0),
            ],
            edges: [("A", "B"), ("B", "C"), ("C", "D"), ("C", "E"), ("D", "F"), ("E", "F")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        };
        let mut sc = SimScenario::new(cluster, vec![wf], SchedulerKind::FillNodes);
        sc.alpha = 0.0;
        let report = run(&sc, &mut TraceStore::new()).unwrap();
        assert_eq!(report.repetitions[0].makespan_s, 10.0 + 20.0 + 5.0 + 9.0 + 3.0);
        assert_eq!(report.repetitions[0].instances_executed, 7);
    }

    #[test]
    fn oversized_request_is_a_deadlock() {
        let cluster = ClusterSpec {
            nodes: vec![node("a", 1, 400.0), node("b", 1, 400.0)],
        };
        let wf = WorkflowDag {
            workflow_id: "wf".into(),
            tasks: vec![task("x", 1, 1.0)],
            edges: vec![],
        };
        let sc = SimScenario::new(cluster, vec![wf], SchedulerKind::Tarema);
        match run(&sc, &mut TraceStore::new()) {
            Err(Error::Deadlock { instance, .. }) => assert!(instance.contains("/x/"), "{instance}"),
            other => panic!("expected deadlock, got {other:?}"),
        }
    }

    #[test]
    fn summary_statistics() {
        let s = MakespanSummary::from_values(&[2.0, 8.0]);
        assert_eq!(s.mean_s, 5.0);
        assert!((s.geomean_s - 4.0).abs() < 1e-12);
        assert!((s.std_s - 18f64.sqrt()).abs() < 1e-12);
    }
}
