//! Domain types shared by the profiler, monitor, allocator and simulator.
//!
//! Everything here is plain data plus validation. Types are immutable once
//! validated and can be shared freely between threads.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Microbenchmark measurements for one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkVector {
    pub cpu_events_per_s: f64,
    pub ram_mib_per_s: f64,
    pub seq_read_iops: f64,
    pub seq_write_iops: f64,
    pub rnd_read_iops: f64,
    pub rnd_write_iops: f64,
}

impl BenchmarkVector {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cpu_events_per_s", self.cpu_events_per_s),
            ("ram_mib_per_s", self.ram_mib_per_s),
            ("seq_read_iops", self.seq_read_iops),
            ("seq_write_iops", self.seq_write_iops),
            ("rnd_read_iops", self.rnd_read_iops),
            ("rnd_write_iops", self.rnd_write_iops),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    "benchmark vector",
                    format!("{name} must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Mean of sequential read and write IOPS.
    pub fn seq_iops(&self) -> f64 {
        (self.seq_read_iops + self.seq_write_iops) / 2.0
    }

    /// Mean of random read and write IOPS.
    pub fn rnd_iops(&self) -> f64 {
        (self.rnd_read_iops + self.rnd_write_iops) / 2.0
    }

    /// Single I/O figure used for the I/O rank label.
    pub fn io_score(&self) -> f64 {
        (self.seq_iops() + self.rnd_iops()) / 2.0
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(rename = "id")]
    pub node_id: String,
    pub cpus: u32,
    pub mem_gb: f64,
    #[serde(default = "default_true")]
    pub enabled: bool,
    pub bench: BenchmarkVector,
}

impl NodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_id.is_empty() {
            return Err(Error::invalid("node", "empty node id"));
        }
        if self.cpus == 0 {
            return Err(Error::invalid(
                format!("node `{}`", self.node_id),
                "cpus must be >= 1",
            ));
        }
        if !(self.mem_gb.is_finite() && self.mem_gb > 0.0) {
            return Err(Error::invalid(
                format!("node `{}`", self.node_id),
                format!("mem_gb must be > 0, got {}", self.mem_gb),
            ));
        }
        self.bench
            .validate()
            .map_err(|e| Error::invalid(format!("node `{}`", self.node_id), e.to_string()))
    }
}

/// Contents of a cluster description file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub nodes: Vec<NodeSpec>,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            node.validate()?;
            if !seen.insert(node.node_id.as_str()) {
                return Err(Error::invalid(
                    "cluster",
                    format!("duplicate node id `{}`", node.node_id),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ClusterSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn enabled_nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.enabled)
    }

    pub fn node(&self, node_id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.node_id == node_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceRequest {
    pub cpus: u32,
    pub mem_gb: f64,
}

impl ResourceRequest {
    pub fn validate(&self) -> Result<()> {
        if self.cpus == 0 || !(self.mem_gb.is_finite() && self.mem_gb > 0.0) {
            return Err(Error::invalid(
                "resource request",
                format!("need cpus >= 1 and mem_gb > 0, got {self:?}"),
            ));
        }
        Ok(())
    }
}

impl Default for ResourceRequest {
    fn default() -> Self {
        Self {
            cpus: 2,
            mem_gb: 5.0,
        }
    }
}

/// How an instance of a task behaves when it runs.
///
/// `cpu_util_pct` follows the ps convention: 210 means two full cores and a
/// tenth of a third one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskBehavior {
    pub base_runtime_s: f64,
    pub cpu_util_pct: f64,
    pub mem_gb_used: f64,
    pub io_mb_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub name: String,
    pub instances: u32,
    #[serde(flatten)]
    pub request: ResourceRequest,
    #[serde(flatten)]
    pub behavior: TaskBehavior,
}

impl TaskDef {
    pub fn validate(&self) -> Result<()> {
        let what = || format!("task `{}`", self.name);
        if self.name.is_empty() {
            return Err(Error::invalid("task", "empty task name"));
        }
        if self.instances == 0 {
            return Err(Error::invalid(what(), "instances must be >= 1"));
        }
        self.request
            .validate()
            .map_err(|e| Error::invalid(what(), e.to_string()))?;
        let b = &self.behavior;
        if !(b.base_runtime_s.is_finite() && b.base_runtime_s > 0.0) {
            return Err(Error::invalid(what(), "base_runtime_s must be > 0"));
        }
        for (name, v) in [
            ("cpu_util_pct", b.cpu_util_pct),
            ("mem_gb_used", b.mem_gb_used),
            ("io_mb_per_s", b.io_mb_per_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(what(), format!("{name} must be >= 0")));
            }
        }
        if b.cpu_util_pct > 100.0 * self.request.cpus as f64 {
            return Err(Error::invalid(
                what(),
                format!("cpu_util_pct {} exceeds 100 × {} reserved cpus", b.cpu_util_pct, self.request.cpus),
            ));
        }
        Ok(())
    }
}

/// A workflow W(T, E): abstract tasks plus precedence edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowDag {
    pub workflow_id: String,
    pub tasks: Vec<TaskDef>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

impl WorkflowDag {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn total_instances(&self) -> u64 {
        self.tasks.iter().map(|t| t.instances as u64).sum()
    }
}

/// A workflow that passed [`validate_workflow`], with precomputed adjacency
/// (by task index) and a deterministic topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedWorkflow {
    pub dag: WorkflowDag,
    pub predecessors: Vec<Vec<usize>>,
    pub successors: Vec<Vec<usize>>,
    pub topo_order: Vec<usize>,
}

impl ValidatedWorkflow {
    pub fn workflow_id(&self) -> &str {
        &self.dag.workflow_id
    }

    pub fn task(&self, idx: usize) -> &TaskDef {
        &self.dag.tasks[idx]
    }

    pub fn topo_names(&self) -> Vec<&str> {
        self.topo_order
            .iter()
            .map(|&i| self.dag.tasks[i].name.as_str())
            .collect()
    }
}

pub fn validate_workflow(dag: WorkflowDag) -> Result<ValidatedWorkflow> {
    if dag.tasks.is_empty() {
        return Err(Error::invalid(
            format!("workflow `{}`", dag.workflow_id),
            "no tasks",
        ));
    }
    let mut index = BTreeMap::new();
    for (i, task) in dag.tasks.iter().enumerate() {
        task.validate()?;
        if index.insert(task.name.as_str(), i).is_some() {
            return Err(Error::invalid(
                format!("workflow `{}`", dag.workflow_id),
                format!("duplicate task name `{}`", task.name),
            ));
        }
    }

    let n = dag.tasks.len();
    let mut predecessors = vec![Vec::new(); n];
    let mut successors = vec![Vec::new(); n];
    for (from, to) in &dag.edges {
        let lookup = |name: &String| {
            index.get(name.as_str()).copied().ok_or_else(|| Error::DanglingEdge {
                workflow: dag.workflow_id.clone(),
                from: from.clone(),
                to: to.clone(),
                missing: name.clone(),
            })
        };
        let (a, b) = (lookup(from)?, lookup(to)?);
        if !successors[a].contains(&b) {
            successors[a].push(b);
            predecessors[b].push(a);
        }
    }
    for list in predecessors.iter_mut().chain(successors.iter_mut()) {
        list.sort_unstable();
    }

    if let Some((a, b)) = find_back_edge(&successors) {
        return Err(Error::Cycle {
            workflow: dag.workflow_id.clone(),
            from: dag.tasks[a].name.clone(),
            to: dag.tasks[b].name.clone(),
        });
    }

    // Kahn's algorithm, always releasing the lowest ready index first.
    let mut indegree: Vec<usize> = predecessors.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut topo_order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        topo_order.push(i);
        for &s in &successors[i] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    debug_assert_eq!(topo_order.len(), n);

    Ok(ValidatedWorkflow {
        dag,
        predecessors,
        successors,
        topo_order,
    })
}

/// Iterative DFS; returns an edge that closes a cycle, if any.
fn find_back_edge(successors: &[Vec<usize>]) -> Option<(usize, usize)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let n = successors.len();
    let mut color = vec![Color::White; n];
    for root in 0..n {
        if color[root] != Color::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = Color::Gray;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&succ) = successors[node].get(*next) {
                *next += 1;
                match color[succ] {
                    Color::Gray => return Some((node, succ)),
                    Color::White => {
                        color[succ] = Color::Gray;
                        stack.push((succ, 0));
                    }
                    Color::Black => {}
                }
            } else {
                color[node] = Color::Black;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceState {
    Pending,
    Ready,
    Queued,
    Running,
    Done,
}

/// One data-parallel execution of a task within a workflow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub instance_id: String,
    pub task_name: String,
    pub workflow_run_id: String,
    pub state: InstanceState,
    pub assigned_node: Option<String>,
    pub submit_time: Option<f64>,
    pub start_time: Option<f64>,
    pub end_time: Option<f64>,
}

impl TaskInstance {
    pub fn new(
        instance_id: impl Into<String>,
        task_name: impl Into<String>,
        workflow_run_id: impl Into<String>,
    ) -> Self {
        Self {
            instance_id: instance_id.into(),
            task_name: task_name.into(),
            workflow_run_id: workflow_run_id.into(),
            state: InstanceState::Pending,
            assigned_node: None,
            submit_time: None,
            start_time: None,
            end_time: None,
        }
    }

    fn step(&mut self, from: InstanceState, to: InstanceState) -> Result<()> {
        if self.state != from {
            return Err(Error::invalid(
                format!("instance `{}`", self.instance_id),
                format!("transition to {to:?} requires state {from:?}, found {:?}", self.state),
            ));
        }
        self.state = to;
        Ok(())
    }

    pub fn mark_ready(&mut self, now: f64) -> Result<()> {
        self.step(InstanceState::Pending, InstanceState::Ready)?;
        self.submit_time = Some(now);
        Ok(())
    }

    pub fn mark_queued(&mut self) -> Result<()> {
        self.step(InstanceState::Ready, InstanceState::Queued)
    }

    pub fn mark_running(&mut self, node_id: &str, now: f64) -> Result<()> {
        self.step(InstanceState::Queued, InstanceState::Running)?;
        self.assigned_node = Some(node_id.to_string());
        self.start_time = Some(now);
        Ok(())
    }

    pub fn mark_done(&mut self, now: f64) -> Result<()> {
        self.step(InstanceState::Running, InstanceState::Done)?;
        self.end_time = Some(now);
        Ok(())
    }

    /// submit <= start <= end for whichever timestamps are present.
    pub fn timeline_is_monotone(&self) -> bool {
        let ordered = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        };
        ordered(self.submit_time, self.start_time) && ordered(self.start_time, self.end_time)
    }
}

/// One observed execution of a task, as stored by the monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTrace {
    pub workflow_id: String,
    pub task_name: String,
    pub runtime_s: f64,
    pub cpu_util_pct: f64,
    pub mem_gb_used: f64,
    pub io_mb_per_s: f64,
    pub node_id: String,
    pub seq: u64,
}

impl TaskTrace {
    pub fn validate(&self) -> Result<()> {
        if !(self.runtime_s.is_finite() && self.runtime_s > 0.0) {
            return Err(Error::invalid("trace", "runtime_s must be > 0"));
        }
        for (name, v) in [
            ("cpu_util_pct", self.cpu_util_pct),
            ("mem_gb_used", self.mem_gb_used),
            ("io_mb_per_s", self.io_mb_per_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("trace", format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}
