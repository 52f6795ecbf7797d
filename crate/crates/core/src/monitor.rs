//! Task monitoring: a trace store of historic executions and task labeling
//! through capacity-weighted percentile intervals.
//!
//! For a feature, groups are sorted by their label and each contributes its
//! capacity share `m_i / Σ m_k` to a cumulative fraction `p_i`. The sorted
//! usage observations of the workflow are cut at those fractions, which gives
//! `n` half-open intervals `[0, v1) [v1, v2) … [v_{n-1}, ∞)`. A task's label is
//! the 1-based index of the interval its mean usage falls into.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TaskTrace;
use crate::profiler::{LabelVector, NodeGroupSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsageFeature {
    Cpu,
    Mem,
    Io,
}

impl UsageFeature {
    pub const ALL: [UsageFeature; 3] = [UsageFeature::Cpu, UsageFeature::Mem, UsageFeature::Io];

    pub fn of_trace(self, t: &TaskTrace) -> f64 {
        match self {
            UsageFeature::Cpu => t.cpu_util_pct,
            UsageFeature::Mem => t.mem_gb_used,
            UsageFeature::Io => t.io_mb_per_s,
        }
    }

    fn group_label(self, labels: LabelVector) -> u32 {
        match self {
            UsageFeature::Cpu => labels.cpu,
            UsageFeature::Mem => labels.mem,
            UsageFeature::Io => labels.io,
        }
    }
}

/// Running sums for one (workflow, task) key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskAggregate {
    pub count: u64,
    pub sum_runtime_s: f64,
    pub sum_cpu_util_pct: f64,
    pub sum_mem_gb_used: f64,
    pub sum_io_mb_per_s: f64,
}

impl TaskAggregate {
    fn add(&mut self, t: &TaskTrace) {
        self.count += 1;
        self.sum_runtime_s += t.runtime_s;
        self.sum_cpu_util_pct += t.cpu_util_pct;
        self.sum_mem_gb_used += t.mem_gb_used;
        self.sum_io_mb_per_s += t.io_mb_per_s;
    }

    fn mean(&self, sum: f64) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            sum / self.count as f64
        }
    }

    pub fn mean_runtime_s(&self) -> f64 {
        self.mean(self.sum_runtime_s)
    }

    pub fn mean_usage(&self, feature: UsageFeature) -> f64 {
        match feature {
            UsageFeature::Cpu => self.mean(self.sum_cpu_util_pct),
            UsageFeature::Mem => self.mean(self.sum_mem_gb_used),
            UsageFeature::Io => self.mean(self.sum_io_mb_per_s),
        }
    }
}

type TaskKey = (String, String);

/// Append-only store of task traces with per-task aggregates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceStore {
    traces: Vec<TaskTrace>,
    by_task: BTreeMap<TaskKey, TaskAggregate>,
    by_workflow: BTreeMap<String, Vec<usize>>,
    next_seq: u64,
}

impl TraceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn traces(&self) -> &[TaskTrace] {
        &self.traces
    }

    /// Appends a trace, stamping it with the next sequence number.
    pub fn record(&mut self, mut trace: TaskTrace) -> Result<u64> {
        trace.seq = self.next_seq;
        self.push(trace)
    }

    fn push(&mut self, trace: TaskTrace) -> Result<u64> {
        trace.validate()?;
        if trace.seq < self.next_seq {
            return Err(Error::invalid(
                "trace",
                format!("sequence {} is not after {}", trace.seq, self.next_seq),
            ));
        }
        let seq = trace.seq;
        self.next_seq = seq + 1;
        self.by_task
            .entry((trace.workflow_id.clone(), trace.task_name.clone()))
            .or_default()
            .add(&trace);
        self.by_workflow
            .entry(trace.workflow_id.clone())
            .or_default()
            .push(self.traces.len());
        self.traces.push(trace);
        Ok(seq)
    }

    pub fn aggregate(&self, workflow_id: &str, task_name: &str) -> Option<&TaskAggregate> {
        self.by_task
            .get(&(workflow_id.to_string(), task_name.to_string()))
    }

    pub fn mean_runtime(&self, workflow_id: &str, task_name: &str) -> Option<f64> {
        self.aggregate(workflow_id, task_name)
            .map(TaskAggregate::mean_runtime_s)
    }

    pub fn workflow_traces<'a>(&'a self, workflow_id: &str) -> impl Iterator<Item = &'a TaskTrace> + 'a {
        self.by_workflow
            .get(workflow_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.traces[i])
    }

    pub fn workflow_ids(&self) -> impl Iterator<Item = &str> {
        self.by_workflow.keys().map(String::as_str)
    }

    pub fn aggregates(&self) -> impl Iterator<Item = (&(String, String), &TaskAggregate)> {
        self.by_task.iter()
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "workflow_id",
        "task_name",
        "runtime_s",
        "cpu_util_pct",
        "mem_gb_used",
        "io_mb_per_s",
        "node_id",
        "seq",
    ];

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.traces.is_empty() {
            w.write_record(Self::CSV_HEADER)?;
        }
        for t in &self.traces {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().ne(Self::CSV_HEADER) {
            return Err(Error::invalid(
                "trace file",
                format!("unexpected header {headers:?}"),
            ));
        }
        let mut store = Self::new();
        for row in r.deserialize() {
            store.push(row?)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Loads the file if it exists, otherwise returns an empty store.
    pub fn load_or_default(path: impl AsRef<Path>) -> Result<Self> {
        if path.as_ref().exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }
}

/// Which tasks feed the percentile cut values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceScope {
    /// Only tasks of the workflow being labeled.
    #[default]
    SameWorkflow,
    /// Every task in the store.
    AllWorkflows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileBoundaries {
    pub feature: UsageFeature,
    /// p_0 = 0 … p_n = 1.
    pub fractions: Vec<f64>,
    /// v_{p_1} … v_{p_{n-1}}.
    pub cuts: Vec<f64>,
}

impl PercentileBoundaries {
    pub fn interval_count(&self) -> usize {
        self.cuts.len() + 1
    }

    /// 1-based interval index of `usage`; every cut is an inclusive lower
    /// bound of the interval above it.
    pub fn label_of(&self, usage: f64) -> u32 {
        1 + self.cuts.iter().filter(|&&c| c <= usage).count() as u32
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut lower = 0.0;
        let mut out = Vec::with_capacity(self.interval_count());
        for &c in &self.cuts {
            out.push((lower, c));
            lower = c;
        }
        out.push((lower, f64::INFINITY));
        out
    }
}

/// p_0 = 0, p_i = p_{i-1} + m_i / Σm, p_n = 1.
///
/// Each p_i is computed as a prefix sum over the total rather than by
/// accumulating rounded shares, and the last entry is pinned to exactly 1.
pub fn capacity_fractions(capacities: &[f64]) -> Vec<f64> {
    let total: f64 = capacities.iter().sum();
    let mut out = Vec::with_capacity(capacities.len() + 1);
    out.push(0.0);
    let mut prefix = 0.0;
    for (i, &m) in capacities.iter().enumerate() {
        prefix += m;
        if i + 1 == capacities.len() {
            out.push(1.0);
        } else {
            out.push(prefix / total);
        }
    }
    out
}

/// Lower nearest-rank quantile: element ⌈p·N⌉ − 1 of the sorted sample,
/// clamped into range. A small slack keeps p·N = 2.0000000000000004 at 2.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64 - 1e-9).ceil() as isize - 1;
    sorted[rank.clamp(0, n as isize - 1) as usize]
}

/// Capacity of a group for one feature: cores for CPU, GB for memory, node
/// count for I/O.
fn group_capacity(groups: &NodeGroupSet, g: usize, feature: UsageFeature) -> f64 {
    let group = &groups.groups[g];
    match feature {
        UsageFeature::Cpu => group.total_cpus as f64,
        UsageFeature::Mem => group.total_mem_gb,
        UsageFeature::Io => group.node_count as f64,
    }
}

/// Builds the percentile boundaries of `feature` from usage samples.
pub fn boundaries_from_samples(
    groups: &NodeGroupSet,
    feature: UsageFeature,
    samples: &mut [f64],
) -> Result<PercentileBoundaries> {
    if !groups.is_labeled() {
        return Err(Error::invalid("node groups", "groups are not labeled"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("usage samples", "empty sample"));
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&g| (feature.group_label(groups.groups[g].labels.unwrap()), g));
    let capacities: Vec<f64> = order
        .iter()
        .map(|&g| group_capacity(groups, g, feature))
        .collect();
    if capacities.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("node groups", "zero total capacity"));
    }
    let fractions = capacity_fractions(&capacities);

    samples.sort_by(f64::total_cmp);
    let n = fractions.len() - 1;
    let cuts = fractions[1..n]
        .iter()
        .map(|&p| nearest_rank(samples, p))
        .collect();
    Ok(PercentileBoundaries {
        feature,
        fractions,
        cuts,
    })
}

pub fn boundaries(
    groups: &NodeGroupSet,
    store: &TraceStore,
    workflow_id: &str,
    feature: UsageFeature,
) -> Result<PercentileBoundaries> {
    boundaries_scoped(groups, store, workflow_id, feature, TraceScope::SameWorkflow)
}

pub fn boundaries_scoped(
    groups: &NodeGroupSet,
    store: &TraceStore,
    workflow_id: &str,
    feature: UsageFeature,
    scope: TraceScope,
) -> Result<PercentileBoundaries> {
    // One sample per task: its mean usage over all recorded traces.
    let mut samples: Vec<f64> = store
        .aggregates()
        .filter(|((wf, _), _)| scope == TraceScope::AllWorkflows || wf == workflow_id)
        .map(|(_, agg)| agg.mean_usage(feature))
        .collect();
    if samples.is_empty() {
        return Err(Error::NoTraces(workflow_id.to_string()));
    }
    boundaries_from_samples(groups, feature, &mut samples)
}

/// Demand labels of a task; either all features are known or none is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskLabels {
    Known(LabelVector),
    Unknown,
}

impl TaskLabels {
    pub fn known(&self) -> Option<LabelVector> {
        match self {
            TaskLabels::Known(l) => Some(*l),
            TaskLabels::Unknown => None,
        }
    }
}

pub fn label_task(
    store: &TraceStore,
    groups: &NodeGroupSet,
    workflow_id: &str,
    task_name: &str,
) -> Result<TaskLabels> {
    Labeler::new(store, groups, TraceScope::SameWorkflow).label(workflow_id, task_name)
}

/// Labels tasks against a fixed store, caching boundaries per workflow.
///
/// The cache is valid because the borrowed store cannot change while the
/// labeler is alive; results are identical to recomputing per call.
pub struct Labeler<'a> {
    store: &'a TraceStore,
    groups: &'a NodeGroupSet,
    scope: TraceScope,
    cache: BTreeMap<String, Option<[PercentileBoundaries; 3]>>,
}

impl<'a> Labeler<'a> {
    pub fn new(store: &'a TraceStore, groups: &'a NodeGroupSet, scope: TraceScope) -> Self {
        Self {
            store,
            groups,
            scope,
            cache: BTreeMap::new(),
        }
    }

    pub fn boundaries(&mut self, workflow_id: &str) -> Result<Option<&[PercentileBoundaries; 3]>> {
        if !self.cache.contains_key(workflow_id) {
            let computed = match boundaries_scoped(
                self.groups,
                self.store,
                workflow_id,
                UsageFeature::Cpu,
                self.scope,
            ) {
                Err(Error::NoTraces(_)) => None,
                Err(e) => return Err(e),
                Ok(cpu) => {
                    let bound = |f| boundaries_scoped(self.groups, self.store, workflow_id, f, self.scope);
                    Some([cpu, bound(UsageFeature::Mem)?, bound(UsageFeature::Io)?])
                }
            };
            self.cache.insert(workflow_id.to_string(), computed);
        }
        Ok(self.cache[workflow_id].as_ref())
    }

    pub fn label(&mut self, workflow_id: &str, task_name: &str) -> Result<TaskLabels> {
        let Some(agg) = self.store.aggregate(workflow_id, task_name).copied() else {
            return Ok(TaskLabels::Unknown);
        };
        let Some(bounds) = self.boundaries(workflow_id)? else {
            return Ok(TaskLabels::Unknown);
        };
        let [cpu, mem, io] = bounds;
        Ok(TaskLabels::Known(LabelVector::new(
            cpu.label_of(agg.mean_usage(UsageFeature::Cpu)),
            mem.label_of(agg.mean_usage(UsageFeature::Mem)),
            io.label_of(agg.mean_usage(UsageFeature::Io)),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::{GroupMeans, NodeGroup};

    pub(crate) fn trace(wf: &str, task: &str, cpu: f64) -> TaskTrace {
        TaskTrace {
            workflow_id: wf.into(),
            task_name: task.into(),
            runtime_s: 10.0,
            cpu_util_pct: cpu,
            mem_gb_used: 1.0,
            io_mb_per_s: 2.0,
            node_id: "n1".into(),
            seq: 0,
        }
    }

    fn groups(cpus: &[u32]) -> NodeGroupSet {
        let means = GroupMeans {
            cpu_events_per_s: 1.0,
            ram_mib_per_s: 1.0,
            seq_iops: 1.0,
            rnd_iops: 1.0,
            io_score: 1.0,
        };
        NodeGroupSet {
            k: cpus.len(),
            groups: cpus
                .iter()
                .enumerate()
                .map(|(i, &c)| NodeGroup {
                    index: i,
                    members: vec![format!("n{i}")],
                    node_count: 1,
                    total_cpus: c,
                    total_mem_gb: 4.0 * c as f64,
                    means,
                    labels: Some(LabelVector::new(i as u32 + 1, i as u32 + 1, 1)),
                })
                .collect(),
            membership: BTreeMap::new(),
            scores: Vec::new(),
            fallback: false,
        }
    }

    #[test]
    fn first_trace_sets_means() {
        let mut store = TraceStore::new();
        store.record(trace("wfA", "align", 150.0)).unwrap();
        let agg = store.aggregate("wfA", "align").unwrap();
        assert_eq!(agg.count, 1);
        assert_eq!(agg.mean_usage(UsageFeature::Cpu), 150.0);
        assert_eq!(agg.mean_runtime_s(), 10.0);
    }

    #[test]
    fn mean_of_two_traces() {
        let mut store = TraceStore::new();
        store.record(trace("wf", "t", 100.0)).unwrap();
        store.record(trace("wf", "t", 300.0)).unwrap();
        assert_eq!(store.aggregate("wf", "t").unwrap().mean_usage(UsageFeature::Cpu), 200.0);
    }

    #[test]
    fn record_stamps_monotone_sequence() {
        let mut store = TraceStore::new();
        let a = store.record(trace("wf", "t", 1.0)).unwrap();
        let b = store.record(trace("wf", "t", 1.0)).unwrap();
        assert!(b > a);
        let mut bad = trace("wf", "t", 1.0);
        bad.runtime_s = 0.0;
        assert!(store.record(bad).is_err());
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn equal_thirds_for_equal_capacity() {
        assert_eq!(
            capacity_fractions(&[40.0, 40.0, 40.0]),
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
        );
        assert_eq!(capacity_fractions(&[8.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn single_group_has_one_unbounded_interval() {
        let g = groups(&[40]);
        let b = boundaries_from_samples(&g, UsageFeature::Cpu, &mut [5.0, 50.0]).unwrap();
        assert_eq!(b.fractions, vec![0.0, 1.0]);
        assert!(b.cuts.is_empty());
        assert_eq!(b.intervals(), vec![(0.0, f64::INFINITY)]);
        assert_eq!(b.label_of(1e9), 1);
    }

    #[test]
    fn cuts_at_54_and_112() {
        // Capacities 20/30/50 -> p = (0, .2, .5, 1). With ten samples the
        // nearest-rank cuts are sample[1] and sample[4].
        let g = groups(&[20, 30, 50]);
        let mut samples = [10.0, 54.0, 60.0, 80.0, 112.0, 150.0, 180.0, 210.0, 230.0, 250.0];
        let b = boundaries_from_samples(&g, UsageFeature::Cpu, &mut samples).unwrap();
        assert_eq!(b.cuts, vec![54.0, 112.0]);
        assert_eq!(
            b.intervals(),
            vec![(0.0, 54.0), (54.0, 112.0), (112.0, f64::INFINITY)]
        );
        assert_eq!(b.label_of(210.0), 3);
    }

    #[test]
    fn value_at_cut_falls_into_upper_interval() {
        let b = PercentileBoundaries {
            feature: UsageFeature::Cpu,
            fractions: vec![0.0, 0.5, 1.0],
            cuts: vec![54.0],
        };
        // Brute force the interval definition around the cut.
        for (v, expected) in [(53.0, 1), (53.999999, 1), (54.0, 2), (54.000001, 2)] {
            let by_definition = b
                .intervals()
                .iter()
                .position(|&(lo, hi)| lo <= v && v < hi)
                .unwrap() as u32
                + 1;
            assert_eq!(by_definition, expected);
            assert_eq!(b.label_of(v), expected, "usage {v}");
        }
    }

    #[test]
    fn unknown_without_history() {
        let g = groups(&[8, 8]);
        let store = TraceStore::new();
        assert_eq!(label_task(&store, &g, "wf", "t").unwrap(), TaskLabels::Unknown);
    }

    #[test]
    fn no_traces_error_for_boundaries() {
        let g = groups(&[8, 8]);
        let err = boundaries(&g, &TraceStore::new(), "wf", UsageFeature::Cpu).unwrap_err();
        assert!(matches!(err, Error::NoTraces(_)));
    }

    #[test]
    fn labels_rank_tasks_by_usage() {
        let g = groups(&[8, 8]);
        let mut store = TraceStore::new();
        store.record(trace("wf", "light", 20.0)).unwrap();
        store.record(trace("wf", "light", 40.0)).unwrap();
        store.record(trace("wf", "mid", 100.0)).unwrap();
        store.record(trace("wf", "heavy", 190.0)).unwrap();
        store.record(trace("other", "x", 1000.0)).unwrap();
        // Per-task means (30, 100, 190); p = 0.5 cuts at the second one.
        let light = label_task(&store, &g, "wf", "light").unwrap().known().unwrap();
        let heavy = label_task(&store, &g, "wf", "heavy").unwrap().known().unwrap();
        assert_eq!(light.cpu, 1);
        assert_eq!(heavy.cpu, 2);

        // The other workflow adds a sample above every cut.
        let b = boundaries_scoped(&g, &store, "wf", UsageFeature::Cpu, TraceScope::AllWorkflows).unwrap();
        assert_eq!(b.cuts, vec![100.0]);
        let mut all = Labeler::new(&store, &g, TraceScope::AllWorkflows);
        assert_eq!(all.label("wf", "light").unwrap().known().unwrap().cpu, 1);
        let mut near = Labeler::new(&store, &g, TraceScope::SameWorkflow);
        assert_eq!(near.label("wf", "mid").unwrap().known().unwrap().cpu, 2);
    }

    #[test]
    fn csv_round_trip_keeps_labels() {
        let g = groups(&[8, 16, 8]);
        let mut store = TraceStore::new();
        for (i, task) in ["a", "b", "c", "d"].iter().enumerate() {
            store.record(trace("wf", task, 40.0 * i as f64 + 5.0)).unwrap();
        }
        let mut buf = Vec::new();
        store.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "workflow_id,task_name,runtime_s,cpu_util_pct,mem_gb_used,io_mb_per_s,node_id,seq\n"
        ));
        let loaded = TraceStore::read_csv(buf.as_slice()).unwrap();
        assert_eq!(loaded, store);
        for task in ["a", "b", "c", "d"] {
            assert_eq!(
                label_task(&store, &g, "wf", task).unwrap(),
                label_task(&loaded, &g, "wf", task).unwrap()
            );
        }
    }

    #[test]
    fn empty_store_csv_has_header() {
        let mut buf = Vec::new();
        TraceStore::new().write_csv(&mut buf).unwrap();
        let loaded = TraceStore::read_csv(buf.as_slice()).unwrap();
        assert!(loaded.is_empty());
    }
}
