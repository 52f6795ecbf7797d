//! Task-to-node allocation.
//!
//! The label-matching allocator scores every node group against a task with
//! the L1 distance of their label vectors and places the task in the best
//! feasible group. Four label-agnostic or runtime-driven baselines live in
//! [`baselines`].

pub mod baselines;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ResourceRequest;
use crate::monitor::TaskLabels;
use crate::profiler::{LabelVector, NodeGroupSet};

pub use baselines::{fair_pick, fill_nodes_pick, round_robin_pick, sjfn_pick, sjfn_queue_order};
pub use state::{ClusterState, NodeSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "tarema")]
    Tarema,
    #[serde(rename = "rr")]
    RoundRobin,
    #[serde(rename = "fair")]
    Fair,
    #[serde(rename = "fill")]
    FillNodes,
    #[serde(rename = "sjfn")]
    Sjfn,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Tarema,
        SchedulerKind::RoundRobin,
        SchedulerKind::Fair,
        SchedulerKind::FillNodes,
        SchedulerKind::Sjfn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Tarema => "tarema",
            SchedulerKind::RoundRobin => "rr",
            SchedulerKind::Fair => "fair",
            SchedulerKind::FillNodes => "fill",
            SchedulerKind::Sjfn => "sjfn",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "scheduler",
                    format!("unknown scheduler `{s}` (expected tarema|rr|fair|fill|sjfn)"),
                )
            })
    }
}

/// Why a node was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rationale {
    PreferredGroup,
    TieMostPowerful,
    UnknownLeastLoad,
    FallbackNextBest,
    Baseline(SchedulerKind),
    Wait,
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rationale::PreferredGroup => f.write_str("preferred-group"),
            Rationale::TieMostPowerful => f.write_str("tie-most-powerful"),
            Rationale::UnknownLeastLoad => f.write_str("unknown-least-load"),
            Rationale::FallbackNextBest => f.write_str("fallback-next-best"),
            Rationale::Baseline(kind) => f.write_str(kind.name()),
            Rationale::Wait => f.write_str("wait"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDecision {
    pub instance_id: String,
    /// Index into [`ClusterState::nodes`]; `None` means wait.
    pub node: Option<usize>,
    pub group: Option<usize>,
    pub score: Option<u32>,
    pub rationale: Rationale,
}

impl ScheduleDecision {
    fn wait(instance_id: &str) -> Self {
        Self {
            instance_id: instance_id.to_string(),
            node: None,
            group: None,
            score: None,
            rationale: Rationale::Wait,
        }
    }

    pub fn is_wait(&self) -> bool {
        self.node.is_none()
    }
}

/// f(n, t) = Σ_k |n_k − t_k|.
pub fn score(group_labels: &[u32], task_labels: &[u32]) -> Result<u32> {
    if group_labels.len() != task_labels.len() {
        return Err(Error::ArityMismatch {
            group: group_labels.len(),
            task: task_labels.len(),
        });
    }
    Ok(group_labels
        .iter()
        .zip(task_labels)
        .map(|(&n, &t)| n.abs_diff(t))
        .sum())
}

fn score_vectors(group: LabelVector, task: LabelVector) -> u32 {
    score(&group.as_array(), &task.as_array()).expect("fixed arity")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub group: usize,
    pub score: u32,
    pub power: u32,
    pub feasible: bool,
}

/// All group/task pairs ordered by ascending score, then descending group
/// power, then group index.
pub fn priority_list(
    state: &ClusterState,
    groups: &NodeGroupSet,
    task: LabelVector,
    request: &ResourceRequest,
) -> Vec<CandidatePair> {
    let mut pairs: Vec<CandidatePair> = groups
        .groups
        .iter()
        .enumerate()
        .filter_map(|(g, group)| {
            let labels = group.labels?;
            Some(CandidatePair {
                group: g,
                score: score_vectors(labels, task),
                power: labels.sum(),
                feasible: state.group_feasible(g, request),
            })
        })
        .collect();
    pairs.sort_by_key(|p| (p.score, std::cmp::Reverse(p.power), p.group));
    pairs
}

/// Label-matching placement.
///
/// Known labels: the feasible group with the lowest score wins, ties going to
/// the larger label sum and then the lower group index; inside the group the
/// least-loaded node wins. Unknown labels: least-loaded feasible node overall.
pub fn tarema_pick(
    state: &ClusterState,
    groups: &NodeGroupSet,
    labels: TaskLabels,
    request: &ResourceRequest,
    instance_id: &str,
) -> ScheduleDecision {
    let task = match labels {
        TaskLabels::Known(task) => task,
        TaskLabels::Unknown => {
            return match state.least_loaded(0..state.len(), request) {
                Some(node) => ScheduleDecision {
                    instance_id: instance_id.to_string(),
                    node: Some(node),
                    group: Some(state.node(node).group),
                    score: None,
                    rationale: Rationale::UnknownLeastLoad,
                },
                None => ScheduleDecision::wait(instance_id),
            };
        }
    };

    let pairs = priority_list(state, groups, task, request);
    let Some(global_min) = pairs.first().map(|p| p.score) else {
        return ScheduleDecision::wait(instance_id);
    };
    let Some(best) = pairs.iter().find(|p| p.feasible) else {
        return ScheduleDecision::wait(instance_id);
    };
    let members = (0..state.len()).filter(|&i| state.node(i).group == best.group);
    let node = state
        .least_loaded(members, request)
        .expect("feasible group has a fitting node");
    let rationale = if best.score > global_min {
        Rationale::FallbackNextBest
    } else if pairs
        .iter()
        .filter(|p| p.feasible && p.score == best.score)
        .count()
        > 1
    {
        Rationale::TieMostPowerful
    } else {
        Rationale::PreferredGroup
    };
    ScheduleDecision {
        instance_id: instance_id.to_string(),
        node: Some(node),
        group: Some(best.group),
        score: Some(best.score),
        rationale,
    }
}

/// A scheduler instance holding the per-run state the baselines need (the
/// shuffled node list and the round-robin cursor).
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub kind: SchedulerKind,
    order: Vec<usize>,
    cursor: usize,
}

impl Scheduler {
    /// `node_order` is the (shuffled) node list over [`ClusterState`]
    /// indices used by round-robin, fair and fill-nodes.
    pub fn new(kind: SchedulerKind, node_order: Vec<usize>) -> Self {
        Self {
            kind,
            order: node_order,
            cursor: 0,
        }
    }

    pub fn node_order(&self) -> &[usize] {
        &self.order
    }

    pub fn decide(
        &mut self,
        state: &ClusterState,
        groups: &NodeGroupSet,
        labels: TaskLabels,
        request: &ResourceRequest,
        instance_id: &str,
    ) -> ScheduleDecision {
        let node = match self.kind {
            SchedulerKind::Tarema => {
                return tarema_pick(state, groups, labels, request, instance_id)
            }
            SchedulerKind::RoundRobin => {
                round_robin_pick(state, &self.order, &mut self.cursor, request)
            }
            SchedulerKind::Fair => fair_pick(state, &self.order, request),
            SchedulerKind::FillNodes => fill_nodes_pick(state, &self.order, request),
            SchedulerKind::Sjfn => sjfn_pick(state, groups, request),
        };
        match node {
            Some(node) => ScheduleDecision {
                instance_id: instance_id.to_string(),
                node: Some(node),
                group: Some(state.node(node).group),
                score: None,
                rationale: Rationale::Baseline(self.kind),
            },
            None => ScheduleDecision::wait(instance_id),
        }
    }
}
