//! Infrastructure profiling: group nodes by benchmark similarity and give
//! every group a rank label per feature (1 = weakest).
//!
//! The pipeline is [`normalize_features`] → [`cluster_nodes`] →
//! [`group_nodes`] → [`rank_and_label`]; [`profile`] runs all of it.

pub mod ingest;
pub mod kmeans;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BenchmarkVector, ClusterSpec, NodeSpec};

/// Columns with a relative standard deviation below this are treated as
/// constant and zeroed, so measurement jitter is not amplified to unit
/// variance by the z-score.
pub const CONSTANT_REL_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Cpu,
    Ram,
    SeqIo,
    RndIo,
}

impl Feature {
    pub const DEFAULT: [Feature; 4] = [Feature::Cpu, Feature::Ram, Feature::SeqIo, Feature::RndIo];

    pub fn value(self, bench: &BenchmarkVector) -> f64 {
        match self {
            Feature::Cpu => bench.cpu_events_per_s,
            Feature::Ram => bench.ram_mib_per_s,
            Feature::SeqIo => bench.seq_iops(),
            Feature::RndIo => bench.rnd_iops(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub features: Vec<Feature>,
    pub k_max: usize,
    pub restarts: usize,
    pub silhouette_floor: f64,
    /// Relative difference under which two group means share a rank label.
    pub tie_tolerance: f64,
    pub seed: u64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            features: Feature::DEFAULT.to_vec(),
            k_max: 6,
            restarts: 10,
            silhouette_floor: 0.25,
            tie_tolerance: 0.02,
            seed: 0,
        }
    }
}

/// z-scored feature rows, one per enabled node, ordered by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub node_ids: Vec<String>,
    pub features: Vec<Feature>,
    pub rows: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub constant: Vec<bool>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn distinct_rows(&self) -> usize {
        let mut seen: Vec<&Vec<f64>> = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row) {
                seen.push(row);
            }
        }
        seen.len()
    }
}

pub fn normalize_features(nodes: &[NodeSpec], features: &[Feature]) -> Result<FeatureMatrix> {
    if features.is_empty() {
        return Err(Error::invalid("feature selection", "no features selected"));
    }
    let mut enabled: Vec<&NodeSpec> = nodes.iter().filter(|n| n.enabled).collect();
    if enabled.len() < 2 {
        return Err(Error::TooFewNodes(enabled.len()));
    }
    enabled.sort_by(|a, b| a.node_id.cmp(&b.node_id));

    let n = enabled.len() as f64;
    let raw: Vec<Vec<f64>> = enabled
        .iter()
        .map(|node| features.iter().map(|f| f.value(&node.bench)).collect())
        .collect();

    let mut means = Vec::with_capacity(features.len());
    let mut std_devs = Vec::with_capacity(features.len());
    let mut constant = Vec::with_capacity(features.len());
    for col in 0..features.len() {
        let mean = raw.iter().map(|r| r[col]).sum::<f64>() / n;
        let var = raw.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        means.push(mean);
        std_devs.push(sd);
        constant.push(sd <= CONSTANT_REL_STD * mean.abs());
    }

    let rows = raw
        .iter()
        .map(|r| {
            (0..features.len())
                .map(|c| {
                    if constant[c] {
                        0.0
                    } else {
                        (r[c] - means[c]) / std_devs[c]
                    }
                })
                .collect()
        })
        .collect();

    Ok(FeatureMatrix {
        node_ids: enabled.iter().map(|n| n.node_id.clone()).collect(),
        features: features.to_vec(),
        rows,
        means,
        std_devs,
        constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    /// `None` when k exceeds the number of distinct points.
    pub silhouette: Option<f64>,
    pub inertia: Option<f64>,
}

/// Result of [`cluster_nodes`]; `assignment` follows the matrix row order and
/// group indices are numbered by first appearance in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub scores: Vec<KScore>,
    /// Set when no k reached the silhouette floor and everything was put
    /// into one group.
    pub fallback: bool,
}

impl Clustering {
    pub fn single_group(n: usize) -> Self {
        Self {
            k: 1,
            assignment: vec![0; n],
            scores: Vec::new(),
            fallback: true,
        }
    }
}

fn canonical_relabel(assignment: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let relabeled = assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect();
    (relabeled, map.len())
}

/// Runs k-means++ for each k in `k_range` and keeps the k with the highest
/// mean silhouette (smallest k on ties).
pub fn cluster_nodes(
    matrix: &FeatureMatrix,
    k_range: RangeInclusive<usize>,
    config: &ProfileConfig,
) -> Result<Clustering> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo > hi {
        return Err(Error::EmptyKRange { lo, hi });
    }
    let n = matrix.len();
    if lo < 2 || hi + 1 > n {
        return Err(Error::invalid(
            "k range",
            format!("[{lo}, {hi}] must lie within [2, {}]", n.saturating_sub(1)),
        ));
    }

    let distinct = matrix.distinct_rows();
    let restarts = config.restarts.max(1);
    let mut scores = Vec::new();
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    for k in k_range {
        if k > distinct {
            scores.push(KScore {
                k,
                silhouette: None,
                inertia: None,
            });
            continue;
        }
        let mut best_fit: Option<kmeans::KMeansFit> = None;
        for restart in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((k * 1024 + restart) as u64);
            let fit = kmeans::kmeans(&matrix.rows, k, &mut rng);
            if best_fit.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
                best_fit = Some(fit);
            }
        }
        let fit = best_fit.expect("at least one restart");
        let (assignment, used) = canonical_relabel(&fit.assignment);
        let s = kmeans::silhouette(&matrix.rows, &assignment, used);
        scores.push(KScore {
            k,
            silhouette: Some(s),
            inertia: Some(fit.inertia),
        });
        if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
            best = Some((s, assignment, used));
        }
    }

    match best {
        Some((s, assignment, used)) if s >= config.silhouette_floor => Ok(Clustering {
            k: used,
            assignment,
            scores,
            fallback: false,
        }),
        _ => {
            log::warn!(
                "no k in [{lo}, {hi}] reached silhouette {}; using a single group",
                config.silhouette_floor
            );
            Ok(Clustering {
                scores,
                ..Clustering::single_group(n)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelVector {
    pub cpu: u32,
    pub mem: u32,
    pub io: u32,
}

impl LabelVector {
    pub fn new(cpu: u32, mem: u32, io: u32) -> Self {
        Self { cpu, mem, io }
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.cpu, self.mem, self.io]
    }

    /// Group "power" used to break score ties.
    pub fn sum(&self) -> u32 {
        self.cpu + self.mem + self.io
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub cpu_events_per_s: f64,
    pub ram_mib_per_s: f64,
    pub seq_iops: f64,
    pub rnd_iops: f64,
    pub io_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGroup {
    pub index: usize,
    pub members: Vec<String>,
    pub node_count: usize,
    pub total_cpus: u32,
    pub total_mem_gb: f64,
    pub means: GroupMeans,
    pub labels: Option<LabelVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGroupSet {
    pub k: usize,
    pub groups: Vec<NodeGroup>,
    pub membership: BTreeMap<String, usize>,
    pub scores: Vec<KScore>,
    pub fallback: bool,
}

impl NodeGroupSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_of(&self, node_id: &str) -> Option<usize> {
        self.membership.get(node_id).copied()
    }

    pub fn is_labeled(&self) -> bool {
        self.groups.iter().all(|g| g.labels.is_some())
    }

    pub fn labels(&self, group: usize) -> Option<LabelVector> {
        self.groups.get(group).and_then(|g| g.labels)
    }

    /// Group indices from most to least powerful (label sum descending,
    /// then index ascending).
    pub fn power_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.groups.len()).collect();
        order.sort_by_key(|&g| {
            let power = self.groups[g].labels.map_or(0, |l| l.sum());
            (std::cmp::Reverse(power), g)
        });
        order
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.members.len()).collect()
    }

    /// Membership sizes, largest first; handy for comparing groupings
    /// without caring about index order.
    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    /// Node ids to disable for a restricted-cluster run: the
    /// ⌊fraction × size⌋ lowest node ids of every group.
    pub fn nodes_to_disable(&self, fraction: f64) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for g in &self.groups {
            let count = (fraction * g.members.len() as f64 + 1e-9).floor() as usize;
            let mut members = g.members.clone();
            members.sort();
            out.extend(members.into_iter().take(count));
        }
        out
    }

    /// Recomputes node counts and capacity totals from the enabled nodes of
    /// `cluster`. Labels and means are profiling results and stay as they are.
    pub fn with_enabled_capacity(&self, cluster: &ClusterSpec) -> NodeGroupSet {
        let mut out = self.clone();
        for g in &mut out.groups {
            let enabled: Vec<&NodeSpec> = g
                .members
                .iter()
                .filter_map(|id| cluster.node(id))
                .filter(|n| n.enabled)
                .collect();
            g.node_count = enabled.len();
            g.total_cpus = enabled.iter().map(|n| n.cpus).sum();
            g.total_mem_gb = enabled.iter().map(|n| n.mem_gb).sum();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds unlabeled groups with capacity aggregates and raw benchmark means.
pub fn group_nodes(
    nodes: &[NodeSpec],
    matrix: &FeatureMatrix,
    clustering: &Clustering,
) -> Result<NodeGroupSet> {
    if clustering.assignment.len() != matrix.node_ids.len() {
        return Err(Error::invalid(
            "clustering",
            "assignment length differs from matrix rows",
        ));
    }
    let by_id: BTreeMap<&str, &NodeSpec> = nodes.iter().map(|n| (n.node_id.as_str(), n)).collect();
    let mut members: Vec<Vec<&NodeSpec>> = vec![Vec::new(); clustering.k];
    let mut membership = BTreeMap::new();
    for (id, &g) in matrix.node_ids.iter().zip(&clustering.assignment) {
        let node = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::invalid("clustering", format!("unknown node `{id}`")))?;
        members[g].push(node);
        membership.insert(id.clone(), g);
    }

    let groups = members
        .into_iter()
        .enumerate()
        .map(|(index, nodes)| {
            let count = nodes.len() as f64;
            let mean = |f: &dyn Fn(&BenchmarkVector) -> f64| {
                nodes.iter().map(|n| f(&n.bench)).sum::<f64>() / count
            };
            NodeGroup {
                index,
                members: nodes.iter().map(|n| n.node_id.clone()).collect(),
                node_count: nodes.len(),
                total_cpus: nodes.iter().map(|n| n.cpus).sum(),
                total_mem_gb: nodes.iter().map(|n| n.mem_gb).sum(),
                means: GroupMeans {
                    cpu_events_per_s: mean(&|b| b.cpu_events_per_s),
                    ram_mib_per_s: mean(&|b| b.ram_mib_per_s),
                    seq_iops: mean(&|b| b.seq_iops()),
                    rnd_iops: mean(&|b| b.rnd_iops()),
                    io_score: mean(&|b| b.io_score()),
                },
                labels: None,
            }
        })
        .collect();

    Ok(NodeGroupSet {
        k: clustering.k,
        groups,
        membership,
        scores: clustering.scores.clone(),
        fallback: clustering.fallback,
    })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Dense ranks (1-based, ascending) where values within `tolerance` relative
/// distance of the first value of a run share that run's rank.
pub fn dense_rank(values: &[f64], tolerance: f64) -> Vec<u32> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    let mut anchor = f64::NAN;
    for i in order {
        if rank == 0 || relative_gap(values[i], anchor) > tolerance {
            rank += 1;
            anchor = values[i];
        }
        ranks[i] = rank;
    }
    ranks
}

/// Assigns cpu / memory / I/O rank labels to every group.
pub fn rank_and_label(mut groups: NodeGroupSet, tolerance: f64) -> NodeGroupSet {
    let column = |f: fn(&GroupMeans) -> f64| -> Vec<f64> {
        groups.groups.iter().map(|g| f(&g.means)).collect()
    };
    let cpu = dense_rank(&column(|m| m.cpu_events_per_s), tolerance);
    let mem = dense_rank(&column(|m| m.ram_mib_per_s), tolerance);
    let io = dense_rank(&column(|m| m.io_score), tolerance);
    for (i, g) in groups.groups.iter_mut().enumerate() {
        g.labels = Some(LabelVector::new(cpu[i], mem[i], io[i]));
    }
    groups
}

/// Full profiling pipeline over the enabled nodes of `cluster`.
///
/// Clusters with fewer than three enabled nodes have no valid k range and
/// become a single group.
pub fn profile(cluster: &ClusterSpec, config: &ProfileConfig) -> Result<NodeGroupSet> {
    cluster.validate()?;
    let matrix = normalize_features(&cluster.nodes, &config.features)?;
    let n = matrix.len();
    let clustering = if n < 3 {
        Clustering::single_group(n)
    } else {
        let hi = config.k_max.min(n - 1);
        cluster_nodes(&matrix, 2..=hi, config)?
    };
    let groups = group_nodes(&cluster.nodes, &matrix, &clustering)?;
    Ok(rank_and_label(groups, config.tie_tolerance))
}
