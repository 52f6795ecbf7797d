use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{ClusterSpec, ResourceRequest};
use crate::profiler::NodeGroupSet;

/// Occupancy of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSlot {
    pub node_id: String,
    pub group: usize,
    pub cpus: u32,
    pub mem_gb: f64,
    pub free_cpus: u32,
    pub free_mem_gb: f64,
    pub running: BTreeSet<String>,
    pub enabled: bool,
}

// Memory bookkeeping tolerates accumulated rounding from repeated
// allocate/release pairs.
const MEM_EPS: f64 = 1e-9;

impl NodeSlot {
    pub fn fits(&self, request: &ResourceRequest) -> bool {
        self.enabled
            && self.free_cpus >= request.cpus
            && self.free_mem_gb + MEM_EPS >= request.mem_gb
    }

    /// Could the request ever fit on this node when it is empty?
    pub fn could_fit(&self, request: &ResourceRequest) -> bool {
        self.enabled && self.cpus >= request.cpus && self.mem_gb + MEM_EPS >= request.mem_gb
    }

    /// Reserved-cpu fraction.
    pub fn load(&self) -> f64 {
        (self.cpus - self.free_cpus) as f64 / self.cpus as f64
    }
}

/// Runtime occupancy of the whole cluster. Nodes are kept in node-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    nodes: Vec<NodeSlot>,
    index: BTreeMap<String, usize>,
}

impl ClusterState {
    /// Every node of `cluster` must be a member of `groups`.
    pub fn new(cluster: &ClusterSpec, groups: &NodeGroupSet) -> Result<Self> {
        let mut specs: Vec<_> = cluster.nodes.iter().collect();
        specs.sort_by(|a, b| a.node_id.cmp(&b.node_id));
        let mut nodes = Vec::with_capacity(specs.len());
        for spec in specs {
            let group = groups.group_of(&spec.node_id).ok_or_else(|| {
                Error::invalid(
                    "cluster state",
                    format!("node `{}` belongs to no group", spec.node_id),
                )
            })?;
            nodes.push(NodeSlot {
                node_id: spec.node_id.clone(),
                group,
                cpus: spec.cpus,
                mem_gb: spec.mem_gb,
                free_cpus: spec.cpus,
                free_mem_gb: spec.mem_gb,
                running: BTreeSet::new(),
                enabled: spec.enabled,
            });
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.node_id.clone(), i))
            .collect();
        Ok(Self { nodes, index })
    }

    pub fn nodes(&self) -> &[NodeSlot] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NodeSlot {
        &self.nodes[idx]
    }

    pub fn index_of(&self, node_id: &str) -> Option<usize> {
        self.index.get(node_id).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn enabled_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].enabled).collect()
    }

    pub fn group_feasible(&self, group: usize, request: &ResourceRequest) -> bool {
        self.nodes
            .iter()
            .any(|n| n.group == group && n.fits(request))
    }

    pub fn any_could_fit(&self, request: &ResourceRequest) -> bool {
        self.nodes.iter().any(|n| n.could_fit(request))
    }

    /// Least-loaded feasible node among `candidates`, ties to the lowest
    /// node id.
    pub fn least_loaded(
        &self,
        candidates: impl IntoIterator<Item = usize>,
        request: &ResourceRequest,
    ) -> Option<usize> {
        candidates
            .into_iter()
            .filter(|&i| self.nodes[i].fits(request))
            .min_by(|&a, &b| {
                self.nodes[a]
                    .load()
                    .total_cmp(&self.nodes[b].load())
                    .then_with(|| self.nodes[a].node_id.cmp(&self.nodes[b].node_id))
            })
    }

    pub fn allocate(&mut self, idx: usize, instance_id: &str, request: &ResourceRequest) -> Result<()> {
        let node = &mut self.nodes[idx];
        if !node.fits(request) {
            return Err(Error::OverCommit {
                node: node.node_id.clone(),
                reason: format!(
                    "request {request:?} exceeds free cpus {} / mem {}",
                    node.free_cpus, node.free_mem_gb
                ),
            });
        }
        node.free_cpus -= request.cpus;
        node.free_mem_gb -= request.mem_gb;
        node.running.insert(instance_id.to_string());
        Ok(())
    }

    pub fn release(&mut self, idx: usize, instance_id: &str, request: &ResourceRequest) -> Result<()> {
        let node = &mut self.nodes[idx];
        if !node.running.remove(instance_id) {
            return Err(Error::invalid(
                "release",
                format!("`{instance_id}` is not running on `{}`", node.node_id),
            ));
        }
        node.free_cpus += request.cpus;
        node.free_mem_gb = (node.free_mem_gb + request.mem_gb).min(node.mem_gb);
        if node.running.is_empty() {
            node.free_mem_gb = node.mem_gb;
        }
        Ok(())
    }

    /// Checks 0 <= free <= capacity on every node.
    pub fn check_consistency(&self) -> Result<()> {
        for n in &self.nodes {
            if n.free_cpus > n.cpus || n.free_mem_gb < -MEM_EPS || n.free_mem_gb > n.mem_gb + MEM_EPS {
                return Err(Error::OverCommit {
                    node: n.node_id.clone(),
                    reason: format!("free cpus {} / mem {}", n.free_cpus, n.free_mem_gb),
                });
            }
        }
        Ok(())
    }
}
