//! Baseline placement rules. All of them only ever return feasible nodes and
//! return `None` when nothing fits.

use crate::model::ResourceRequest;
use crate::profiler::NodeGroupSet;

use super::ClusterState;

/// Next feasible node after the cursor in the cyclic node list. Infeasible
/// nodes are skipped without consuming their turn.
pub fn round_robin_pick(
    state: &ClusterState,
    order: &[usize],
    cursor: &mut usize,
    request: &ResourceRequest,
) -> Option<usize> {
    let len = order.len();
    (0..len)
        .map(|step| (*cursor + step) % len)
        .find(|&pos| state.node(order[pos]).fits(request))
        .map(|pos| {
            *cursor = (pos + 1) % len;
            order[pos]
        })
}

/// Feasible node with the lowest reserved-cpu fraction; ties keep node-list
/// order.
pub fn fair_pick(state: &ClusterState, order: &[usize], request: &ResourceRequest) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in order {
        let node = state.node(i);
        if !node.fits(request) {
            continue;
        }
        let load = node.load();
        if best.is_none_or(|(_, l)| load < l) {
            best = Some((i, load));
        }
    }
    best.map(|(i, _)| i)
}

/// First node in the list that still fits the request.
pub fn fill_nodes_pick(state: &ClusterState, order: &[usize], request: &ResourceRequest) -> Option<usize> {
    order.iter().copied().find(|&i| state.node(i).fits(request))
}

/// Least-loaded feasible node of the most powerful group that has one.
pub fn sjfn_pick(state: &ClusterState, groups: &NodeGroupSet, request: &ResourceRequest) -> Option<usize> {
    groups.power_order().into_iter().find_map(|g| {
        let members = (0..state.len()).filter(|&i| state.node(i).group == g);
        state.least_loaded(members, request)
    })
}

/// Stable ordering of a queue by historic mean runtime, shortest first;
/// entries without history go last in their original order.
pub fn sjfn_queue_order(mean_runtimes: &[Option<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mean_runtimes.len()).collect();
    order.sort_by(|&a, &b| match (mean_runtimes[a], mean_runtimes[b]) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    order
}
