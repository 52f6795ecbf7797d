use crate::model::{NodeSpec, TaskBehavior};

/// Cores a task keeps busy, from its ps-style utilisation percentage.
pub fn busy_cores(behavior: &TaskBehavior) -> f64 {
    behavior.cpu_util_pct / 100.0
}

/// Fraction by which the busy cores on a node exceed its core count.
pub fn oversubscription(total_busy_cores: f64, node_cpus: u32) -> f64 {
    let cpus = node_cpus as f64;
    (total_busy_cores - cpus).max(0.0) / cpus
}

/// Runtime of one instance started on `node`.
///
/// `runtime = base × (ref_speed / node_speed) × (1 + α × oversubscription)`,
/// where the oversubscription counts the busy cores of everything already on
/// the node plus this task. The runtime is fixed when the instance starts.
pub fn effective_runtime(
    behavior: &TaskBehavior,
    node: &NodeSpec,
    ref_cpu_speed: f64,
    colocated_busy_cores: f64,
    alpha: f64,
) -> f64 {
    let speed_factor = ref_cpu_speed / node.bench.cpu_events_per_s;
    let over = oversubscription(colocated_busy_cores + busy_cores(behavior), node.cpus);
    behavior.base_runtime_s * speed_factor * (1.0 + alpha * over)
}
