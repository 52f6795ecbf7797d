//! Seeded generator for fork-join workflows with CPU-heavy, memory-heavy or
//! mixed resource profiles.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ResourceRequest, TaskBehavior, TaskDef, WorkflowDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadProfile {
    CpuHeavy,
    MemHeavy,
    Mixed,
}

impl WorkloadProfile {
    pub fn name(self) -> &'static str {
        match self {
            WorkloadProfile::CpuHeavy => "cpu_heavy",
            WorkloadProfile::MemHeavy => "mem_heavy",
            WorkloadProfile::Mixed => "mixed",
        }
    }

    /// Shares of (cpu-bound, memory-bound, light) tasks.
    fn mix(self) -> [f64; 3] {
        match self {
            WorkloadProfile::CpuHeavy => [0.8, 0.1, 0.1],
            WorkloadProfile::MemHeavy => [0.15, 0.7, 0.15],
            WorkloadProfile::Mixed => [0.4, 0.4, 0.2],
        }
    }
}

impl fmt::Display for WorkloadProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpu_heavy" => Ok(WorkloadProfile::CpuHeavy),
            "mem_heavy" => Ok(WorkloadProfile::MemHeavy),
            "mixed" => Ok(WorkloadProfile::Mixed),
            other => Err(Error::invalid(
                "workload profile",
                format!("unknown profile `{other}` (expected cpu_heavy|mem_heavy|mixed)"),
            )),
        }
    }
}

const MAX_INSTANCES: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskKind {
    CpuBound,
    MemBound,
    Light,
}

fn behavior(kind: TaskKind, rng: &mut ChaCha8Rng) -> TaskBehavior {
    let (runtime, util, mem, io) = match kind {
        TaskKind::CpuBound => ((60.0, 240.0), (150.0, 200.0), (0.5, 2.5), (5.0, 40.0)),
        TaskKind::MemBound => ((30.0, 180.0), (40.0, 110.0), (2.5, 4.8), (10.0, 80.0)),
        TaskKind::Light => ((5.0, 40.0), (10.0, 60.0), (0.2, 1.2), (1.0, 20.0)),
    };
    let mut draw = |(lo, hi): (f64, f64)| -> f64 {
        let v: f64 = rng.gen_range(lo..hi);
        (v * 100.0).round() / 100.0
    };
    TaskBehavior {
        base_runtime_s: draw(runtime),
        cpu_util_pct: draw(util),
        mem_gb_used: draw(mem),
        io_mb_per_s: draw(io),
    }
}

/// Generates a fork-join DAG of `size` abstract tasks.
///
/// Each task after the first hangs off a uniformly drawn earlier task and
/// sometimes joins a second one. Scatter tasks run 2 to 24 instances.
///
/// Task kinds are drawn as exact proportions of the profile mix and then
/// shuffled, so small workflows still follow the profile. Every request is
/// 2 cpus / 5 GB.
pub fn synthesize_workflow(profile: WorkloadProfile, size: usize, seed: u64) -> Result<WorkflowDag> {
    if size == 0 {
        return Err(Error::invalid("workflow size", "size must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [cpu_share, mem_share, _] = profile.mix();
    let n_cpu = (cpu_share * size as f64).round() as usize;
    let n_mem = ((mem_share * size as f64).round() as usize).min(size - n_cpu);
    let mut kinds: Vec<TaskKind> = std::iter::repeat_n(TaskKind::CpuBound, n_cpu)
        .chain(std::iter::repeat_n(TaskKind::MemBound, n_mem))
        .chain(std::iter::repeat_n(TaskKind::Light, size - n_cpu - n_mem))
        .collect();
    kinds.shuffle(&mut rng);

    let mut tasks = Vec::with_capacity(size);
    let mut edges = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let name = format!("t{i:02}");
        let instances = if i == 0 || rng.gen_bool(0.35) {
            1
        } else {
            rng.gen_range(2..=MAX_INSTANCES)
        };
        if i > 0 {
            // Any earlier task may fork this one, which keeps the DAG wide.
            let pred = rng.gen_range(0..i);
            edges.push((format!("t{pred:02}"), name.clone()));
            if i >= 2 && rng.gen_bool(0.3) {
                let other = rng.gen_range(0..i);
                if other != pred {
                    edges.push((format!("t{other:02}"), name.clone()));
                }
            }
        }
        tasks.push(TaskDef {
            name,
            instances,
            request: ResourceRequest::default(),
            behavior: behavior(kind, &mut rng),
        });
    }

    Ok(WorkflowDag {
        workflow_id: format!("{}-{size}-{seed}", profile.name()),
        tasks,
        edges,
    })
}
