//! Scheduler comparison experiments.
//!
//! A comparison runs every scheduler on every scenario for every seed. Each
//! (scheduler, scenario, seed) cell owns a fresh trace store; within the cell
//! the store carries over between repetitions. Cells share nothing and run in
//! parallel.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::SchedulerKind;
use crate::error::{Error, Result};
use crate::model::{ClusterSpec, WorkflowDag};
use crate::monitor::{TraceScope, TraceStore};
use crate::presets;
use crate::profiler::{NodeGroupSet, ProfileConfig};
use crate::simulator::{
    geometric_mean, run, synthesize_workflow, RunReport, SimScenario, WorkloadEntry,
    WorkloadProfile, DEFAULT_ALPHA,
};

/// Where the shared cluster comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClusterSource {
    File { file: PathBuf },
    Preset { preset: String, seed: u64 },
    Inline { nodes: ClusterSpec },
}

impl ClusterSource {
    pub fn resolve(&self, base: &Path) -> Result<ClusterSpec> {
        match self {
            ClusterSource::File { file } => ClusterSpec::load(base.join(file)),
            ClusterSource::Preset { preset, seed } => match preset.as_str() {
                "555" | "5;5;5" => Ok(presets::cluster_555(*seed)),
                "5442" | "5;4;4;2" => Ok(presets::cluster_5442(*seed)),
                other => Err(Error::invalid(
                    "cluster preset",
                    format!("unknown preset `{other}` (expected 555|5442)"),
                )),
            },
            ClusterSource::Inline { nodes } => Ok(nodes.clone()),
        }
    }
}

/// One workflow of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkloadSource {
    File {
        file: PathBuf,
        #[serde(default)]
        arrival_s: f64,
    },
    Synthetic {
        profile: WorkloadProfile,
        size: usize,
        #[serde(default)]
        arrival_s: f64,
    },
    Inline {
        dag: WorkflowDag,
        #[serde(default)]
        arrival_s: f64,
    },
}

/// Workflows run together; more than one models parallel workflow execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub workflows: Vec<WorkloadSource>,
}

impl ScenarioSpec {
    /// Materializes the workflows for one seed. Synthetic workflows draw
    /// from `seed` and their position, so parallel copies differ.
    pub fn workflows(&self, seed: u64, base: &Path) -> Result<Vec<WorkloadEntry>> {
        self.workflows
            .iter()
            .enumerate()
            .map(|(j, w)| match w {
                WorkloadSource::File { file, arrival_s } => Ok(WorkloadEntry {
                    dag: WorkflowDag::load(base.join(file))?,
                    arrival_s: *arrival_s,
                }),
                WorkloadSource::Synthetic {
                    profile,
                    size,
                    arrival_s,
                } => Ok(WorkloadEntry {
                    dag: synthesize_workflow(*profile, *size, seed.wrapping_mul(16).wrapping_add(j as u64))?,
                    arrival_s: *arrival_s,
                }),
                WorkloadSource::Inline { dag, arrival_s } => Ok(WorkloadEntry {
                    dag: dag.clone(),
                    arrival_s: *arrival_s,
                }),
            })
            .collect()
    }
}

fn default_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}

fn default_repetitions() -> u32 {
    5
}

fn default_true() -> bool {
    true
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub cluster: ClusterSource,
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Run an unmeasured initial repetition per cell.
    #[serde(default = "default_true")]
    pub warmup: bool,
    #[serde(default = "default_true")]
    pub keep_warmup_traces: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub disable_fraction: f64,
    #[serde(default)]
    pub profile_seed: u64,
    #[serde(default)]
    pub trace_scope: TraceScope,
    /// Directory relative file references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ComparisonSpec {
    /// Reads a TOML or JSON spec (by extension; TOML otherwise).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut spec: ComparisonSpec = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::invalid("comparison", "no scenarios"));
        }
        if self.schedulers.is_empty() {
            return Err(Error::invalid("comparison", "no schedulers"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("comparison", "no seeds"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("comparison", "repetitions must be >= 1"));
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("comparison", "scenario names must be unique"));
        }
        Ok(())
    }

    fn scenario(&self, cluster: &ClusterSpec, scheduler: SchedulerKind, idx: usize, seed: u64) -> Result<SimScenario> {
        let mut sc = SimScenario::new(cluster.clone(), Vec::new(), scheduler);
        sc.workflows = self.scenarios[idx].workflows(seed, &self.base_dir)?;
        sc.seed = seed;
        sc.repetitions = self.repetitions;
        sc.warmup = self.warmup;
        sc.keep_warmup_traces = self.keep_warmup_traces;
        sc.warm_start = true;
        sc.disable_fraction = self.disable_fraction;
        sc.alpha = self.alpha;
        sc.profile = ProfileConfig {
            seed: self.profile_seed,
            ..ProfileConfig::default()
        };
        sc.trace_scope = self.trace_scope;
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: String,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub outcome: std::result::Result<RunReport, String>,
}

impl CellResult {
    pub fn report(&self) -> Option<&RunReport> {
        self.outcome.as_ref().ok()
    }

    pub fn geomean(&self) -> Option<f64> {
        self.report().map(|r| r.summary.geomean_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub scenario: String,
    pub a: SchedulerKind,
    pub b: SchedulerKind,
    /// (1 − G_a / G_b) × 100 over every measured makespan of the scenario.
    pub improvement_pct: f64,
    /// Fraction of seeds, among those where both cells succeeded, with
    /// a's geometric-mean makespan ≤ b's.
    pub win_fraction: f64,
    pub seeds_compared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub groups: NodeGroupSet,
    pub cells: Vec<CellResult>,
}

/// Runs every cell of `spec` in parallel.
pub fn compare(spec: &ComparisonSpec) -> Result<ComparisonReport> {
    spec.validate()?;
    let cluster = spec.cluster.resolve(&spec.base_dir)?;
    let groups = crate::simulator::prepare_cluster(
        &cluster,
        &ProfileConfig {
            seed: spec.profile_seed,
            ..ProfileConfig::default()
        },
        spec.disable_fraction,
    )?
    .groups;

    let mut keys = Vec::new();
    for (idx, _) in spec.scenarios.iter().enumerate() {
        for &seed in &spec.seeds {
            for &scheduler in &spec.schedulers {
                keys.push((idx, seed, scheduler));
            }
        }
    }
    let cells = keys
        .into_par_iter()
        .map(|(idx, seed, scheduler)| {
            let outcome = spec
                .scenario(&cluster, scheduler, idx, seed)
                .and_then(|sc| run(&sc, &mut TraceStore::new()))
                .map_err(|e| {
                    log::warn!("cell {}/{seed}/{scheduler} failed: {e}", spec.scenarios[idx].name);
                    e.to_string()
                });
            CellResult {
                scenario: spec.scenarios[idx].name.clone(),
                seed,
                scheduler,
                outcome,
            }
        })
        .collect();
    Ok(ComparisonReport { groups, cells })
}

/// Index of the group with the fastest CPUs.
pub fn fastest_group(groups: &NodeGroupSet) -> usize {
    groups
        .groups
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.means.cpu_events_per_s.total_cmp(&b.1.means.cpu_events_per_s))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

impl ComparisonReport {
    pub fn scenarios(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.scenario.as_str()) {
                out.push(&c.scenario);
            }
        }
        out
    }

    pub fn schedulers(&self) -> Vec<SchedulerKind> {
        let mut out = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.scheduler) {
                out.push(c.scheduler);
            }
        }
        out
    }

    pub fn cell(&self, scenario: &str, seed: u64, scheduler: SchedulerKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.seed == seed && c.scheduler == scheduler)
    }

    fn cells_of(&self, scenario: &str, scheduler: SchedulerKind) -> impl Iterator<Item = &CellResult> {
        let scenario = scenario.to_string();
        self.cells
            .iter()
            .filter(move |c| c.scenario == scenario && c.scheduler == scheduler)
    }

    /// Every measured makespan of a scenario/scheduler pair, in cell order.
    pub fn makespans(&self, scenario: &str, scheduler: SchedulerKind) -> Vec<f64> {
        self.cells_of(scenario, scheduler)
            .filter_map(CellResult::report)
            .flat_map(|r| r.measured_makespans())
            .collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn pairwise(&self, scenario: &str, a: SchedulerKind, b: SchedulerKind) -> PairwiseResult {
        let ga = geometric_mean(&self.makespans(scenario, a));
        let gb = geometric_mean(&self.makespans(scenario, b));
        let mut compared = 0;
        let mut wins = 0;
        for ca in self.cells_of(scenario, a) {
            let (Some(x), Some(y)) = (
                ca.geomean(),
                self.cell(scenario, ca.seed, b).and_then(CellResult::geomean),
            ) else {
                continue;
            };
            compared += 1;
            if x <= y {
                wins += 1;
            }
        }
        PairwiseResult {
            scenario: scenario.to_string(),
            a,
            b,
            improvement_pct: (1.0 - ga / gb) * 100.0,
            win_fraction: if compared > 0 { wins as f64 / compared as f64 } else { 0.0 },
            seeds_compared: compared,
        }
    }

    /// Per-group instance counts over measured repetitions of all seeds.
    pub fn group_counts(&self, scenario: &str, scheduler: SchedulerKind) -> Vec<u64> {
        let mut out = vec![0; self.groups.len()];
        for r in self.cells_of(scenario, scheduler).filter_map(CellResult::report) {
            for (o, c) in out.iter_mut().zip(r.measured_group_counts()) {
                *o += c;
            }
        }
        out
    }

    /// Fraction of one cell's measured instances that ran on `group`.
    pub fn group_share(&self, scenario: &str, seed: u64, scheduler: SchedulerKind, group: usize) -> Option<f64> {
        let counts = self.cell(scenario, seed, scheduler)?.report()?.measured_group_counts();
        let total: u64 = counts.iter().sum();
        (total > 0).then(|| counts[group] as f64 / total as f64)
    }

    pub fn write_report_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scenario",
            "seed",
            "scheduler",
            "status",
            "repetition",
            "warmup",
            "makespan_s",
            "instances",
            "unknown_decisions",
            "group_counts",
            "error",
        ])?;
        for c in &self.cells {
            let head = [c.scenario.clone(), c.seed.to_string(), c.scheduler.to_string()];
            match &c.outcome {
                Ok(r) => {
                    for rep in &r.repetitions {
                        let counts: Vec<String> = rep.group_counts.iter().map(u64::to_string).collect();
                        w.write_record(head.iter().cloned().chain([
                            "ok".to_string(),
                            rep.index.to_string(),
                            rep.warmup.to_string(),
                            rep.makespan_s.to_string(),
                            rep.instances_executed.to_string(),
                            rep.unknown_decisions.to_string(),
                            counts.join(";"),
                            String::new(),
                        ]))?;
                    }
                }
                Err(e) => {
                    w.write_record(head.iter().cloned().chain([
                        "failed".to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.clone(),
                    ]))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-pair aggregates followed by pairwise improvement rows.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "kind",
            "scenario",
            "scheduler",
            "versus",
            "cells_ok",
            "cells_failed",
            "geomean_s",
            "mean_s",
            "std_s",
            "improvement_pct",
            "win_fraction",
        ])?;
        let schedulers = self.schedulers();
        for scenario in self.scenarios() {
            for &s in &schedulers {
                let values = self.makespans(scenario, s);
                let stats = crate::simulator::MakespanSummary::from_values(&values);
                let ok = self.cells_of(scenario, s).filter(|c| c.outcome.is_ok()).count();
                let failed = self.cells_of(scenario, s).count() - ok;
                w.write_record([
                    "scheduler",
                    scenario,
                    s.name(),
                    "",
                    &ok.to_string(),
                    &failed.to_string(),
                    &stats.geomean_s.to_string(),
                    &stats.mean_s.to_string(),
                    &stats.std_s.to_string(),
                    "",
                    "",
                ])?;
            }
            for &a in &schedulers {
                for &b in &schedulers {
                    if a == b {
                        continue;
                    }
                    let p = self.pairwise(scenario, a, b);
                    w.write_record([
                        "pairwise",
                        scenario,
                        a.name(),
                        b.name(),
                        &p.seeds_compared.to_string(),
                        "",
                        "",
                        "",
                        "",
                        &p.improvement_pct.to_string(),
                        &p.win_fraction.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_groups_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scenario", "scheduler", "group", "labels", "nodes", "instances", "share"])?;
        for scenario in self.scenarios() {
            for s in self.schedulers() {
                let counts = self.group_counts(scenario, s);
                let total: u64 = counts.iter().sum();
                for (g, &n) in counts.iter().enumerate() {
                    let labels = self
                        .groups
                        .labels(g)
                        .map(|l| format!("{}/{}/{}", l.cpu, l.mem, l.io))
                        .unwrap_or_default();
                    let share = if total > 0 { n as f64 / total as f64 } else { 0.0 };
                    w.write_record([
                        scenario.to_string(),
                        s.to_string(),
                        g.to_string(),
                        labels,
                        self.groups.groups[g].node_count.to_string(),
                        n.to_string(),
                        share.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes report.csv, summary.csv and groups.csv into `dir`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_report_csv(std::fs::File::create(dir.join("report.csv"))?)?;
        self.write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?)?;
        self.write_groups_csv(std::fs::File::create(dir.join("groups.csv"))?)?;
        Ok(())
    }
}
