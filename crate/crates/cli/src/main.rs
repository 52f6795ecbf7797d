use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hetsched::allocator::SchedulerKind;
use hetsched::harness::{compare, ComparisonSpec};
use hetsched::model::{ClusterSpec, WorkflowDag};
use hetsched::monitor::{Labeler, TaskLabels, TraceScope, TraceStore};
use hetsched::presets;
use hetsched::profiler::ingest::bench_vector_from_outputs;
use hetsched::profiler::{profile, ProfileConfig};
use hetsched::simulator::{run, synthesize_workflow, SimScenario, WorkloadProfile, DEFAULT_ALPHA};

#[derive(Parser)]
#[command(name = "hetsched", version, about = "Label-based workflow task scheduling on heterogeneous clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group and label the nodes of a cluster file.
    Profile {
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the group JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print percentile boundaries and task labels for one workflow.
    Labels {
        #[arg(long)]
        cluster: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long = "workflow-id")]
        workflow_id: String,
        /// Cut boundaries over every workflow in the store.
        #[arg(long)]
        all_workflows: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run workflows on a simulated cluster.
    Simulate {
        #[arg(long)]
        cluster: PathBuf,
        /// One or more workflow files, run in parallel.
        #[arg(long, value_delimiter = ',', required = true)]
        workflow: Vec<PathBuf>,
        #[arg(long, default_value = "tarema")]
        scheduler: SchedulerKind,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of nodes per group to disable.
        #[arg(long, default_value_t = 0.0)]
        disable: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Trace store CSV; read if present and rewritten afterwards.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Report CSV; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Decision audit CSV.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Prepend an unmeasured warm-up repetition.
        #[arg(long)]
        warmup: bool,
        /// Keep the warm-up repetition's traces out of the store.
        #[arg(long)]
        drop_warmup_traces: bool,
        /// Label every repetition from the initial store only.
        #[arg(long)]
        cold: bool,
        #[arg(long)]
        all_workflows: bool,
    },
    /// Run a scheduler comparison from a TOML or JSON spec.
    Compare {
        #[arg(long)]
        spec: PathBuf,
        /// Directory for report.csv, summary.csv and groups.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Generate a synthetic workflow file.
    Synth {
        #[arg(long, default_value = "mixed")]
        profile: WorkloadProfile,
        #[arg(long, default_value_t = 20)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one of the reference cluster shapes (555 or 5442).
    Preset {
        #[arg(long, default_value = "5442")]
        shape: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a benchmark vector from sysbench and fio outputs.
    Bench {
        #[arg(long)]
        cpu: PathBuf,
        #[arg(long)]
        memory: PathBuf,
        #[arg(long)]
        fio_seq: PathBuf,
        #[arg(long)]
        fio_rnd: PathBuf,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn scope(all: bool) -> TraceScope {
    if all {
        TraceScope::AllWorkflows
    } else {
        TraceScope::SameWorkflow
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Profile { cluster, seed, out } => {
            let cluster = ClusterSpec::load(&cluster)?;
            let groups = profile(&cluster, &ProfileConfig { seed, ..Default::default() })?;
            writeln!(output(out.as_ref())?, "{}", groups.to_json()?)?;
        }
        Command::Labels {
            cluster,
            store,
            workflow_id,
            all_workflows,
            seed,
        } => {
            let cluster = ClusterSpec::load(&cluster)?;
            let groups = profile(&cluster, &ProfileConfig { seed, ..Default::default() })?;
            let store = TraceStore::load(&store)?;
            let mut labeler = Labeler::new(&store, &groups, scope(all_workflows));
            let mut out = io::stdout().lock();
            match labeler.boundaries(&workflow_id)? {
                None => writeln!(out, "no traces for workflow {workflow_id}")?,
                Some(bounds) => {
                    for b in bounds {
                        let intervals: Vec<String> =
                            b.intervals().iter().map(|(lo, hi)| format!("[{lo}, {hi})")).collect();
                        writeln!(out, "{:?}: p = {:?} intervals {}", b.feature, b.fractions, intervals.join(" "))?;
                    }
                }
            }
            let tasks: Vec<String> = store
                .aggregates()
                .filter(|((wf, _), _)| *wf == workflow_id)
                .map(|((_, task), _)| task.clone())
                .collect();
            for task in tasks {
                match labeler.label(&workflow_id, &task)? {
                    TaskLabels::Known(l) => writeln!(out, "{task}\tcpu={} mem={} io={}", l.cpu, l.mem, l.io)?,
                    TaskLabels::Unknown => writeln!(out, "{task}\tunknown")?,
                }
            }
        }
        Command::Simulate {
            cluster,
            workflow,
            scheduler,
            reps,
            seed,
            disable,
            alpha,
            store,
            report,
            audit,
            warmup,
            drop_warmup_traces,
            cold,
            all_workflows,
        } => {
            let cluster = ClusterSpec::load(&cluster)?;
            let dags = workflow
                .iter()
                .map(|p| WorkflowDag::load(p).with_context(|| format!("loading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            let mut sc = SimScenario::new(cluster, dags, scheduler);
            sc.repetitions = reps;
            sc.seed = seed;
            sc.disable_fraction = disable;
            sc.alpha = alpha;
            sc.warmup = warmup;
            sc.keep_warmup_traces = !drop_warmup_traces;
            sc.warm_start = !cold;
            sc.trace_scope = scope(all_workflows);
            let mut traces = match &store {
                Some(p) => TraceStore::load_or_default(p)?,
                None => TraceStore::new(),
            };
            let result = run(&sc, &mut traces)?;
            if let Some(p) = &store {
                traces.save(p)?;
            }
            result.write_csv(output(report.as_ref())?)?;
            if let Some(p) = &audit {
                result.write_audit_csv(File::create(p)?)?;
            }
            eprintln!(
                "{scheduler}: geomean makespan {:.1} s over {} repetitions",
                result.summary.geomean_s, result.summary.count
            );
        }
        Command::Compare { spec, out } => {
            let spec = ComparisonSpec::load(&spec)?;
            let report = compare(&spec)?;
            report.write_all(&out)?;
            if report.failed_cells() > 0 {
                eprintln!("{} cells failed; see report.csv", report.failed_cells());
            }
        }
        Command::Synth { profile, size, seed, out } => {
            let dag = synthesize_workflow(profile, size, seed)?;
            writeln!(output(out.as_ref())?, "{}", dag.to_json()?)?;
        }
        Command::Preset { shape, seed, out } => {
            let cluster = match shape.as_str() {
                "555" => presets::cluster_555(seed),
                "5442" => presets::cluster_5442(seed),
                other => bail!("unknown shape `{other}` (expected 555 or 5442)"),
            };
            writeln!(output(out.as_ref())?, "{}", cluster.to_json()?)?;
        }
        Command::Bench {
            cpu,
            memory,
            fio_seq,
            fio_rnd,
        } => {
            let bench = bench_vector_from_outputs(&read(&cpu)?, &read(&memory)?, &read(&fio_seq)?, &read(&fio_rnd)?)?;
            println!("{}", serde_json::to_string_pretty(&bench)?);
        }
    }
    Ok(())
}
