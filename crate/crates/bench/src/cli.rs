//! The `trp` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use trp_core::consecutive::{make_consecutive, MergeStep};
use trp_core::latency::{brute_force_elat, exact_elat, mc_elat, BRUTE_FORCE_LIMIT};
use trp_core::model::{AprioriInstance, MasterTour};
use trp_core::reduction::{apriori_solve, build_scaled, partition_xy, scaling_params, SolveConfig, DEFAULT_COPY_CAP};
use trp_core::solvers::{solver_by_name, UniformSolver, SOLVER_NAMES};

use crate::bench::{run_bench, write_csv, BenchConfig};
use crate::gen::{generate, instance_name, GenConfig, MetricModel, ProbModel};
use crate::io::{load_instance, parse_tour, read_file, write_instance, write_tour, TourFile};
use crate::verify::{run_verify, Suite};

#[derive(Debug, Parser)]
#[command(name = "trp", version, about = "A priori traveling repairman: evaluate, reduce, repair, verify, benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "euclidean-uniform")]
        metric: MetricModel,
        #[arg(long, default_value = "uniform(0,1)")]
        prob: ProbModel,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected latency of a master tour.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        /// Tour file; defaults to vertex order from the root.
        #[arg(long)]
        tour: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EvalMethod::Exact)]
        method: EvalMethod,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reduction pipeline and print the final tour.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "local")]
        solver: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reduction pipeline and dump every intermediate artifact.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "local")]
        solver: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_COPY_CAP)]
        copy_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Make a copy tour on the instance's scaled form consecutive.
    Consec {
        #[arg(long)]
        instance: PathBuf,
        /// Tour over copies; defaults to a random copy tour drawn from --seed.
        #[arg(long)]
        tour: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_COPY_CAP)]
        copy_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run property suites; exits 1 on any failure.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to each suite's own trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Directory for reports and counterexample files.
        #[arg(long, default_value = "verify-artifacts")]
        out: PathBuf,
    },
    /// Benchmark solvers through the reduction; writes CSV.
    Bench {
        /// JSON bench configuration.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured solver list (comma separated).
        #[arg(long, value_delimiter = ',')]
        solver: Option<Vec<String>>,
        /// Fill the `ms` column.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    Exact,
    Brute,
    Mc,
}

/// How a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or an operation that could not run. Exit status 2.
    Input(anyhow::Error),
    /// A verification suite found a violation. Exit status 1.
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Verification(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<crate::io::IoError> for Failure {
    fn from(e: crate::io::IoError) -> Self {
        Failure::Input(e.into())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "error: {e:#}"),
            Failure::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => writeln!(stdout, "{text}").context("writing output"),
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn solver(name: &str) -> anyhow::Result<Box<dyn UniformSolver<f64>>> {
    solver_by_name(name).ok_or_else(|| anyhow!("unknown solver `{name}` (one of {})", SOLVER_NAMES.join(", ")))
}

fn instance(path: &Path) -> anyhow::Result<AprioriInstance<f64>> {
    Ok(load_instance(path)?.instance)
}

#[derive(Serialize)]
struct SolveOutput {
    order: Vec<usize>,
    value: f64,
    solver: String,
}

#[derive(Serialize)]
struct ReduceOutput<'a> {
    value: f64,
    artifacts: &'a trp_core::reduction::ReductionArtifacts<f64>,
}

#[derive(Serialize)]
struct ConsecOutput {
    input: Vec<usize>,
    input_value: f64,
    order: Vec<usize>,
    value: f64,
    merges: Vec<MergeStep<f64>>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { n, seed, metric, prob, name, out } => {
            if n == 0 {
                return Err(anyhow!("--n must be positive").into());
            }
            let config = GenConfig { n, seed, metric, prob };
            let name = name.unwrap_or_else(|| instance_name(&config));
            emit(&write_instance(&name, &generate(&config)), out.as_deref(), stdout)?;
        }
        Command::Eval { instance: path, tour, method, samples, seed, out } => {
            let inst = instance(&path)?;
            let tour = match tour {
                Some(t) => parse_tour(&read_file(&t)?, &inst)?,
                None => MasterTour::identity(inst.n(), inst.root()),
            };
            let estimate = match method {
                EvalMethod::Exact => exact_elat(&inst, &tour),
                EvalMethod::Brute => brute_force_elat(&inst, &tour, BRUTE_FORCE_LIMIT).map_err(anyhow::Error::from)?,
                EvalMethod::Mc => mc_elat(&inst, &tour, samples, seed).map_err(anyhow::Error::from)?,
            };
            emit(&to_json(&estimate), out.as_deref(), stdout)?;
        }
        Command::Solve { instance: path, solver: name, seed, out } => {
            let inst = instance(&path)?;
            let s = solver(&name)?;
            let (tour, _) = apriori_solve(&inst, s.as_ref(), &SolveConfig { seed, ..SolveConfig::default() })
                .map_err(anyhow::Error::from)?;
            let value = exact_elat(&inst, &tour).value;
            match out {
                Some(path) => {
                    emit(&write_tour(tour.order()), Some(&path), stdout)?;
                    writeln!(stdout, "{value}").map_err(anyhow::Error::from)?;
                }
                None => emit(&to_json(&SolveOutput { order: tour.into_order(), value, solver: name }), None, stdout)?,
            }
        }
        Command::Reduce { instance: path, solver: name, seed, copy_cap, out } => {
            let inst = instance(&path)?;
            let s = solver(&name)?;
            let (tour, artifacts) = apriori_solve(&inst, s.as_ref(), &SolveConfig { seed, copy_cap })
                .map_err(anyhow::Error::from)?;
            let value = exact_elat(&inst, &tour).value;
            emit(&to_json(&ReduceOutput { value, artifacts: &artifacts }), out.as_deref(), stdout)?;
        }
        Command::Consec { instance: path, tour, seed, copy_cap, out } => {
            let inst = instance(&path)?;
            let params = scaling_params(&inst, &partition_xy(&inst))
                .map_err(|e| anyhow!("instance has no scaled form: {e}"))?;
            let scaled = build_scaled(&inst, &params, copy_cap).map_err(anyhow::Error::from)?;
            let input = match tour {
                Some(t) => {
                    let file: TourFile = serde_json::from_str(&read_file(&t)?).context("parsing tour")?;
                    if file.order.len() != scaled.n_copies() {
                        let msg = format!("tour has {} entries, scaled instance has {} copies", file.order.len(), scaled.n_copies());
                        return Err(anyhow!(msg).into());
                    }
                    MasterTour::new(file.order, 0).map_err(anyhow::Error::from)?
                }
                None => {
                    let mut rest: Vec<usize> = (1..scaled.n_copies()).collect();
                    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                    MasterTour::new(std::iter::once(0).chain(rest).collect(), 0).map_err(anyhow::Error::from)?
                }
            };
            let repaired = make_consecutive(&scaled, &input).map_err(anyhow::Error::from)?;
            let output = ConsecOutput {
                input_value: scaled.elat(input.order()),
                input: input.into_order(),
                value: scaled.elat(repaired.tour.order()),
                order: repaired.tour.into_order(),
                merges: repaired.merges,
            };
            emit(&to_json(&output), out.as_deref(), stdout)?;
        }
        Command::Verify { suite, seed, trials, out } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>().map_err(|e| anyhow!(e))?]
            };
            let mut failed = Vec::new();
            for s in suites {
                let report = run_verify(s, seed, trials.unwrap_or_else(|| s.default_trials()));
                for line in report.lines().into_iter().chain(report.stat_lines()) {
                    writeln!(stdout, "{line}").map_err(anyhow::Error::from)?;
                }
                if !report.passed() {
                    write_artifacts(&out, &report)?;
                    writeln!(stdout, "counterexamples written to {}", out.display()).map_err(anyhow::Error::from)?;
                    failed.push(s.name());
                }
            }
            if !failed.is_empty() {
                return Err(Failure::Verification(failed.join(", ")));
            }
        }
        Command::Bench { config, seed, solver, timing, out } => {
            let mut cfg: BenchConfig =
                serde_json::from_str(&read_file(&config)?).with_context(|| format!("parsing {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = solver {
                cfg.solvers = s;
            }
            cfg.timing |= timing;
            let records = run_bench(&cfg)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&records, file)?;
                }
                None => write_csv(&records, &mut *stdout)?,
            }
        }
    }
    Ok(())
}

/// Writes the report plus, per counterexample, an instance file and a tour
/// file that `trp eval` accepts directly.
pub fn write_artifacts(dir: &Path, report: &crate::verify::SuiteReport) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = report.suite.name();
    std::fs::write(dir.join(format!("{name}.report.json")), to_json(report))?;
    for (k, ce) in report.counterexamples.iter().enumerate() {
        std::fs::write(dir.join(format!("{name}-{k}.json")), to_json(ce))?;
        if let Some(inst) = &ce.instance {
            std::fs::write(dir.join(format!("{name}-{k}.instance.json")), to_json(inst))?;
        }
        if let Some(order) = &ce.tour {
            std::fs::write(dir.join(format!("{name}-{k}.tour.json")), write_tour(order))?;
        }
    }
    Ok(())
}
