//! Batch runs of the reduction pipeline with CSV output.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trp_core::latency::exact_elat;
use trp_core::reduction::{apriori_solve, SolveConfig};
use trp_core::solvers::{brute_force_opt, solver_by_name, SOLVER_NAMES};

use crate::gen::{derive_seed, generate, instance_name, GenConfig, MetricModel, ProbModel};
use crate::io::{load_instance, NamedInstance};
use crate::verify::end_to_end_bound;

pub const CSV_HEADER: &str = "instance,n,seed,solver,rho,alg,opt,ratio,bound,ms";

/// Default cap on non-root vertices for computing OPT (so `n <= 8`).
pub const DEFAULT_OPT_LIMIT: usize = 7;

fn default_opt_limit() -> usize {
    DEFAULT_OPT_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    pub n: usize,
    pub count: usize,
    pub metric: MetricModel,
    pub prob: ProbModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solvers: Vec<String>,
    #[serde(default)]
    pub batches: Vec<Batch>,
    /// Instance files, benchmarked after the generated batches.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    #[serde(default = "default_opt_limit")]
    pub opt_limit: usize,
    /// Fill the `ms` column. Off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            solvers: Vec::new(),
            batches: Vec::new(),
            files: Vec::new(),
            opt_limit: DEFAULT_OPT_LIMIT,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub instance: String,
    pub n: usize,
    pub seed: u64,
    pub solver: String,
    pub rho: f64,
    pub alg: f64,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    pub bound: f64,
    pub ms: Option<f64>,
}

impl BenchRecord {
    fn fields(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.instance.clone(),
            self.n.to_string(),
            self.seed.to_string(),
            self.solver.clone(),
            self.rho.to_string(),
            self.alg.to_string(),
            opt(self.opt),
            opt(self.ratio),
            self.bound.to_string(),
            self.ms.map(|v| format!("{v:.3}")).unwrap_or_default(),
        ]
    }
}

/// An instance ready to benchmark, with the seed its solvers receive.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchInstance {
    pub named: NamedInstance,
    pub seed: u64,
}

/// Generated batches first, then files; instance `i` gets seed
/// `derive_seed(config.seed, i)`.
pub fn prepare(config: &BenchConfig) -> Result<Vec<BenchInstance>> {
    let mut out = Vec::new();
    for batch in &config.batches {
        if batch.n == 0 {
            bail!("batch with n = 0");
        }
        for _ in 0..batch.count {
            let seed = derive_seed(config.seed, out.len() as u64);
            let gen = GenConfig { n: batch.n, seed, metric: batch.metric, prob: batch.prob };
            out.push(BenchInstance { named: NamedInstance { name: instance_name(&gen), instance: generate(&gen) }, seed });
        }
    }
    for path in &config.files {
        let named = load_instance(path).with_context(|| format!("loading {}", path.display()))?;
        out.push(BenchInstance { named, seed: derive_seed(config.seed, out.len() as u64) });
    }
    Ok(out)
}

fn bench_one(item: &BenchInstance, solvers: &[String], config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let inst = &item.named.instance;
    let n = inst.n();
    let opt = if n - 1 <= config.opt_limit { Some(brute_force_opt(inst, config.opt_limit)?.1) } else { None };
    solvers
        .iter()
        .map(|name| {
            let solver = solver_by_name::<f64>(name).expect("checked");
            let rho = solver.descriptor().rho;
            let start = Instant::now();
            let (tour, _) = apriori_solve(inst, solver.as_ref(), &SolveConfig { seed: item.seed, ..SolveConfig::default() })
                .with_context(|| format!("{} on {}", name, item.named.name))?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let alg = exact_elat(inst, &tour).value;
            let ratio = opt.map(|o| if o > 0.0 { alg / o } else if alg <= 0.0 { 1.0 } else { f64::INFINITY });
            Ok(BenchRecord {
                instance: item.named.name.clone(),
                n,
                seed: item.seed,
                solver: name.clone(),
                rho,
                alg,
                opt,
                ratio,
                bound: end_to_end_bound(n, rho),
                ms: config.timing.then_some(ms),
            })
        })
        .collect()
}

/// One record per (instance, solver), in instance order then solver order.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if let Some(bad) = config.solvers.iter().find(|s| !SOLVER_NAMES.contains(&s.as_str())) {
        bail!("unknown solver `{bad}` (one of {})", SOLVER_NAMES.join(", "));
    }
    let items = prepare(config)?;
    let rows: Vec<Vec<BenchRecord>> =
        items.par_iter().map(|item| bench_one(item, &config.solvers, config)).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_csv(records: &[BenchRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn bench_csv(config: &BenchConfig) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&run_bench(config)?, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}
