//! Randomized property suites with counterexample capture.
//!
//! Every trial draws from its own ChaCha8 stream seeded by
//! `derive_seed(seed, trial)`, so reports do not depend on thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use trp_core::consecutive::{
    check_lambda, conditional_expected_latency, lambda_value, make_consecutive, merge_candidate, relocate,
    table_predictions, Relocation, VertexClass,
};
use trp_core::latency::{brute_force_elat, exact_elat, mc_elat};
use trp_core::model::{restrict_instance, AprioriInstance, MasterTour, Metric};
use trp_core::reduction::{
    apriori_solve, build_scaled, collapse_tour, partition_xy, scaling_params, tail_terms, ScaledInstance,
    SolveConfig, DEFAULT_COPY_CAP,
};
use trp_core::solvers::{brute_force_opt, brute_force_opt_scaled, BruteForce, NearestNeighbor};
use trp_core::Error;

use crate::gen::{derive_seed, random_metric, random_points, random_probabilities, MetricModel, ProbModel};
use crate::io::InstanceFile;

/// Relative tolerance for evaluator agreement.
pub const AGREE_REL: f64 = 1e-9;
/// Absolute slack on bound inequalities.
pub const BOUND_ABS: f64 = 1e-9;
/// Relative slack for probability monotonicity.
pub const MONOTONE_REL: f64 = 1e-12;
/// Largest flat copy count a brute-force merge check enumerates.
pub const MAX_CHECK_COPIES: usize = 12;
/// Monte Carlo samples per calibration trial.
pub const MC_SAMPLES: usize = 10_000;
/// Required fraction of Monte Carlo trials within four standard errors.
pub const MC_COVERAGE: f64 = 0.99;
/// Slack factor on the end-to-end bound.
pub const END_TO_END_SLACK: f64 = 1.01;

/// `e / (e - 1)`.
pub fn e_ratio() -> f64 {
    let e = std::f64::consts::E;
    e / (e - 1.0)
}

/// End-to-end guarantee `(e/(e-1))^4 (1+1/n)^7 rho`.
pub fn end_to_end_bound(n: usize, rho: f64) -> f64 {
    e_ratio().powi(4) * (1.0 + 1.0 / n as f64).powi(7) * rho
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Oracle,
    Block,
    Sandwich,
    Monotone,
    Beta3,
    Consec,
    Table,
    Lambda,
    Optineq,
    Algineq,
    Ytail,
    Endtoend,
    Mc,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Oracle,
        Suite::Block,
        Suite::Sandwich,
        Suite::Monotone,
        Suite::Beta3,
        Suite::Consec,
        Suite::Table,
        Suite::Lambda,
        Suite::Optineq,
        Suite::Algineq,
        Suite::Ytail,
        Suite::Endtoend,
        Suite::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Block => "block",
            Suite::Sandwich => "sandwich",
            Suite::Monotone => "monotone",
            Suite::Beta3 => "beta3",
            Suite::Consec => "consec",
            Suite::Table => "table",
            Suite::Lambda => "lambda",
            Suite::Optineq => "optineq",
            Suite::Algineq => "algineq",
            Suite::Ytail => "ytail",
            Suite::Endtoend => "endtoend",
            Suite::Mc => "mc",
        }
    }

    /// Trial count used when none is given. The lambda suite always sweeps
    /// its full grid.
    pub fn default_trials(self) -> usize {
        match self {
            Suite::Oracle | Suite::Table => 200,
            Suite::Block | Suite::Algineq => 100,
            Suite::Sandwich | Suite::Mc => 1000,
            Suite::Monotone | Suite::Beta3 => 500,
            Suite::Consec => 300,
            Suite::Lambda => 1,
            Suite::Optineq | Suite::Ytail | Suite::Endtoend => 50,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            format!("unknown suite `{s}` (one of {})", names.join(", "))
        })
    }
}

/// Expected-latency evaluator under test. Swappable so the harness itself
/// can be checked against a broken evaluator.
#[derive(Clone, Copy)]
pub struct Evaluators {
    pub elat: fn(&AprioriInstance<f64>, &MasterTour) -> f64,
}

impl Default for Evaluators {
    fn default() -> Self {
        Evaluators { elat: |i, t| exact_elat(i, t).value }
    }
}

/// Replayable failure: the instance (flattened to plain vertices where the
/// check ran on copies) and the tour involved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub check: String,
    pub trial: usize,
    pub detail: String,
    pub instance: Option<InstanceFile>,
    pub tour: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    /// Largest `lhs - rhs` seen; positive means violated.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckResult>,
    pub stats: BTreeMap<String, Summary>,
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0) && !self.checks.is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn stat(&self, name: &str) -> Option<&Summary> {
        self.stats.get(name)
    }

    /// One line per collected statistic.
    pub fn stat_lines(&self) -> Vec<String> {
        self.stats
            .iter()
            .map(|(k, s)| {
                format!("STAT {}/{k}: n={} mean={:.6} min={:.6} max={:.6}", self.suite, s.count, s.mean, s.min, s.max)
            })
            .collect()
    }

    /// One line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}/{}: {} checked, {} failed, worst margin {:.3e}",
                    if c.failed == 0 { "PASS" } else { "FAIL" },
                    self.suite,
                    c.name,
                    c.checked,
                    c.failed,
                    c.worst_margin
                )
            })
            .collect()
    }
}

/// Counterexamples kept per report.
const MAX_COUNTEREXAMPLES: usize = 10;

struct Outcome {
    check: &'static str,
    ok: bool,
    margin: f64,
    counterexample: Option<Counterexample>,
}

#[derive(Default)]
struct Trial {
    outcomes: Vec<Outcome>,
    samples: Vec<(&'static str, f64)>,
}

impl Trial {
    /// Records `lhs <= rhs`.
    fn le(&mut self, check: &'static str, lhs: f64, rhs: f64, ce: impl FnOnce() -> Counterexample) {
        let ok = lhs <= rhs;
        self.push(check, ok, lhs - rhs, ce);
    }

    /// Records `|a - b| <= rel (1 + |b|)`; `b` is the reference value.
    fn close(&mut self, check: &'static str, a: f64, b: f64, rel: f64, ce: impl FnOnce() -> Counterexample) {
        let allowed = rel * (1.0 + b.abs());
        let gap = (a - b).abs();
        self.push(check, gap <= allowed, gap - allowed, ce);
    }

    fn holds(&mut self, check: &'static str, ok: bool, ce: impl FnOnce() -> Counterexample) {
        self.push(check, ok, if ok { 0.0 } else { 1.0 }, ce);
    }

    fn push(&mut self, check: &'static str, ok: bool, margin: f64, ce: impl FnOnce() -> Counterexample) {
        let margin = if margin.is_nan() { f64::INFINITY } else { margin };
        let counterexample = if ok { None } else { Some(ce()) };
        self.outcomes.push(Outcome { check, ok, margin, counterexample });
    }

    fn sample(&mut self, name: &'static str, value: f64) {
        self.samples.push((name, value));
    }
}

fn ce(check: &str, trial: usize, detail: String, instance: Option<(&str, &AprioriInstance<f64>)>, tour: Option<&[usize]>) -> Counterexample {
    Counterexample {
        check: check.to_string(),
        trial,
        detail,
        instance: instance.map(|(name, inst)| InstanceFile::from_instance(name, inst)),
        tour: tour.map(|t| t.to_vec()),
    }
}

fn run_trials(suite: Suite, seed: u64, trials: usize, f: impl Fn(&mut ChaCha8Rng, usize) -> Trial + Sync) -> SuiteReport {
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|i| f(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64)), i))
        .collect();
    let mut checks: Vec<CheckResult> = Vec::new();
    let mut counterexamples = Vec::new();
    let mut acc: BTreeMap<String, (usize, f64, f64, f64)> = BTreeMap::new();
    for trial in results {
        for o in trial.outcomes {
            let idx = match checks.iter().position(|c| c.name == o.check) {
                Some(i) => i,
                None => {
                    checks.push(CheckResult {
                        name: o.check.to_string(),
                        checked: 0,
                        failed: 0,
                        worst_margin: f64::NEG_INFINITY,
                    });
                    checks.len() - 1
                }
            };
            let c = &mut checks[idx];
            c.checked += 1;
            c.worst_margin = c.worst_margin.max(o.margin);
            if !o.ok {
                c.failed += 1;
                if counterexamples.len() < MAX_COUNTEREXAMPLES {
                    counterexamples.extend(o.counterexample);
                }
            }
        }
        for (name, v) in trial.samples {
            let e = acc.entry(name.to_string()).or_insert((0, 0.0, f64::INFINITY, f64::NEG_INFINITY));
            e.0 += 1;
            e.1 += v;
            e.2 = e.2.min(v);
            e.3 = e.3.max(v);
        }
    }
    let stats = acc
        .into_iter()
        .map(|(k, (count, sum, min, max))| (k, Summary { count, mean: sum / count as f64, min, max }))
        .collect();
    SuiteReport { suite, seed, trials, checks, stats, counterexamples }
}

pub fn run_verify(suite: Suite, seed: u64, trials: usize) -> SuiteReport {
    run_verify_with(suite, seed, trials, &Evaluators::default())
}

pub fn run_verify_with(suite: Suite, seed: u64, trials: usize, ev: &Evaluators) -> SuiteReport {
    let ev = *ev;
    match suite {
        Suite::Oracle => run_trials(suite, seed, trials, |rng, i| oracle_trial(rng, i, ev)),
        Suite::Block => run_trials(suite, seed, trials, |rng, i| block_trial(rng, i, ev)),
        Suite::Sandwich => run_trials(suite, seed, trials, sandwich_trial),
        Suite::Monotone => run_trials(suite, seed, trials, |rng, i| monotone_trial(rng, i, ev)),
        Suite::Beta3 => run_trials(suite, seed, trials, |rng, i| beta3_trial(rng, i, ev)),
        Suite::Consec => run_trials(suite, seed, trials, consec_trial),
        Suite::Table => run_trials(suite, seed, trials, table_trial),
        Suite::Lambda => lambda_report(seed),
        Suite::Optineq => run_trials(suite, seed, trials, optineq_trial),
        Suite::Algineq => run_trials(suite, seed, trials, |rng, i| algineq_trial(rng, i, ev)),
        Suite::Ytail => run_trials(suite, seed, trials, |rng, i| ytail_trial(rng, i, ev)),
        Suite::Endtoend => run_trials(suite, seed, trials, |rng, i| endtoend_trial(rng, i, ev)),
        Suite::Mc => mc_report(seed, trials),
    }
}

// ---- generators ---------------------------------------------------------

fn random_prob_model(rng: &mut ChaCha8Rng, n: usize) -> ProbModel {
    match rng.random_range(0..4) {
        0 => ProbModel::Uniform { lo: 0.0, hi: 1.0 },
        1 => ProbModel::Uniform { lo: 0.5, hi: 1.0 },
        2 => {
            // low tier straddles the 1/n^2 threshold
            let low = rng.random_range(0.0..2.0) / (n * n) as f64;
            ProbModel::TwoTier { high: rng.random_range(0.2..=1.0), low: low.min(1.0) }
        }
        _ => ProbModel::Uniform { lo: 0.0, hi: 0.2 },
    }
}

/// Instance with a random metric model and probability model; a few
/// probabilities are snapped to 0 or 1.
fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> AprioriInstance<f64> {
    let metric_model =
        if rng.random_bool(0.5) { MetricModel::EuclideanUniform } else { MetricModel::MatrixShortestpath };
    let metric = random_metric(rng, n, metric_model);
    let model = random_prob_model(rng, n);
    let mut prob = random_probabilities(rng, n, model);
    for p in prob.iter_mut().skip(1) {
        match rng.random_range(0..12) {
            0 => *p = 0.0,
            1 => *p = 1.0,
            _ => {}
        }
    }
    AprioriInstance::new(metric, prob).expect("valid probabilities")
}

fn random_tour(rng: &mut ChaCha8Rng, n: usize, root: usize) -> MasterTour {
    let mut rest: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    rest.shuffle(rng);
    MasterTour::new(std::iter::once(root).chain(rest).collect(), root).expect("permutation")
}

/// Up to four groups of co-located copies, at most `MAX_CHECK_COPIES` in
/// total, with a random copy tour.
fn random_scaled(rng: &mut ChaCha8Rng) -> (ScaledInstance<f64>, MasterTour) {
    let g = rng.random_range(1..=4);
    let mut budget = MAX_CHECK_COPIES;
    let mut groups = Vec::with_capacity(g);
    for v in 1..=g {
        let left = g - v;
        let size = rng.random_range(1..=(budget - left).min(5));
        budget -= size;
        groups.push((v, size));
    }
    let pts = random_points(rng, g + 1);
    let metric = Metric::new(crate::io::distance_matrix(&pts), 0).expect("euclidean");
    let p = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0][rng.random_range(0..7)];
    let scaled = ScaledInstance::from_groups(metric, p, &groups).expect("valid groups");
    let tour = random_tour(rng, scaled.n_copies(), 0);
    (scaled, tour)
}

// ---- suites -------------------------------------------------------------

fn oracle_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let n = rng.random_range(1..=9);
    let inst = random_instance(rng, n);
    let tour = random_tour(rng, n, 0);
    let value = (ev.elat)(&inst, &tour);
    let brute = brute_force_elat(&inst, &tour, 15).expect("n <= 9").value;
    t.close("exact_vs_brute", value, brute, AGREE_REL, || {
        ce("exact_vs_brute", trial, format!("evaluator {value} vs enumeration {brute}"), Some(("oracle", &inst)), Some(tour.order()))
    });
    t
}

fn block_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let (scaled, tour) = random_scaled(rng);
    let flat = scaled.flatten().expect("small");
    let block = scaled.elat(tour.order());
    let value = (ev.elat)(&flat, &tour);
    t.close("block_vs_flat", block, value, AGREE_REL, || {
        ce("block_vs_flat", trial, format!("block {block} vs flat {value}"), Some(("block", &flat)), Some(tour.order()))
    });
    t.sample("copies", scaled.n_copies() as f64);
    t
}

fn sandwich_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut t = Trial::default();
    let n = rng.random_range(2..=60);
    let threshold = 1.0 / (n * n) as f64;
    let mut prob = vec![1.0];
    for _ in 1..n {
        prob.push(match rng.random_range(0..5) {
            0 => 1.0,
            1 => rng.random_range(threshold..=(4.0 * threshold).min(1.0)),
            2 => rng.random_range(0.0..threshold),
            _ => rng.random_range(threshold..=1.0),
        });
    }
    let pts = random_points(rng, n);
    let inst = AprioriInstance::new(Metric::new(crate::io::distance_matrix(&pts), 0).expect("euclidean"), prob)
        .expect("valid");
    match scaling_params(&inst, &partition_xy(&inst)) {
        Ok(params) => {
            let bad = params.sandwich_violations(1e-12);
            t.holds("q_sandwich", bad.is_empty(), || {
                ce("q_sandwich", trial, format!("violations at {bad:?}"), Some(("sandwich", &inst)), None)
            });
            let slack_ok = params.groups.iter().all(|g| g.t >= 1 && (0.0..=1.0).contains(&g.q));
            t.holds("copy_counts", slack_ok, || ce("copy_counts", trial, "t < 1 or q outside [0,1]".into(), Some(("sandwich", &inst)), None));
            t.sample("total_copies", params.total_copies() as f64);
        }
        Err(_) => t.sample("degenerate", 1.0),
    }
    t
}

fn raise(rng: &mut ChaCha8Rng, prob: &[f64]) -> Vec<f64> {
    prob.iter().map(|&p| if rng.random_bool(0.5) { p + (1.0 - p) * rng.random::<f64>() } else { p }).collect()
}

fn monotone_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let n = rng.random_range(2..=9);
    let low = random_instance(rng, n);
    let high = low.with_probabilities(raise(rng, low.prob())).expect("valid");
    let tour = random_tour(rng, n, 0);
    let (a, b) = ((ev.elat)(&low, &tour), (ev.elat)(&high, &tour));
    t.le("monotone", a, b + MONOTONE_REL * (1.0 + b.abs()), || {
        ce("monotone", trial, format!("lower probabilities give {a} > {b}; raised: {:?}", high.prob()), Some(("monotone-low", &low)), Some(tour.order()))
    });
    t
}

fn beta3_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let n = rng.random_range(2..=9);
    let upper = random_instance(rng, n);
    let beta: f64 = 1.0 - rng.random::<f64>();
    // the root stays at 1, which satisfies beta * 1 <= 1 <= 1
    let q: Vec<f64> = upper
        .prob()
        .iter()
        .enumerate()
        .map(|(v, &p)| if v == upper.root() { 1.0 } else { p * (beta + (1.0 - beta) * rng.random::<f64>()) })
        .collect();
    let lower = upper.with_probabilities(q).expect("valid");
    let tour = random_tour(rng, n, 0);
    let (a, b) = ((ev.elat)(&lower, &tour), (ev.elat)(&upper, &tour));
    t.le("beta_cubed", beta.powi(3) * b - BOUND_ABS, a, || {
        ce("beta_cubed", trial, format!("beta {beta}: {a} < beta^3 * {b}; scaled probabilities {:?}", lower.prob()), Some(("beta3-upper", &upper)), Some(tour.order()))
    });
    t
}

/// Line r=0, u=1, z=2 with the two copies of z visited on either side of u.
/// Returns the value before and after repair and the repaired tour.
pub fn worked_merge() -> (f64, f64, Vec<usize>) {
    let metric = Metric::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).expect("metric");
    let scaled = ScaledInstance::from_groups(metric, 0.5, &[(1, 1), (2, 2)]).expect("groups");
    let tau = MasterTour::new(vec![0, 2, 1, 3], 0).expect("tour");
    let out = make_consecutive(&scaled, &tau).expect("valid");
    (scaled.elat(tau.order()), scaled.elat(out.tour.order()), out.tour.into_order())
}

fn consec_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut t = Trial::default();
    if trial == 0 {
        let (before, after, order) = worked_merge();
        let exact = (before - 3.25).abs() < 1e-12 && (after - 2.5).abs() < 1e-12;
        t.holds("worked_example", exact && order == [0, 1, 2, 3], || {
            ce("worked_example", trial, format!("{before} -> {after} via {order:?}"), None, None)
        });
    }
    let (scaled, tour) = random_scaled(rng);
    let flat = scaled.flatten().expect("small");
    let brute = |order: &[usize]| {
        brute_force_elat(&flat, &MasterTour::new(order.to_vec(), 0).expect("copy tour"), 15).expect("small").value
    };
    let dump = |order: &[usize], detail: String, check: &str| ce(check, trial, detail, Some(("consec", &flat)), Some(order));

    let out = make_consecutive(&scaled, &tour).expect("valid tour");
    let before = scaled.elat(tour.order());
    let after = scaled.elat(out.tour.order());
    t.holds("consecutive", scaled.is_consecutive(out.tour.order()), || {
        dump(tour.order(), format!("output {:?} not consecutive", out.tour.order()), "consecutive")
    });
    t.le("no_worse", after, before + BOUND_ABS, || dump(tour.order(), format!("{before} -> {after}"), "no_worse"));

    // replay the merges and confirm each one by enumeration
    let mut order = tour.order().to_vec();
    let mut vertices: Vec<usize> = scaled.groups().iter().map(|g| g.vertex).collect();
    vertices.sort_unstable();
    for v in vertices {
        while let Some(c) = merge_candidate(&scaled, &order, v).expect("valid") {
            let (b0, bi, bj) = (brute(&order), brute(&c.tau_i), brute(&c.tau_j));
            t.le("merge_dominance", bi.min(bj) - BOUND_ABS, b0, || {
                dump(&order, format!("tau {b0}, tau_i {bi}, tau_j {bj}"), "merge_dominance")
            });
            t.close("merge_block_vs_brute", c.step.before, b0, AGREE_REL, || {
                dump(&order, format!("block {} vs brute {b0}", c.step.before), "merge_block_vs_brute")
            });
            let lambda = lambda_value(scaled.p(), c.step.k_i, c.step.k_j).expect("p > 0");
            let mix = lambda * bi + (1.0 - lambda) * bj;
            t.le("convex_combination", mix - BOUND_ABS, b0, || {
                dump(&order, format!("tau {b0} < {lambda} * {bi} + (1 - {lambda}) * {bj}"), "convex_combination")
            });
            t.sample("merges", 1.0);
            order = c.into_chosen();
        }
    }
    t.holds("replay_matches", order == out.tour.order(), || dump(tour.order(), "replayed merges diverged".into(), "replay_matches"));
    t
}

/// Two runs of one group among single-copy fillers. Fillers are split into
/// the stretch before, between and after the runs; `b` picks active ones.
struct TableCase {
    scaled: ScaledInstance<f64>,
    order: Vec<usize>,
    b: Vec<usize>,
    part_i: std::ops::Range<usize>,
    part_j: std::ops::Range<usize>,
}

fn table_case(rng: &mut ChaCha8Rng, b2_empty: bool) -> TableCase {
    let (k_i, k_j) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let fillers = rng.random_range(3..=6);
    let p = rng.random_range(1..=9) as f64 / 10.0;
    let pts = random_points(rng, fillers + 2);
    let metric = Metric::new(crate::io::distance_matrix(&pts), 0).expect("euclidean");
    let mut groups = vec![(1, k_i + k_j)];
    groups.extend((0..fillers).map(|f| (f + 2, 1)));
    let scaled = ScaledInstance::from_groups(metric, p, &groups).expect("groups");
    let copy = |f: usize| 1 + k_i + k_j + f;
    let mut perm: Vec<usize> = (0..fillers).collect();
    perm.shuffle(rng);
    // one active filler in each stretch (none between the runs if b2_empty)
    let (lo, hi) = if b2_empty {
        let cut = rng.random_range(1..fillers);
        (cut, cut)
    } else {
        let lo = rng.random_range(1..=fillers - 2);
        (lo, rng.random_range(lo + 1..fillers))
    };
    let mut order = vec![0];
    order.extend(perm[..lo].iter().map(|&f| copy(f)));
    let part_i = order.len()..order.len() + k_i;
    order.extend(1..=k_i);
    order.extend(perm[lo..hi].iter().map(|&f| copy(f)));
    let part_j = order.len()..order.len() + k_j;
    order.extend(k_i + 1..=k_i + k_j);
    order.extend(perm[hi..].iter().map(|&f| copy(f)));
    let mut b = Vec::new();
    for stretch in [&perm[..lo], &perm[lo..hi], &perm[hi..]] {
        for (idx, &f) in stretch.iter().enumerate() {
            if idx == 0 || rng.random_bool(0.5) {
                b.push(copy(f));
            }
        }
    }
    TableCase { scaled, order, b, part_i, part_j }
}

fn table_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut t = Trial::default();
    for degenerate in [false, true] {
        let case = table_case(rng, degenerate);
        let TableCase { scaled, order, b, part_i, part_j } = &case;
        let flat = scaled.flatten().expect("small");
        let dump = |detail: String, check: &str| ce(check, trial, format!("{detail}; B = {b:?}, parts {part_i:?} {part_j:?}"), Some(("table", &flat)), Some(order));
        let pred = table_predictions(scaled, order, b, part_i.clone(), part_j.clone(), scaled.p()).expect("valid case");
        let tau_i = relocate(order, part_i.clone(), part_j.clone(), Relocation::AfterFirst).expect("parts");
        let tau_j = relocate(order, part_i.clone(), part_j.clone(), Relocation::BeforeSecond).expect("parts");
        let tours = [order.as_slice(), &tau_i, &tau_j];
        let u = pred.row.u();
        let mut brute_values = vec![[0.0; 3]; pred.vertices.len()];
        for (slot, pv) in brute_values.iter_mut().zip(&pred.vertices) {
            for (k, tour) in tours.iter().enumerate() {
                slot[k] = conditional_expected_latency(scaled, tour, b, &u, scaled.p(), pv.vertex).expect("small");
            }
        }
        if degenerate {
            t.holds("b2_empty_flagged", pred.degenerate, || dump("B2 empty but not flagged".into(), "b2_empty_flagged"));
            for (pv, bv) in pred.vertices.iter().zip(&brute_values) {
                t.close("b2_empty_equal", bv[0], bv[1], AGREE_REL, || dump(format!("vertex {}: {bv:?}", pv.vertex), "b2_empty_equal"));
                t.close("b2_empty_equal", bv[0], bv[2], AGREE_REL, || dump(format!("vertex {}: {bv:?}", pv.vertex), "b2_empty_equal"));
                t.close("b2_empty_entry", bv[0], pv.values[0], AGREE_REL, || dump(format!("vertex {}: {bv:?} vs {:?}", pv.vertex, pv.values), "b2_empty_entry"));
            }
            continue;
        }
        for class in VertexClass::ALL {
            for k in 0..3 {
                let name = TABLE_ENTRY_NAMES[k][class.index()];
                let mut seen = false;
                for (pv, bv) in pred.vertices.iter().zip(&brute_values).filter(|(pv, _)| pv.class == class) {
                    seen = true;
                    t.close(name, bv[k], pv.values[k], AGREE_REL, || {
                        dump(format!("vertex {} tour {k}: enumeration {} vs table {}", pv.vertex, bv[k], pv.values[k]), name)
                    });
                }
                t.holds("entry_covered", seen, || dump(format!("no vertex of class {class:?}"), "entry_covered"));
            }
        }
        let row = &pred.row;
        let u_total = |k: usize| pred.vertices.iter().zip(&brute_values).filter(|(pv, _)| !pv.class.is_b()).map(|(_, bv)| bv[k]).sum::<f64>();
        let (ki, kj) = (row.k_i as f64, row.k_j as f64);
        t.le("group_total", ki * row.t_i * row.p + kj * row.t_j * row.p - BOUND_ABS, u_total(0), || dump(format!("U total {}", u_total(0)), "group_total"));
        t.close("group_total_tau_i", u_total(1), (ki + kj) * row.t_i * row.p, AGREE_REL, || dump(format!("U total {}", u_total(1)), "group_total_tau_i"));
        t.close("group_total_tau_j", u_total(2), (ki + kj) * row.t_j * row.p, AGREE_REL, || dump(format!("U total {}", u_total(2)), "group_total_tau_j"));
    }
    t
}

/// Check names for each (tour, class) entry of the table.
const TABLE_ENTRY_NAMES: [[&str; 5]; 3] = [
    ["tau/B1", "tau/B2", "tau/B3", "tau/Ci", "tau/Cj"],
    ["tau_i/B1", "tau_i/B2", "tau_i/B3", "tau_i/Ci", "tau_i/Cj"],
    ["tau_j/B1", "tau_j/B2", "tau_j/B3", "tau_j/Ci", "tau_j/Cj"],
];

/// Grid resolution of the lambda sweep: p = k / 1000.
pub const LAMBDA_GRID: usize = 1000;
/// Largest run length in the lambda sweep.
pub const LAMBDA_MAX_K: usize = 50;

fn lambda_report(seed: u64) -> SuiteReport {
    run_trials(Suite::Lambda, seed, LAMBDA_GRID - 1, |_, idx| {
        let mut t = Trial::default();
        let p = (idx + 1) as f64 / LAMBDA_GRID as f64;
        for k_i in 1..=LAMBDA_MAX_K {
            for k_j in 1..=LAMBDA_MAX_K {
                let c = check_lambda(p, k_i, k_j).expect("p > 0");
                let worst = (-c.slack_alpha_i).max(-c.slack_alpha_j).max(-c.slack_k).max(-c.ratio_decrease);
                t.push("lambda_inequalities", c.holds, worst, || {
                    ce("lambda_inequalities", idx, format!("p {p}, k_i {k_i}, k_j {k_j}: {c:?}"), None, None)
                });
                t.close("union_identity", c.identity_residual, 0.0, 1e-12, || {
                    ce("union_identity", idx, format!("p {p}, k_i {k_i}, k_j {k_j}: residual {}", c.identity_residual), None, None)
                });
            }
        }
        t
    })
}

/// Instance with `n <= 5` whose scaled copy count stays at most 9. Every
/// X vertex needs at least `n` copies, so X is small and the rest is Y.
fn small_reduction_instance(rng: &mut ChaCha8Rng) -> AprioriInstance<f64> {
    let n = rng.random_range(2..=5);
    let m = rng.random_range(1..=((9 / n).min(n - 1)));
    // copy counts: the minimum vertex gets exactly n
    let mut t = vec![n; m];
    let mut spare = 9 - n * m;
    for slot in t.iter_mut().skip(1) {
        let extra = rng.random_range(0..=spare);
        *slot += extra;
        spare -= extra;
    }
    let threshold = 1.0 / (n * n) as f64;
    let max_t = *t.iter().max().expect("m >= 1");
    let p_min = rng.random_range(threshold..=(n as f64 / max_t as f64).min(1.0));
    let mut prob = vec![1.0; n];
    let mut vertices: Vec<usize> = (1..n).collect();
    vertices.shuffle(rng);
    for (k, &v) in vertices.iter().enumerate() {
        prob[v] = if k < m {
            let ti = t[k];
            if ti == n { p_min } else { p_min * (ti as f64 - rng.random_range(0.01..0.99)) / n as f64 }
        } else {
            rng.random_range(0.0..threshold)
        };
    }
    let model = if rng.random_bool(0.5) { MetricModel::EuclideanUniform } else { MetricModel::MatrixShortestpath };
    AprioriInstance::new(random_metric(rng, n, model), prob).expect("valid")
}

fn optineq_trial(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut t = Trial::default();
    let inst = small_reduction_instance(rng);
    let n = inst.n();
    let part = partition_xy(&inst);
    let params = scaling_params(&inst, &part).expect("X has a non-root vertex");
    t.le("copy_budget", params.total_copies() as f64, 9.0, || ce("copy_budget", trial, format!("{} copies", params.total_copies()), Some(("optineq", &inst)), None));
    let scaled = build_scaled(&inst, &params, DEFAULT_COPY_CAP).expect("small");
    let (_, opt_j) = brute_force_opt_scaled(&scaled, 9).expect("few groups");
    let restricted = restrict_instance(&inst, &part.x).expect("root in X");
    let (_, opt_x) = brute_force_opt(&restricted.instance, 9).expect("small");
    let (_, opt_i) = brute_force_opt(&inst, 9).expect("small");
    let factor = e_ratio() * (1.0 + 1.0 / n as f64).powi(4);
    t.le("opt_j_vs_opt_x", opt_j, factor * opt_x + BOUND_ABS, || {
        ce("opt_j_vs_opt_x", trial, format!("OPT(J) {opt_j} > {factor} * OPT(I|X) {opt_x}"), Some(("optineq", &inst)), None)
    });
    t.le("opt_j_vs_opt_i", opt_j, factor * opt_i + BOUND_ABS, || {
        ce("opt_j_vs_opt_i", trial, format!("OPT(J) {opt_j} > {factor} * OPT(I) {opt_i}"), Some(("optineq", &inst)), None)
    });
    if opt_x > 0.0 {
        t.sample("ratio_j_over_x", opt_j / opt_x);
    }
    t.sample("copies", params.total_copies() as f64);
    t
}

fn algineq_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let (inst, scaled, part) = loop {
        let n = rng.random_range(3..=8);
        let inst = random_instance(rng, n);
        let part = partition_xy(&inst);
        let Ok(params) = scaling_params(&inst, &part) else { continue };
        match build_scaled(&inst, &params, DEFAULT_COPY_CAP) {
            Ok(scaled) => break (inst, scaled, part),
            Err(Error::CopyCapExceeded { .. }) => continue,
            Err(e) => panic!("unexpected {e}"),
        }
    };
    let n = inst.n();
    let mut group_order: Vec<usize> = scaled.groups().iter().map(|g| g.vertex).collect();
    group_order.shuffle(rng);
    let copy_tour = scaled.consecutive_tour(&group_order).expect("groups");
    let alg_j = scaled.elat(copy_tour.order());
    let collapsed = collapse_tour(&scaled, &copy_tour).expect("consecutive");
    let restricted = restrict_instance(&inst, &part.x).expect("root in X");
    let mapped: Vec<usize> = collapsed.iter().map(|&v| restricted.index_of(v).expect("X vertex")).collect();
    let tour = MasterTour::new(mapped, restricted.instance.root()).expect("permutation of X");
    let alg_i = (ev.elat)(&restricted.instance, &tour);
    let factor = e_ratio().powi(3) * (1.0 + 1.0 / n as f64).powi(3);
    t.le("collapse_bound", alg_i, factor * alg_j + BOUND_ABS, || {
        ce("collapse_bound", trial, format!("ALG(I|X) {alg_i} > {factor} * ALG(J) {alg_j}"), Some(("algineq-x", &restricted.instance)), Some(tour.order()))
    });
    if alg_j > 0.0 {
        t.sample("ratio", alg_i / alg_j);
    }
    t
}

fn ytail_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let inst = loop {
        let n = rng.random_range(3..=9);
        let model = if rng.random_bool(0.5) { MetricModel::EuclideanUniform } else { MetricModel::MatrixShortestpath };
        let metric = random_metric(rng, n, model);
        let low = rng.random_range(0.0..1.0) / (n * n) as f64;
        let high = rng.random_range(0.05..=1.0);
        let prob = random_probabilities(rng, n, ProbModel::TwoTier { high, low });
        let inst = AprioriInstance::new(metric, prob).expect("valid");
        if !partition_xy(&inst).y.is_empty() {
            break inst;
        }
    };
    let (tour, art) = apriori_solve(&inst, &NearestNeighbor, &SolveConfig::default()).expect("solvable");
    let x_len = art.collapsed.len();
    let terms = tail_terms(&inst, &tour, x_len, 15).expect("n <= 9");
    let dump = |detail: String, check: &str| ce(check, trial, detail, Some(("ytail", &inst)), Some(tour.order()));
    t.le("y_tail_bound", terms.y_part, terms.y_bound + BOUND_ABS, || dump(format!("{terms:?}"), "y_tail_bound"));
    t.close("decomposition", terms.total, terms.x_part + terms.y_part, AGREE_REL, || dump(format!("{terms:?}"), "decomposition"));
    let exact = (ev.elat)(&inst, &tour);
    t.close("decomposition_total", terms.total, exact, AGREE_REL, || dump(format!("enumeration {} vs evaluator {exact}", terms.total), "decomposition_total"));
    t.le("prefix_below_x_part", terms.prefix_length, terms.x_part + BOUND_ABS, || dump(format!("{terms:?}"), "prefix_below_x_part"));
    t.holds("y_last", art.y_order.iter().all(|v| tour.order()[x_len..].contains(v)), || dump("Y vertices not at the end".into(), "y_last"));
    if terms.y_bound > 0.0 {
        t.sample("y_part_over_bound", terms.y_part / terms.y_bound);
    }
    t
}

fn endtoend_trial(rng: &mut ChaCha8Rng, trial: usize, ev: Evaluators) -> Trial {
    let mut t = Trial::default();
    let n = rng.random_range(3..=8);
    let inst = random_instance(rng, n);
    let solver = BruteForce::default();
    let config = SolveConfig { seed: rng.random(), ..SolveConfig::default() };
    let (tour, _) = apriori_solve(&inst, &solver, &config).expect("brute force within limits");
    let alg = (ev.elat)(&inst, &tour);
    let (_, opt) = brute_force_opt(&inst, 9).expect("n <= 8");
    let bound = end_to_end_bound(n, 1.0) * END_TO_END_SLACK;
    let dump = |detail: String| ce("ratio_bound", trial, detail, Some(("endtoend", &inst)), Some(tour.order()));
    if opt > 0.0 {
        let ratio = alg / opt;
        t.le("ratio_bound", ratio, bound, || dump(format!("ALG {alg} / OPT {opt} = {ratio} > {bound}")));
        t.le("ratio_at_least_one", 1.0 - 1e-9, ratio, || dump(format!("ALG {alg} below OPT {opt}")));
        t.sample("ratio", ratio);
    } else {
        t.le("ratio_bound", alg, BOUND_ABS, || dump(format!("OPT is 0 but ALG is {alg}")));
        t.sample("ratio", 1.0);
    }
    t
}

fn mc_report(seed: u64, trials: usize) -> SuiteReport {
    let mut report = run_trials(Suite::Mc, seed, trials, |rng, _| {
        let mut t = Trial::default();
        let n = rng.random_range(2..=9);
        let inst = random_instance(rng, n);
        let tour = random_tour(rng, n, 0);
        let exact = exact_elat(&inst, &tour).value;
        let est = mc_elat(&inst, &tour, MC_SAMPLES, rng.random()).expect("enough samples");
        let gap = (est.value - exact).abs();
        let within = if est.stderr > 0.0 { gap <= 4.0 * est.stderr } else { gap <= AGREE_REL * (1.0 + exact) };
        t.sample("within_4se", if within { 1.0 } else { 0.0 });
        if est.stderr > 0.0 {
            t.sample("z_score", gap / est.stderr);
        }
        t
    });
    let coverage = report.stat("within_4se").map_or(0.0, |s| s.mean);
    let ok = coverage >= MC_COVERAGE;
    report.checks.push(CheckResult {
        name: "coverage".into(),
        checked: trials,
        failed: usize::from(!ok),
        worst_margin: MC_COVERAGE - coverage,
    });
    report
}
