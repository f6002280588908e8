//! Uniform-probability solvers for the reduction's solver slot, and exact
//! baselines used for certification.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::latency::{block_elat_value, exact_elat_with, Block, BlockSequence};
use crate::model::{AprioriInstance, Distances, MasterTour};
use crate::reduction::ScaledInstance;
use crate::scalar::Scalar;

/// Default cap on non-root vertices (or groups) for permutation enumeration.
pub const BRUTE_OPT_LIMIT: usize = 9;

/// Default number of move evaluations for [`local_search`].
pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDescriptor {
    pub name: String,
    /// Claimed approximation ratio; infinite for heuristics.
    pub rho: f64,
    /// Largest number of groups the solver accepts.
    pub max_groups: Option<usize>,
}

impl SolverDescriptor {
    pub fn new(name: impl Into<String>, rho: f64, max_groups: Option<usize>) -> Self {
        assert!(rho >= 1.0, "approximation ratio must be at least 1");
        SolverDescriptor { name: name.into(), rho, max_groups }
    }
}

pub trait UniformSolver<S: Scalar>: Sync {
    fn descriptor(&self) -> SolverDescriptor;

    /// Master tour over all copies of `scaled`, root copy first. Need not
    /// be consecutive.
    fn solve(&self, scaled: &ScaledInstance<S>, seed: u64) -> Result<MasterTour>;
}

/// Runs `solver` after checking its size limit, and validates its output.
pub fn solve_uniform<S: Scalar>(
    scaled: &ScaledInstance<S>,
    solver: &dyn UniformSolver<S>,
    seed: u64,
) -> Result<MasterTour> {
    let desc = solver.descriptor();
    let groups = scaled.groups().len();
    if let Some(limit) = desc.max_groups {
        if groups > limit {
            return Err(Error::TooLarge { size: groups, limit });
        }
    }
    let tour = solver.solve(scaled, seed).map_err(|e| match e {
        e @ Error::Solver { .. } => e,
        other => Error::Solver { name: desc.name.clone(), reason: other.to_string() },
    })?;
    if tour.len() != scaled.n_copies() || tour.root() != 0 {
        return Err(Error::Solver {
            name: desc.name,
            reason: format!("returned {} vertices for {} copies", tour.len(), scaled.n_copies()),
        });
    }
    Ok(tour)
}

/// Exhaustive search over group orders. Exact, since some optimal tour
/// visits every group contiguously.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub limit: usize,
}

impl Default for BruteForce {
    fn default() -> Self {
        BruteForce { limit: BRUTE_OPT_LIMIT }
    }
}

impl<S: Scalar> UniformSolver<S> for BruteForce {
    fn descriptor(&self) -> SolverDescriptor {
        SolverDescriptor::new("brute", 1.0, Some(self.limit))
    }

    fn solve(&self, scaled: &ScaledInstance<S>, _seed: u64) -> Result<MasterTour> {
        brute_force_opt_scaled(scaled, self.limit).map(|(t, _)| t)
    }
}

/// Greedy closest-next group.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighbor;

impl<S: Scalar> UniformSolver<S> for NearestNeighbor {
    fn descriptor(&self) -> SolverDescriptor {
        SolverDescriptor::new("nn", f64::INFINITY, None)
    }

    fn solve(&self, scaled: &ScaledInstance<S>, _seed: u64) -> Result<MasterTour> {
        scaled.consecutive_tour(&nearest_group_order(scaled))
    }
}

/// Relocate and 2-opt over group orders, starting from nearest neighbour.
#[derive(Debug, Clone, Copy)]
pub struct LocalSearch {
    pub budget: usize,
}

impl Default for LocalSearch {
    fn default() -> Self {
        LocalSearch { budget: DEFAULT_BUDGET }
    }
}

impl<S: Scalar> UniformSolver<S> for LocalSearch {
    fn descriptor(&self) -> SolverDescriptor {
        SolverDescriptor::new("local", f64::INFINITY, None)
    }

    fn solve(&self, scaled: &ScaledInstance<S>, seed: u64) -> Result<MasterTour> {
        let root = scaled.metric().root();
        let start: Vec<usize> = std::iter::once(root).chain(nearest_group_order(scaled)).collect();
        let trace = improve(start, |seq| group_order_elat(scaled, &seq[1..]), seed, self.budget.max(1));
        scaled.consecutive_tour(&trace.order[1..])
    }
}

/// Solver registered under `name`: `brute`, `nn` or `local`.
pub fn solver_by_name<S: Scalar>(name: &str) -> Option<Box<dyn UniformSolver<S>>> {
    match name {
        "brute" => Some(Box::new(BruteForce::default())),
        "nn" => Some(Box::new(NearestNeighbor)),
        "local" => Some(Box::new(LocalSearch::default())),
        _ => None,
    }
}

pub const SOLVER_NAMES: [&str; 3] = ["brute", "nn", "local"];

/// Lexicographic successor; false once the slice is the last permutation.
fn next_permutation(xs: &mut [usize]) -> bool {
    let Some(i) = xs.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = xs.iter().rposition(|&x| x > xs[i]).expect("pivot has a successor");
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

/// Minimum expected latency over all master tours. Ties go to the
/// lexicographically first tour.
pub fn brute_force_opt<S: Scalar>(instance: &AprioriInstance<S>, limit: usize) -> Result<(MasterTour, S)> {
    let root = instance.root();
    let mut rest: Vec<usize> = (0..instance.n()).filter(|&v| v != root).collect();
    if rest.len() > limit {
        return Err(Error::TooLarge { size: rest.len(), limit });
    }
    let mut order = Vec::with_capacity(instance.n());
    let mut best: Option<(Vec<usize>, S)> = None;
    loop {
        order.clear();
        order.push(root);
        order.extend_from_slice(&rest);
        let value = exact_elat_with(instance.metric(), instance.prob(), &order);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((order.clone(), value));
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let (order, value) = best.expect("at least one tour");
    Ok((MasterTour::from_order_unchecked(order), value))
}

fn group_order_elat<S: Scalar>(scaled: &ScaledInstance<S>, vertices: &[usize]) -> S {
    let blocks = vertices
        .iter()
        .map(|&v| Block { rep: v, size: scaled.group_of_vertex(v).map_or(0, |g| g.len), prob: scaled.p() })
        .collect();
    block_elat_value(scaled.metric(), &BlockSequence { root: scaled.metric().root(), blocks })
}

/// Optimum over consecutive copy tours, by enumerating group orders.
pub fn brute_force_opt_scaled<S: Scalar>(scaled: &ScaledInstance<S>, limit: usize) -> Result<(MasterTour, S)> {
    let mut vertices: Vec<usize> = scaled.groups().iter().map(|g| g.vertex).collect();
    if vertices.len() > limit {
        return Err(Error::TooLarge { size: vertices.len(), limit });
    }
    vertices.sort_unstable();
    let mut best: Option<(Vec<usize>, S)> = None;
    loop {
        let value = group_order_elat(scaled, &vertices);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((vertices.clone(), value));
        }
        if !next_permutation(&mut vertices) {
            break;
        }
    }
    let (order, value) = best.expect("at least one order");
    Ok((scaled.consecutive_tour(&order)?, value))
}

fn nearest_order<S: Scalar, D: Distances<S>>(d: &D, root: usize, mut candidates: Vec<usize>) -> Vec<usize> {
    let mut out = Vec::with_capacity(candidates.len());
    let mut here = root;
    candidates.sort_unstable();
    while !candidates.is_empty() {
        let (idx, _) = candidates
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, S)>, (i, &v)| {
                let dv = d.dist(here, v);
                match best {
                    Some((_, b)) if b <= dv => best,
                    _ => Some((i, dv)),
                }
            })
            .expect("candidates nonempty");
        here = candidates.remove(idx);
        out.push(here);
    }
    out
}

fn nearest_group_order<S: Scalar>(scaled: &ScaledInstance<S>) -> Vec<usize> {
    let vertices = scaled.groups().iter().map(|g| g.vertex).collect();
    nearest_order(scaled.metric(), scaled.metric().root(), vertices)
}

/// Greedy closest unvisited vertex from the root; ties by index.
pub fn nearest_neighbor<S: Scalar>(instance: &AprioriInstance<S>) -> MasterTour {
    let root = instance.root();
    let rest = (0..instance.n()).filter(|&v| v != root).collect();
    let order = std::iter::once(root).chain(nearest_order(instance.metric(), root, rest)).collect();
    MasterTour::from_order_unchecked(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
enum Move {
    Relocate { from: usize, to: usize },
    Reverse { from: usize, to: usize },
}

impl Move {
    fn apply(self, seq: &mut Vec<usize>) {
        match self {
            Move::Relocate { from, to } => {
                let v = seq.remove(from);
                seq.insert(to, v);
            }
            Move::Reverse { from, to } => seq[from..=to].reverse(),
        }
    }
}

/// Objective values of a local search run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace<S> {
    pub order: Vec<usize>,
    pub start_value: S,
    /// Objective after each accepted move.
    pub accepted: Vec<S>,
    pub evaluations: usize,
}

impl<S: Scalar> SearchTrace<S> {
    pub fn value(&self) -> S {
        self.accepted.last().copied().unwrap_or(self.start_value)
    }
}

const IMPROVE_REL: f64 = 1e-12;

/// First-improvement descent over relocate and segment-reversal moves on
/// positions `1..`. The move list is shuffled once with `seed`; scanning
/// resumes after the last accepted move and stops after a full pass
/// without improvement or when `budget` evaluations are spent.
fn improve<S: Scalar>(mut seq: Vec<usize>, objective: impl Fn(&[usize]) -> S, seed: u64, budget: usize) -> SearchTrace<S> {
    let m = seq.len();
    let mut moves = Vec::new();
    for from in 1..m {
        for to in 1..m {
            if from != to {
                moves.push(Move::Relocate { from, to });
            }
            if from + 1 < to {
                moves.push(Move::Reverse { from, to });
            }
        }
    }
    moves.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let start_value = objective(&seq);
    let mut current = start_value;
    let mut accepted = Vec::new();
    let mut evaluations = 0;
    let mut since_improvement = 0;
    let mut cursor = 0;
    let mut candidate = seq.clone();
    while !moves.is_empty() && since_improvement < moves.len() && evaluations < budget {
        let mv = moves[cursor];
        cursor = (cursor + 1) % moves.len();
        candidate.clone_from(&seq);
        mv.apply(&mut candidate);
        let value = objective(&candidate);
        evaluations += 1;
        if value < current - S::lit(IMPROVE_REL) * (S::one() + current.abs()) {
            std::mem::swap(&mut seq, &mut candidate);
            current = value;
            accepted.push(value);
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
    }
    SearchTrace { order: seq, start_value, accepted, evaluations }
}

/// Local search from the nearest-neighbour tour, scored by exact expected
/// latency.
pub fn local_search_trace<S: Scalar>(instance: &AprioriInstance<S>, seed: u64, budget: usize) -> SearchTrace<S> {
    let start = nearest_neighbor(instance).into_order();
    improve(start, |o| exact_elat_with(instance.metric(), instance.prob(), o), seed, budget)
}

pub fn local_search<S: Scalar>(instance: &AprioriInstance<S>, seed: u64, budget: usize) -> MasterTour {
    MasterTour::from_order_unchecked(local_search_trace(instance, seed, budget).order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::exact_elat;
    use crate::model::Metric;

    fn line(pa: f64, pb: f64) -> AprioriInstance<f64> {
        let m = Metric::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).unwrap();
        AprioriInstance::new(m, vec![1.0, pa, pb]).unwrap()
    }

    #[test]
    fn permutations_in_lexicographic_order() {
        let mut xs = vec![1, 2, 3];
        let mut seen = vec![xs.clone()];
        while next_permutation(&mut xs) {
            seen.push(xs.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![1, 3, 2]);
        assert_eq!(seen[5], vec![3, 2, 1]);
        assert!(!next_permutation(&mut []));
    }

    #[test]
    fn brute_force_line() {
        let (t, v) = brute_force_opt(&line(0.5, 0.5), BRUTE_OPT_LIMIT).unwrap();
        assert_eq!(t.order(), &[0, 1, 2]);
        assert!((v - 1.5).abs() < 1e-15);
        let alt = exact_elat(&line(0.5, 0.5), &MasterTour::new(vec![0, 2, 1], 0).unwrap()).value;
        assert!((alt - 2.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_single_vertex() {
        let m = Metric::new(vec![vec![0.0, 4.0], vec![4.0, 0.0]], 0).unwrap();
        let inst = AprioriInstance::new(m, vec![1.0, 0.3]).unwrap();
        let (_, v) = brute_force_opt(&inst, BRUTE_OPT_LIMIT).unwrap();
        assert!((v - 1.2f64).abs() < 1e-15);
    }

    #[test]
    fn brute_force_limit() {
        assert_eq!(brute_force_opt(&line(0.5, 0.5), 1).unwrap_err(), Error::TooLarge { size: 2, limit: 1 });
    }

    #[test]
    fn nearest_neighbor_examples() {
        assert_eq!(nearest_neighbor(&line(0.5, 0.5)).order(), &[0, 1, 2]);
        let eq = Metric::new(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], 0).unwrap();
        let inst = AprioriInstance::new(eq, vec![1.0, 0.5, 0.5]).unwrap();
        assert_eq!(nearest_neighbor(&inst).order(), &[0, 1, 2]);
        let one = AprioriInstance::new(Metric::new(vec![vec![0.0]], 0).unwrap(), vec![1.0]).unwrap();
        assert_eq!(nearest_neighbor(&one).order(), &[0]);
    }

    #[test]
    fn local_search_keeps_local_optimum() {
        let t = local_search(&line(0.5, 0.5), 1, 100);
        assert_eq!(t.order(), &[0, 1, 2]);
    }

    #[test]
    fn local_search_budget_returns_best_so_far() {
        let pts: Vec<[f64; 2]> = vec![[0.0, 0.0], [5.0, 0.0], [1.0, 1.0], [4.0, 4.0], [0.5, 3.0], [2.0, 0.2]];
        let inst = AprioriInstance::new(Metric::from_points(&pts, 0).unwrap(), vec![1.0, 0.9, 0.2, 0.5, 0.7, 0.3])
            .unwrap();
        let trace = local_search_trace(&inst, 5, 3);
        assert!(trace.evaluations <= 3);
        assert!(trace.value() <= trace.start_value);
        let t = MasterTour::new(trace.order.clone(), 0).unwrap();
        assert!((exact_elat(&inst, &t).value - trace.value()).abs() < 1e-12);
    }

    #[test]
    fn single_copy_scaled_instance_has_unique_tour() {
        let m = Metric::new(vec![vec![0.0, 3.0], vec![3.0, 0.0]], 0).unwrap();
        let scaled = ScaledInstance::from_groups(m, 0.5, &[(1, 1)]).unwrap();
        for solver in SOLVER_NAMES {
            let s = solver_by_name::<f64>(solver).unwrap();
            assert_eq!(solve_uniform(&scaled, s.as_ref(), 0).unwrap().order(), &[0, 1]);
        }
    }

    #[test]
    fn brute_solver_enforces_group_limit() {
        let pts: Vec<[f64; 2]> = (0..4).map(|i| [i as f64, 1.0]).collect();
        let m = Metric::from_points(&pts, 0).unwrap();
        let scaled = ScaledInstance::from_groups(m, 0.5, &[(1, 1), (2, 1), (3, 1)]).unwrap();
        let err = solve_uniform(&scaled, &BruteForce { limit: 2 }, 0).unwrap_err();
        assert_eq!(err, Error::TooLarge { size: 3, limit: 2 });
    }
}
