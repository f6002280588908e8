//! Reduction from non-uniform to uniform activation probabilities.
//!
//! Vertices with `p_v < 1/n^2` (the Y set) are set aside and appended at
//! the end of the final tour in order of distance from the root. Every
//! other vertex `v` (the X set) is replaced by `t_v = ceil(p_v / p)`
//! co-located copies, each active with the uniform probability
//! `p = min_{v in X \ root} p_v / n`. A uniform solver tours the copies,
//! the tour is repaired so that every group of copies is contiguous, and
//! the group order becomes the order of X in the final tour.

use serde::Serialize;

use crate::consecutive::{make_consecutive, MergeStep};
use crate::error::{Error, Result};
use crate::latency::{block_elat_value, Block, BlockSequence};
use crate::model::{walk_latency_at, AprioriInstance, Distances, MasterTour, Metric};
use crate::scalar::{hit_probability, Scalar};
use crate::solvers::{solve_uniform, SolverDescriptor, UniformSolver};

/// Default cap on the number of copies in the scaled instance.
pub const DEFAULT_COPY_CAP: usize = 20_000;

/// Relative slack applied before rounding `p_v / p` up, so an exact
/// multiple that lands a few ulps high is not bumped to the next integer.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    /// `p_v >= 1/n^2`, plus the root. Sorted.
    pub x: Vec<usize>,
    /// `p_v < 1/n^2`. Sorted.
    pub y: Vec<usize>,
}

pub fn partition_xy<S: Scalar>(instance: &AprioriInstance<S>) -> Partition {
    let n = S::from_usize_lossy(instance.n());
    let threshold = S::one() / (n * n);
    let (x, y) = (0..instance.n()).partition(|&v| v == instance.root() || instance.prob()[v] >= threshold);
    Partition { x, y }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupScale<S> {
    pub vertex: usize,
    pub prob: S,
    /// Number of copies.
    pub t: usize,
    /// `1 - (1 - p)^t`: probability that some copy is active.
    pub q: S,
    /// `min((1 + 1/n) p_v, 1)`.
    pub p_bar: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingParams<S> {
    /// Vertex count of the original instance.
    pub n: usize,
    /// Uniform per-copy probability.
    pub p: S,
    /// Smallest probability over X without the root.
    pub min_prob: S,
    /// One entry per non-root X vertex, in vertex order.
    pub groups: Vec<GroupScale<S>>,
}

impl<S: Scalar> ScalingParams<S> {
    pub fn total_copies(&self) -> usize {
        self.groups.iter().map(|g| g.t).sum()
    }

    /// Vertices whose `p_v (1 - 1/e) <= q_v <= p_bar_v <= p_v (1 + 1/n)`
    /// fails beyond a relative tolerance `rel`.
    pub fn sandwich_violations(&self, rel: S) -> Vec<usize> {
        let one = S::one();
        let lower_factor = one - one / S::E();
        let upper_factor = one + one / S::from_usize_lossy(self.n);
        let le = |a: S, b: S| a <= b + rel * (one + b.abs());
        self.groups
            .iter()
            .filter(|g| {
                !(le(g.prob * lower_factor, g.q) && le(g.q, g.p_bar) && le(g.p_bar, g.prob * upper_factor))
            })
            .map(|g| g.vertex)
            .collect()
    }
}

/// `ceil(n p_v / p_min)` with a small downward slack.
fn copies_for<S: Scalar>(n: usize, prob: S, min_prob: S) -> usize {
    let ratio = S::from_usize_lossy(n) * prob / min_prob;
    let slacked = ratio - S::lit(CEIL_SLACK) * ratio.max(S::one());
    slacked.ceil().to_usize().unwrap_or(usize::MAX).max(1)
}

pub fn scaling_params<S: Scalar>(instance: &AprioriInstance<S>, partition: &Partition) -> Result<ScalingParams<S>> {
    let root = instance.root();
    let members: Vec<usize> = partition.x.iter().copied().filter(|&v| v != root).collect();
    let min_prob = members
        .iter()
        .map(|&v| instance.prob()[v])
        .fold(None, |acc: Option<S>, p| Some(acc.map_or(p, |a| a.min(p))))
        .filter(|&m| m > S::zero())
        .ok_or(Error::DegenerateReduction)?;
    let n = instance.n();
    let nf = S::from_usize_lossy(n);
    let p = min_prob / nf;
    let groups = members
        .into_iter()
        .map(|v| {
            let prob = instance.prob()[v];
            let t = copies_for(n, prob, min_prob);
            GroupScale {
                vertex: v,
                prob,
                t,
                q: hit_probability(p, t),
                p_bar: ((S::one() + S::one() / nf) * prob).min(S::one()),
            }
        })
        .collect();
    Ok(ScalingParams { n, p, min_prob, groups })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Group {
    /// Original vertex the copies stand for.
    pub vertex: usize,
    /// First copy index.
    pub start: usize,
    pub len: usize,
}

impl Group {
    pub fn copies(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Uniform instance over co-located copies. Copy 0 is the root; the copy
/// metric is answered through the original metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledInstance<S> {
    #[serde(skip)]
    metric: Metric<S>,
    p: S,
    groups: Vec<Group>,
    #[serde(skip)]
    owner: Vec<usize>,
    #[serde(skip)]
    group_of_vertex: Vec<Option<usize>>,
}

impl<S: Scalar> ScaledInstance<S> {
    /// Builds groups of `(vertex, size)` over `metric`, in the given order.
    pub fn from_groups(metric: Metric<S>, p: S, sizes: &[(usize, usize)]) -> Result<Self> {
        let n = metric.n();
        if !(p >= S::zero() && p <= S::one()) {
            return Err(Error::ProbabilityRange { vertex: 0, value: p.as_f64() });
        }
        let mut owner = vec![metric.root()];
        let mut groups = Vec::with_capacity(sizes.len());
        let mut group_of_vertex = vec![None; n];
        for (gi, &(vertex, len)) in sizes.iter().enumerate() {
            if vertex >= n {
                return Err(Error::VertexOutOfRange { vertex, n });
            }
            if vertex == metric.root() || group_of_vertex[vertex].is_some() {
                return Err(Error::InvalidParts(format!("vertex {vertex} cannot form a group")));
            }
            if len == 0 {
                return Err(Error::EmptyBlock(gi));
            }
            group_of_vertex[vertex] = Some(gi);
            groups.push(Group { vertex, start: owner.len(), len });
            owner.extend(std::iter::repeat_n(vertex, len));
        }
        Ok(ScaledInstance { metric, p, groups, owner, group_of_vertex })
    }

    #[inline]
    pub fn p(&self) -> S {
        self.p
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    /// Number of copies including the root copy.
    #[inline]
    pub fn n_copies(&self) -> usize {
        self.owner.len()
    }

    #[inline]
    pub fn owner(&self, copy: usize) -> usize {
        self.owner[copy]
    }

    pub fn group_of_vertex(&self, vertex: usize) -> Option<&Group> {
        self.group_of_vertex.get(vertex).copied().flatten().map(|g| &self.groups[g])
    }

    /// Compresses `order` into maximal runs of co-located copies.
    pub fn blocks(&self, order: &[usize]) -> BlockSequence<S> {
        let mut blocks: Vec<Block<S>> = Vec::new();
        for &c in &order[1..] {
            let rep = self.owner[c];
            match blocks.last_mut() {
                Some(b) if b.rep == rep => b.size += 1,
                _ => blocks.push(Block { rep, size: 1, prob: self.p }),
            }
        }
        BlockSequence { root: self.owner[order[0]], blocks }
    }

    /// Exact expected latency of a copy tour.
    pub fn elat(&self, order: &[usize]) -> S {
        block_elat_value(&self.metric, &self.blocks(order))
    }

    /// Copy tour visiting whole groups in the given vertex order.
    pub fn consecutive_tour(&self, vertex_order: &[usize]) -> Result<MasterTour> {
        let mut order = vec![0];
        for &v in vertex_order {
            let g = self.group_of_vertex(v).ok_or(Error::VertexOutOfRange { vertex: v, n: self.metric.n() })?;
            order.extend(g.copies());
        }
        MasterTour::new(order, 0)
    }

    /// Is every group visited contiguously?
    pub fn is_consecutive(&self, order: &[usize]) -> bool {
        self.split_vertex(order).is_none()
    }

    fn split_vertex(&self, order: &[usize]) -> Option<usize> {
        let mut finished = vec![false; self.metric.n()];
        let mut current = None;
        for &c in order {
            let v = self.owner[c];
            if current != Some(v) {
                if finished[v] {
                    return Some(v);
                }
                if let Some(prev) = current {
                    finished[prev] = true;
                }
                current = Some(v);
            }
        }
        None
    }

    /// Materialises the flat copy instance. Only sensible for small instances.
    pub fn flatten(&self) -> Result<AprioriInstance<S>> {
        let rows = (0..self.n_copies())
            .map(|a| (0..self.n_copies()).map(|b| self.dist(a, b)).collect())
            .collect();
        let metric = Metric::with_validation(rows, 0, crate::model::Validation::SkipTriangle)?;
        let mut prob = vec![self.p; self.n_copies()];
        prob[0] = S::one();
        AprioriInstance::new(metric, prob)
    }
}

impl<S: Scalar> Distances<S> for ScaledInstance<S> {
    #[inline]
    fn size(&self) -> usize {
        self.owner.len()
    }

    #[inline]
    fn dist(&self, a: usize, b: usize) -> S {
        self.metric.dist(self.owner[a], self.owner[b])
    }
}

pub fn build_scaled<S: Scalar>(
    instance: &AprioriInstance<S>,
    params: &ScalingParams<S>,
    cap: usize,
) -> Result<ScaledInstance<S>> {
    let copies = params.groups.iter().try_fold(0usize, |acc, g| acc.checked_add(g.t)).unwrap_or(usize::MAX);
    if copies > cap {
        return Err(Error::CopyCapExceeded { copies, cap });
    }
    let sizes: Vec<(usize, usize)> = params.groups.iter().map(|g| (g.vertex, g.t)).collect();
    ScaledInstance::from_groups(instance.metric().clone(), params.p, &sizes)
}

/// Order in which a consecutive copy tour visits the original vertices,
/// root first.
pub fn collapse_tour<S: Scalar>(scaled: &ScaledInstance<S>, tour: &MasterTour) -> Result<Vec<usize>> {
    if tour.len() != scaled.n_copies() {
        return Err(Error::InvalidTour(format!(
            "tour has {} entries, scaled instance has {} copies",
            tour.len(),
            scaled.n_copies()
        )));
    }
    if let Some(v) = scaled.split_vertex(tour.order()) {
        return Err(Error::NotConsecutive(v));
    }
    let mut out: Vec<usize> = Vec::with_capacity(scaled.groups.len() + 1);
    for &c in tour.order() {
        let v = scaled.owner(c);
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

/// `y` sorted by distance from the root, ties by index.
pub fn y_tail<S: Scalar>(instance: &AprioriInstance<S>, y: &[usize]) -> Vec<usize> {
    let root = instance.root();
    let mut out = y.to_vec();
    out.sort_by(|&a, &b| {
        instance
            .dist(root, a)
            .partial_cmp(&instance.dist(root, b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveConfig {
    pub copy_cap: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { copy_cap: DEFAULT_COPY_CAP, seed: 0 }
    }
}

/// Everything the reduction produced, for auditing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionArtifacts<S> {
    pub partition: Partition,
    /// Absent when X holds only the root.
    pub params: Option<ScalingParams<S>>,
    pub scaled: Option<ScaledInstance<S>>,
    pub solver: SolverDescriptor,
    /// Tour over copies returned by the uniform solver.
    pub uniform_tour: Option<Vec<usize>>,
    pub merges: Vec<MergeStep<S>>,
    /// Uniform tour after repair.
    pub consecutive_tour: Option<Vec<usize>>,
    /// Expected latency of the consecutive tour on the scaled instance.
    pub scaled_value: Option<S>,
    /// X in the order the groups are visited.
    pub collapsed: Vec<usize>,
    /// Y sorted by root distance.
    pub y_order: Vec<usize>,
    pub final_tour: Vec<usize>,
}

/// Runs the whole reduction with `solver` in the uniform slot.
pub fn apriori_solve<S: Scalar>(
    instance: &AprioriInstance<S>,
    solver: &dyn UniformSolver<S>,
    config: &SolveConfig,
) -> Result<(MasterTour, ReductionArtifacts<S>)> {
    let partition = partition_xy(instance);
    let y_order = y_tail(instance, &partition.y);
    let mut artifacts = ReductionArtifacts {
        partition,
        params: None,
        scaled: None,
        solver: solver.descriptor(),
        uniform_tour: None,
        merges: Vec::new(),
        consecutive_tour: None,
        scaled_value: None,
        collapsed: vec![instance.root()],
        y_order,
        final_tour: Vec::new(),
    };

    match scaling_params(instance, &artifacts.partition) {
        Ok(params) => {
            let scaled = build_scaled(instance, &params, config.copy_cap)?;
            let uniform = solve_uniform(&scaled, solver, config.seed)?;
            let repaired = make_consecutive(&scaled, &uniform)?;
            artifacts.collapsed = collapse_tour(&scaled, &repaired.tour)?;
            artifacts.scaled_value = Some(scaled.elat(repaired.tour.order()));
            artifacts.uniform_tour = Some(uniform.into_order());
            artifacts.merges = repaired.merges;
            artifacts.consecutive_tour = Some(repaired.tour.into_order());
            artifacts.params = Some(params);
            artifacts.scaled = Some(scaled);
        }
        Err(Error::DegenerateReduction) => {}
        Err(e) => return Err(e),
    }

    let order: Vec<usize> = artifacts.collapsed.iter().chain(&artifacts.y_order).copied().collect();
    let tour = MasterTour::new(order, instance.root())?;
    artifacts.final_tour = tour.order().to_vec();
    Ok((tour, artifacts))
}

/// Brute-force breakdown of a tour that visits a prefix of X vertices and
/// then Y vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailTerms<S> {
    /// Expected latency of the whole tour.
    pub total: S,
    /// Expected latency summed over X vertices.
    pub x_part: S,
    /// Expected latency summed over Y vertices.
    pub y_part: S,
    /// Expected tour length before the first Y vertex.
    pub prefix_length: S,
    /// `sum_{v in Y} p_v d(r, v)`.
    pub y_radial: S,
    /// `(1/n) E[L] + (1 + 2/n) sum_{v in Y} p_v d(r, v)`.
    pub y_bound: S,
}

/// Enumerates all active sets of `tour`, treating the first `x_len`
/// positions as X and the rest as Y.
pub fn tail_terms<S: Scalar>(
    instance: &AprioriInstance<S>,
    tour: &MasterTour,
    x_len: usize,
    limit: usize,
) -> Result<TailTerms<S>> {
    let order = tour.order();
    let k = order.len() - 1;
    if k > limit || k >= usize::BITS as usize {
        return Err(Error::TooLarge { size: k, limit });
    }
    let p: Vec<S> = order[1..].iter().map(|&v| instance.prob()[v]).collect();
    let metric = instance.metric();
    let (mut total, mut x_part, mut y_part, mut prefix) = (S::zero(), S::zero(), S::zero(), S::zero());
    for mask in 0usize..(1 << k) {
        let mut weight = S::one();
        for (bit, &pv) in p.iter().enumerate() {
            weight = weight * if mask >> bit & 1 == 1 { pv } else { S::one() - pv };
        }
        if weight == S::zero() {
            continue;
        }
        let active = |pos: usize| pos == 0 || mask >> (pos - 1) & 1 == 1;
        let mut last_x = S::zero();
        for pos in 1..order.len() {
            if let Some(l) = walk_latency_at(metric, order, pos, active) {
                total = total + weight * l;
                if pos < x_len {
                    x_part = x_part + weight * l;
                    last_x = l;
                } else {
                    y_part = y_part + weight * l;
                }
            }
        }
        prefix = prefix + weight * last_x;
    }
    let root = instance.root();
    let y_radial = order[x_len.min(order.len())..]
        .iter()
        .map(|&v| instance.prob()[v] * instance.dist(root, v))
        .fold(S::zero(), |a, b| a + b);
    let n = S::from_usize_lossy(instance.n());
    let two = S::lit(2.0);
    let y_bound = prefix / n + (S::one() + two / n) * y_radial;
    Ok(TailTerms { total, x_part, y_part, prefix_length: prefix, y_radial, y_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::exact_elat;
    use crate::solvers::BruteForce;

    fn on_line(probs: &[f64]) -> AprioriInstance<f64> {
        let pts: Vec<[f64; 2]> = (0..probs.len()).map(|i| [i as f64, 0.0]).collect();
        AprioriInstance::new(Metric::from_points(&pts, 0).unwrap(), probs.to_vec()).unwrap()
    }

    #[test]
    fn partition_threshold() {
        let inst = on_line(&[1.0, 0.5, 0.05, 0.001]);
        let part = partition_xy(&inst);
        assert_eq!(part.x, vec![0, 1]);
        assert_eq!(part.y, vec![2, 3]);

        assert!(partition_xy(&on_line(&[1.0, 1.0, 1.0])).y.is_empty());
        let zeros = partition_xy(&on_line(&[1.0, 0.0, 0.0]));
        assert_eq!(zeros.x, vec![0]);
        assert_eq!(zeros.y, vec![1, 2]);
    }

    #[test]
    fn exact_threshold_belongs_to_x() {
        let inst = on_line(&[1.0, 1.0 / 9.0, 0.5]);
        assert_eq!(partition_xy(&inst).x, vec![0, 1, 2]);
    }

    #[test]
    fn scaling_worked_example() {
        let inst = on_line(&[1.0, 0.4, 0.8]);
        let params = scaling_params(&inst, &partition_xy(&inst)).unwrap();
        assert!((params.p - 0.4 / 3.0).abs() < 1e-15);
        assert_eq!(params.groups[0].t, 3);
        assert_eq!(params.groups[1].t, 6);
        // 1 - (13/15)^3 = 1178/3375
        assert!((params.groups[0].q - 1178.0 / 3375.0).abs() < 1e-14);
        assert!((params.groups[0].p_bar - 1.6 / 3.0).abs() < 1e-15);
        let lower = 0.4 * (1.0 - (-1.0f64).exp());
        assert!((lower - 0.252848).abs() < 1e-6);
        assert!(lower <= params.groups[0].q && params.groups[0].q <= params.groups[0].p_bar);
        assert!(params.sandwich_violations(1e-12).is_empty());
    }

    #[test]
    fn slackened_ceiling_at_exact_multiples() {
        // 6 * 0.1 / 0.1 evaluates to 6.000000000000001
        let inst = on_line(&[1.0, 0.1, 0.2, 0.5, 0.5, 0.5]);
        let params = scaling_params(&inst, &partition_xy(&inst)).unwrap();
        assert_eq!(params.groups[0].t, 6);
        assert_eq!(params.groups[1].t, 12);
        assert_eq!(params.groups[2].t, 30);
    }

    #[test]
    fn degenerate_when_only_root_in_x() {
        let inst = on_line(&[1.0, 0.0, 0.01]);
        assert_eq!(scaling_params(&inst, &partition_xy(&inst)), Err(Error::DegenerateReduction));
    }

    #[test]
    fn build_scaled_groups() {
        let inst = on_line(&[1.0, 0.4, 0.8]);
        let params = scaling_params(&inst, &partition_xy(&inst)).unwrap();
        let scaled = build_scaled(&inst, &params, DEFAULT_COPY_CAP).unwrap();
        assert_eq!(scaled.n_copies(), 10);
        assert_eq!(scaled.group_of_vertex(1).unwrap().len, 3);
        assert_eq!(scaled.group_of_vertex(2).unwrap().len, 6);
        let g = scaled.group_of_vertex(2).unwrap().copies();
        assert_eq!(scaled.dist(g.start, g.end - 1), 0.0);
        assert_eq!(scaled.dist(0, g.start), 2.0);

        assert_eq!(build_scaled(&inst, &params, 8), Err(Error::CopyCapExceeded { copies: 9, cap: 8 }));
    }

    #[test]
    fn single_copy_scaled_instance() {
        let inst = on_line(&[1.0, 0.7]);
        let params = scaling_params(&inst, &partition_xy(&inst)).unwrap();
        assert_eq!(params.groups[0].t, 2);
        let scaled = ScaledInstance::from_groups(inst.metric().clone(), 0.35, &[(1, 1)]).unwrap();
        assert_eq!(scaled.n_copies(), 2);
        let flat = scaled.flatten().unwrap();
        assert_eq!(flat.prob(), &[1.0, 0.35]);
    }

    #[test]
    fn collapse_examples() {
        let inst = on_line(&[1.0, 0.5, 0.5]);
        let scaled = ScaledInstance::from_groups(inst.metric().clone(), 0.25, &[(1, 2), (2, 3)]).unwrap();
        // copies: 0 root, 1-2 vertex 1, 3-5 vertex 2
        let t = MasterTour::new(vec![0, 3, 4, 5, 1, 2], 0).unwrap();
        assert_eq!(collapse_tour(&scaled, &t).unwrap(), vec![0, 2, 1]);

        let single = ScaledInstance::from_groups(inst.metric().clone(), 0.25, &[(2, 1)]).unwrap();
        let t = MasterTour::new(vec![0, 1], 0).unwrap();
        assert_eq!(collapse_tour(&single, &t).unwrap(), vec![0, 2]);

        let t = MasterTour::new(vec![0, 1, 3, 2, 4, 5], 0).unwrap();
        assert_eq!(collapse_tour(&scaled, &t), Err(Error::NotConsecutive(1)));
    }

    #[test]
    fn y_tail_ordering() {
        let m = Metric::new(
            vec![
                vec![0.0, 5.0, 3.0, 3.0],
                vec![5.0, 0.0, 4.0, 4.0],
                vec![3.0, 4.0, 0.0, 0.0],
                vec![3.0, 4.0, 0.0, 0.0],
            ],
            0,
        )
        .unwrap();
        let inst = AprioriInstance::new(m, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y_tail(&inst, &[1, 2]), vec![2, 1]);
        assert!(y_tail(&inst, &[]).is_empty());
        assert_eq!(y_tail(&inst, &[3, 2]), vec![2, 3]);
    }

    #[test]
    fn solve_all_certain() {
        let inst = on_line(&[1.0, 1.0, 1.0, 1.0]);
        let (tour, art) = apriori_solve(&inst, &BruteForce::default(), &SolveConfig::default()).unwrap();
        let params = art.params.unwrap();
        assert!((params.p - 0.25).abs() < 1e-15);
        assert!(params.groups.iter().all(|g| g.t == 4));
        assert!(art.y_order.is_empty());
        assert_eq!(tour.len(), 4);
        assert_eq!(tour.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn solve_degenerate_branch() {
        let inst = on_line(&[1.0, 0.001, 0.0, 0.002]);
        let (tour, art) = apriori_solve(&inst, &BruteForce::default(), &SolveConfig::default()).unwrap();
        assert!(art.params.is_none());
        assert_eq!(tour.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn y_vertices_come_last() {
        let inst = on_line(&[1.0, 0.01, 0.6, 0.001, 0.9]);
        let (tour, art) = apriori_solve(&inst, &BruteForce::default(), &SolveConfig::default()).unwrap();
        assert_eq!(art.partition.y, vec![1, 3]);
        assert_eq!(&tour.order()[3..], &[1, 3]);
        let terms = tail_terms(&inst, &tour, 3, 15).unwrap();
        assert!((terms.total - exact_elat(&inst, &tour).value).abs() < 1e-12);
        assert!((terms.x_part + terms.y_part - terms.total).abs() < 1e-12);
        assert!(terms.y_part <= terms.y_bound + 1e-12);
        assert!(terms.prefix_length <= terms.x_part + 1e-12);
    }
}
