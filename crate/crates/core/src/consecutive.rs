//! Repairing a copy tour so that every group of co-located copies is
//! visited contiguously, without increasing the expected latency.
//!
//! While a group is split into several runs, its first two runs `C_i`
//! (earlier) and `C_j` are merged either by moving `C_j` right behind
//! `C_i` or by moving `C_i` right in front of `C_j`, whichever has the
//! smaller exact expected latency. One of the two is never worse than the
//! current tour.
//!
//! The module also carries the closed-form conditional latencies behind
//! that claim ([`table_predictions`]) together with the brute-force
//! conditional expectation they are checked against
//! ([`conditional_expected_latency`]).

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{walk_latency_at, Distances, MasterTour};
use crate::reduction::ScaledInstance;
use crate::scalar::{hit_probability, Scalar};

/// Maximal runs of group members along a tour, as position ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunPartition {
    pub parts: Vec<Range<usize>>,
}

impl RunPartition {
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn is_consecutive(&self) -> bool {
        self.parts.len() <= 1
    }
}

pub fn runs(order: &[usize], mut is_member: impl FnMut(usize) -> bool) -> RunPartition {
    let mut parts: Vec<Range<usize>> = Vec::new();
    for (pos, &v) in order.iter().enumerate() {
        if !is_member(v) {
            continue;
        }
        match parts.last_mut() {
            Some(r) if r.end == pos => r.end += 1,
            _ => parts.push(pos..pos + 1),
        }
    }
    RunPartition { parts }
}

/// Runs of the copies of `vertex` in a copy tour.
pub fn group_runs<S: Scalar>(scaled: &ScaledInstance<S>, order: &[usize], vertex: usize) -> RunPartition {
    runs(order, |c| c != 0 && scaled.owner(c) == vertex)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relocation {
    /// Move the later part right behind the earlier one (`tau_i`).
    AfterFirst,
    /// Move the earlier part right in front of the later one (`tau_j`).
    BeforeSecond,
}

pub fn relocate(order: &[usize], part_i: Range<usize>, part_j: Range<usize>, mode: Relocation) -> Result<Vec<usize>> {
    if part_i.is_empty() || part_j.is_empty() || part_i.end > part_j.start || part_j.end > order.len() {
        return Err(Error::InvalidParts(format!(
            "parts {part_i:?} and {part_j:?} overlap, are empty or out of order"
        )));
    }
    let (head, mid, tail) = (&order[..part_i.start], &order[part_i.end..part_j.start], &order[part_j.end..]);
    let (ci, cj) = (&order[part_i], &order[part_j]);
    let pieces: [&[usize]; 5] = match mode {
        Relocation::AfterFirst => [head, ci, cj, mid, tail],
        Relocation::BeforeSecond => [head, mid, ci, cj, tail],
    };
    Ok(pieces.concat())
}

/// One merge, as recorded in the reduction artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeStep<S> {
    pub vertex: usize,
    pub k_i: usize,
    pub k_j: usize,
    pub before: S,
    pub after_first: S,
    pub before_second: S,
    pub choice: Relocation,
}

impl<S: Scalar> MergeStep<S> {
    pub fn after(&self) -> S {
        match self.choice {
            Relocation::AfterFirst => self.after_first,
            Relocation::BeforeSecond => self.before_second,
        }
    }
}

/// Both relocations of the first two runs of a group, fully evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeCandidate<S> {
    pub part_i: Range<usize>,
    pub part_j: Range<usize>,
    pub tau_i: Vec<usize>,
    pub tau_j: Vec<usize>,
    pub step: MergeStep<S>,
}

impl<S> MergeCandidate<S> {
    pub fn into_chosen(self) -> Vec<usize> {
        match self.step.choice {
            Relocation::AfterFirst => self.tau_i,
            Relocation::BeforeSecond => self.tau_j,
        }
    }
}

/// Relative gap under which two expected latencies count as tied.
const TIE_REL: f64 = 1e-12;

/// Merge of the first two runs of `vertex`'s group, or `None` if the group
/// is already contiguous. Ties go to `tau_i`.
pub fn merge_candidate<S: Scalar>(
    scaled: &ScaledInstance<S>,
    order: &[usize],
    vertex: usize,
) -> Result<Option<MergeCandidate<S>>> {
    let parts = group_runs(scaled, order, vertex);
    if parts.is_consecutive() {
        return Ok(None);
    }
    let (part_i, part_j) = (parts.parts[0].clone(), parts.parts[1].clone());
    let tau_i = relocate(order, part_i.clone(), part_j.clone(), Relocation::AfterFirst)?;
    let tau_j = relocate(order, part_i.clone(), part_j.clone(), Relocation::BeforeSecond)?;
    let (value_i, value_j) = (scaled.elat(&tau_i), scaled.elat(&tau_j));
    let scale = S::one() + value_i.abs().max(value_j.abs());
    let choice = if value_j < value_i - S::lit(TIE_REL) * scale {
        Relocation::BeforeSecond
    } else {
        Relocation::AfterFirst
    };
    let step = MergeStep {
        vertex,
        k_i: part_i.len(),
        k_j: part_j.len(),
        before: scaled.elat(order),
        after_first: value_i,
        before_second: value_j,
        choice,
    };
    Ok(Some(MergeCandidate { part_i, part_j, tau_i, tau_j, step }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consecutive<S> {
    pub tour: MasterTour,
    pub merges: Vec<MergeStep<S>>,
}

/// Groups are processed in vertex order, each until contiguous. Merging
/// one group never splits another, so at most `sum (k_z - 1)` merges run.
pub fn make_consecutive<S: Scalar>(scaled: &ScaledInstance<S>, tour: &MasterTour) -> Result<Consecutive<S>> {
    if tour.len() != scaled.n_copies() || tour.root() != 0 {
        return Err(Error::InvalidTour(format!(
            "expected a tour over {} copies starting at copy 0",
            scaled.n_copies()
        )));
    }
    let mut vertices: Vec<usize> = scaled.groups().iter().map(|g| g.vertex).collect();
    vertices.sort_unstable();
    let mut order = tour.order().to_vec();
    let mut merges = Vec::new();
    for v in vertices {
        while let Some(candidate) = merge_candidate(scaled, &order, v)? {
            merges.push(candidate.step.clone());
            order = candidate.into_chosen();
        }
    }
    Ok(Consecutive { tour: MasterTour::from_order_unchecked(order), merges })
}

/// `(1 - (1-p)^k_i) / (1 - (1-p)^(k_i + k_j))`.
pub fn lambda_value<S: Scalar>(p: S, k_i: usize, k_j: usize) -> Result<S> {
    if !(p > S::zero()) {
        return Err(Error::LambdaUndefined);
    }
    if p > S::one() {
        return Err(Error::ProbabilityRange { vertex: 0, value: p.as_f64() });
    }
    if k_i == 0 || k_j == 0 {
        return Err(Error::InvalidParts("part sizes must be positive".into()));
    }
    Ok(hit_probability(p, k_i) / hit_probability(p, k_i + k_j))
}

/// Slack of each condition `lambda` must satisfy; all nonnegative when the
/// check passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaCheck<S> {
    pub lambda: S,
    /// `alpha_i / (alpha_i + alpha_j - alpha_i alpha_j) - lambda`
    pub slack_alpha_i: S,
    /// `alpha_j / (alpha_i + alpha_j - alpha_i alpha_j) - (1 - lambda)`
    pub slack_alpha_j: S,
    /// `k_j / (k_i + k_j) - (1 - lambda)`
    pub slack_k: S,
    /// `f(k_i + k_j) - (f(k_i) + f(k_j) - f(k_i) f(k_j))`, ideally zero.
    pub identity_residual: S,
    /// `f(k_i)/k_i - f(k_i + k_j)/(k_i + k_j)`.
    pub ratio_decrease: S,
    pub holds: bool,
}

pub fn check_lambda<S: Scalar>(p: S, k_i: usize, k_j: usize) -> Result<LambdaCheck<S>> {
    let lambda = lambda_value(p, k_i, k_j)?;
    let f = |k: usize| hit_probability(p, k);
    let (ai, aj, aij) = (f(k_i), f(k_j), f(k_i + k_j));
    let union = ai + aj - ai * aj;
    let (ki, kj) = (S::from_usize_lossy(k_i), S::from_usize_lossy(k_j));
    let one = S::one();
    let slack_alpha_i = ai / union - lambda;
    let slack_alpha_j = aj / union - (one - lambda);
    let slack_k = kj / (ki + kj) - (one - lambda);
    let identity_residual = aij - union;
    let ratio_decrease = ai / ki - aij / (ki + kj);
    let tol = S::lit(1e-12).max(S::epsilon() * S::lit(64.0));
    let holds = [slack_alpha_i, slack_alpha_j, slack_k, ratio_decrease].iter().all(|&s| s >= -tol)
        && identity_residual.abs() <= tol;
    Ok(LambdaCheck { lambda, slack_alpha_i, slack_alpha_j, slack_k, identity_residual, ratio_decrease, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VertexClass {
    B1,
    B2,
    B3,
    Ci,
    Cj,
}

impl VertexClass {
    pub const ALL: [VertexClass; 5] =
        [VertexClass::B1, VertexClass::B2, VertexClass::B3, VertexClass::Ci, VertexClass::Cj];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_b(self) -> bool {
        matches!(self, VertexClass::B1 | VertexClass::B2 | VertexClass::B3)
    }
}

/// Scalars that determine every conditional latency for a fixed active
/// set `B` outside `U = C_i ∪ C_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow<S> {
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub b3: Vec<usize>,
    pub c_i: Vec<usize>,
    pub c_j: Vec<usize>,
    pub k_i: usize,
    pub k_j: usize,
    pub p: S,
    pub t_i: S,
    pub t_j: S,
    pub delta_i: S,
    pub delta_j: S,
    pub alpha_i: S,
    pub alpha_j: S,
}

impl<S: Scalar> TableRow<S> {
    pub fn u(&self) -> Vec<usize> {
        self.c_i.iter().chain(&self.c_j).copied().collect()
    }

    /// `alpha_i + alpha_j - alpha_i alpha_j`.
    pub fn alpha_union(&self) -> S {
        self.alpha_i + self.alpha_j - self.alpha_i * self.alpha_j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedLatency<S> {
    pub vertex: usize,
    pub class: VertexClass,
    /// Latency with only `B` (plus the vertex itself) active under `tau`.
    pub l_w: S,
    /// Conditional expected latency under `tau`, `tau_i`, `tau_j`.
    pub values: [S; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablePrediction<S> {
    pub row: TableRow<S>,
    /// `entries[tour][class]`, tours ordered `tau`, `tau_i`, `tau_j`. For
    /// the `B` classes the entry is the amount added to `l_w`.
    pub entries: [[S; 5]; 3],
    pub vertices: Vec<PredictedLatency<S>>,
    /// `B_2` empty: all three tours coincide on `B ∪ U`.
    pub degenerate: bool,
}

impl<S: Scalar> TablePrediction<S> {
    /// Predicted `sum_{w in U} L(w)` for each tour.
    pub fn u_totals(&self) -> [S; 3] {
        let mut out = [S::zero(); 3];
        for pv in self.vertices.iter().filter(|pv| !pv.class.is_b()) {
            for (o, &v) in out.iter_mut().zip(&pv.values) {
                *o = *o + v;
            }
        }
        out
    }
}

fn check_parts<S: Scalar, D: Distances<S>>(
    d: &D,
    order: &[usize],
    part_i: &Range<usize>,
    part_j: &Range<usize>,
) -> Result<()> {
    if part_i.is_empty() || part_j.is_empty() || part_i.start == 0 || part_i.end > part_j.start || part_j.end > order.len()
    {
        return Err(Error::InvalidParts(format!("malformed parts {part_i:?}, {part_j:?}")));
    }
    let anchor = order[part_i.start];
    if let Some(&c) = order[part_i.clone()].iter().chain(&order[part_j.clone()]).find(|&&c| d.dist(anchor, c) != S::zero())
    {
        return Err(Error::InvalidParts(format!("copy {c} is not co-located with {anchor}")));
    }
    Ok(())
}

fn position_mask(order: &[usize], members: &[usize]) -> Result<Vec<bool>> {
    let mut pos = vec![usize::MAX; order.iter().max().map_or(0, |m| m + 1)];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut mask = vec![false; order.len()];
    for &v in members {
        match pos.get(v) {
            Some(&i) if i != usize::MAX => mask[i] = true,
            _ => return Err(Error::NotOnTour(v)),
        }
    }
    Ok(mask)
}

/// Closed-form conditional latencies for the tour `order`, the active set
/// `b` outside the two runs, and uniform copy probability `p`.
pub fn table_predictions<S: Scalar, D: Distances<S>>(
    d: &D,
    order: &[usize],
    b: &[usize],
    part_i: Range<usize>,
    part_j: Range<usize>,
    p: S,
) -> Result<TablePrediction<S>> {
    check_parts(d, order, &part_i, &part_j)?;
    let in_b = position_mask(order, b)?;
    if in_b[part_i.clone()].iter().chain(&in_b[part_j.clone()]).any(|&x| x) {
        return Err(Error::InvalidParts("B intersects the runs".into()));
    }
    let class_at = |pos: usize| {
        if pos < part_i.start {
            VertexClass::B1
        } else if pos < part_j.start {
            VertexClass::B2
        } else {
            VertexClass::B3
        }
    };
    let lat = |pos: usize, extra: &Range<usize>| {
        walk_latency_at(d, order, pos, |q| in_b[q] || extra.contains(&q)).expect("vertex is active")
    };
    let none = 0..0;
    let b_positions: Vec<usize> = (1..order.len()).filter(|&q| in_b[q]).collect();
    let (mut b1, mut b2, mut b3) = (Vec::new(), Vec::new(), Vec::new());
    for &q in &b_positions {
        match class_at(q) {
            VertexClass::B1 => b1.push(order[q]),
            VertexClass::B2 => b2.push(order[q]),
            _ => b3.push(order[q]),
        }
    }
    let t_i = lat(part_i.start, &part_i);
    let t_j = lat(part_j.start, &part_j);
    let after_i = b_positions.iter().copied().find(|&q| q >= part_i.end);
    let after_j = b_positions.iter().copied().find(|&q| q >= part_j.end);
    let delta_i = after_i.map_or(S::zero(), |q| lat(q, &part_i) - lat(q, &none));
    let delta_j = after_j.map_or(S::zero(), |q| lat(q, &part_j) - lat(q, &none));
    let (k_i, k_j) = (part_i.len(), part_j.len());
    let row = TableRow {
        b1,
        b2,
        b3,
        c_i: order[part_i.clone()].to_vec(),
        c_j: order[part_j.clone()].to_vec(),
        k_i,
        k_j,
        p,
        t_i,
        t_j,
        delta_i,
        delta_j,
        alpha_i: hit_probability(p, k_i),
        alpha_j: hit_probability(p, k_j),
    };
    let degenerate = row.b2.is_empty();
    let z = S::zero();
    let union = row.alpha_union();
    let (ai, aj) = (row.alpha_i, row.alpha_j);
    let entries = if degenerate {
        let shared = [z, z, delta_i * union, t_i * p, t_i * p];
        [shared; 3]
    } else {
        [
            [z, delta_i * ai, delta_i * ai + row.delta_j * aj, t_i * p, t_j * p + delta_i * ai * p],
            [z, delta_i * union, delta_i * union, t_i * p, t_i * p],
            [z, z, row.delta_j * union, t_j * p, t_j * p],
        ]
    };
    let mut vertices = Vec::with_capacity(b_positions.len() + k_i + k_j);
    for &q in &b_positions {
        let class = class_at(q);
        let l_w = lat(q, &none);
        let values = [0, 1, 2].map(|t| l_w + entries[t][class.index()]);
        vertices.push(PredictedLatency { vertex: order[q], class, l_w, values });
    }
    for (class, part, l_w) in [(VertexClass::Ci, &part_i, t_i), (VertexClass::Cj, &part_j, t_j)] {
        for q in part.clone() {
            let values = [0, 1, 2].map(|t| entries[t][class.index()]);
            vertices.push(PredictedLatency { vertex: order[q], class, l_w, values });
        }
    }
    Ok(TablePrediction { row, entries, vertices, degenerate })
}

/// Largest `|U|` [`conditional_expected_latency`] enumerates.
pub const CONDITIONAL_LIMIT: usize = 20;

/// `sum_{C ⊆ U} p^|C| (1-p)^|U \ C| LAT^{B ∪ C}(w)` by enumeration.
pub fn conditional_expected_latency<S: Scalar, D: Distances<S>>(
    d: &D,
    order: &[usize],
    b: &[usize],
    u: &[usize],
    p: S,
    w: usize,
) -> Result<S> {
    if u.len() > CONDITIONAL_LIMIT {
        return Err(Error::TooLarge { size: u.len(), limit: CONDITIONAL_LIMIT });
    }
    let in_b = position_mask(order, b)?;
    let u_pos: Vec<usize> = u
        .iter()
        .map(|&v| order.iter().position(|&x| x == v).ok_or(Error::NotOnTour(v)))
        .collect::<Result<_>>()?;
    let target = order.iter().position(|&x| x == w).ok_or(Error::NotOnTour(w))?;
    let mut active = in_b.clone();
    let mut total = S::zero();
    for mask in 0usize..(1 << u.len()) {
        let mut weight = S::one();
        for (bit, &q) in u_pos.iter().enumerate() {
            let on = mask >> bit & 1 == 1;
            active[q] = on;
            weight = weight * if on { p } else { S::one() - p };
        }
        if let Some(l) = walk_latency_at(d, order, target, |q| active[q]) {
            total = total + weight * l;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Metric;

    // vertices r=0, u=1, z=2 with d(r,u)=1, d(r,z)=2, d(u,z)=1
    fn ruz_metric() -> Metric<f64> {
        Metric::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).unwrap()
    }

    // copies: 0 root, 1 u, 2-3 z
    fn ruz_scaled() -> ScaledInstance<f64> {
        ScaledInstance::from_groups(ruz_metric(), 0.5, &[(1, 1), (2, 2)]).unwrap()
    }

    #[test]
    fn runs_examples() {
        let order = [0, 2, 3, 1, 4];
        let z = |c: usize| c == 2 || c == 3 || c == 4;
        assert_eq!(runs(&order, z).parts, vec![1..3, 4..5]);
        assert_eq!(runs(&[0, 2, 3, 4, 1], z).parts, vec![1..4]);
        assert_eq!(runs(&[0, 1, 2], |c| c == 2).parts, vec![2..3]);
    }

    #[test]
    fn relocate_examples() {
        // (r, z1, u, z2) with copies r=0, u=1, z1=2, z2=3
        let tau = [0, 2, 1, 3];
        assert_eq!(relocate(&tau, 1..2, 3..4, Relocation::AfterFirst).unwrap(), vec![0, 2, 3, 1]);
        assert_eq!(relocate(&tau, 1..2, 3..4, Relocation::BeforeSecond).unwrap(), vec![0, 1, 2, 3]);
        let adjacent = [0, 2, 3, 1];
        assert_eq!(relocate(&adjacent, 1..2, 2..3, Relocation::AfterFirst).unwrap(), adjacent.to_vec());
        assert_eq!(relocate(&adjacent, 1..2, 2..3, Relocation::BeforeSecond).unwrap(), adjacent.to_vec());
        assert!(relocate(&tau, 1..3, 2..4, Relocation::AfterFirst).is_err());
    }

    #[test]
    fn worked_merge_example() {
        let scaled = ruz_scaled();
        let tau = MasterTour::new(vec![0, 2, 1, 3], 0).unwrap();
        let out = make_consecutive(&scaled, &tau).unwrap();
        assert_eq!(out.tour.order(), &[0, 1, 2, 3]);
        assert_eq!(out.merges.len(), 1);
        let m = &out.merges[0];
        assert!((m.before - 3.25).abs() < 1e-15);
        assert!((m.after_first - 3.25).abs() < 1e-15);
        assert!((m.before_second - 2.5).abs() < 1e-15);
        assert_eq!(m.choice, Relocation::BeforeSecond);
    }

    #[test]
    fn consecutive_input_is_unchanged() {
        let scaled = ruz_scaled();
        let tau = MasterTour::new(vec![0, 2, 3, 1], 0).unwrap();
        let out = make_consecutive(&scaled, &tau).unwrap();
        assert_eq!(out.tour, tau);
        assert!(out.merges.is_empty());
    }

    #[test]
    fn ties_keep_the_first_relocation() {
        // every vertex at one point: both relocations score the same
        let m = Metric::new(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], 0).unwrap();
        let scaled = ScaledInstance::from_groups(m, 0.3, &[(1, 1), (2, 2)]).unwrap();
        let out = make_consecutive(&scaled, &MasterTour::new(vec![0, 2, 1, 3], 0).unwrap()).unwrap();
        assert_eq!(out.merges[0].choice, Relocation::AfterFirst);
    }

    #[test]
    fn two_split_groups() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
        let m = Metric::from_points(&pts, 0).unwrap();
        let scaled = ScaledInstance::from_groups(m, 0.4f64, &[(1, 2), (2, 2), (3, 1)]).unwrap();
        // copies: 1-2 vertex 1, 3-4 vertex 2, 5 vertex 3
        let tau = MasterTour::new(vec![0, 1, 3, 5, 2, 4], 0).unwrap();
        let out = make_consecutive(&scaled, &tau).unwrap();
        assert!(scaled.is_consecutive(out.tour.order()));
        assert_eq!(out.merges.len(), 2);
        let mut prev = scaled.elat(tau.order());
        for m in &out.merges {
            assert!((m.before - prev).abs() < 1e-12);
            assert!(m.after() <= m.before + 1e-12);
            prev = m.after();
        }
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_value(0.5f64, 1, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lambda_value(1.0, 3, 4).unwrap(), 1.0);
        assert!((lambda_value(0.01f64, 1, 1).unwrap() - 1.0 / 1.99).abs() < 1e-14);
        assert_eq!(lambda_value(0.0f64, 1, 1), Err(Error::LambdaUndefined));
    }

    #[test]
    fn lambda_check_examples() {
        let c = check_lambda(0.5f64, 1, 1).unwrap();
        assert!(c.holds);
        assert!(c.slack_alpha_i.abs() < 1e-15);
        let c = check_lambda(1.0, 5, 9).unwrap();
        assert!(c.holds);
        assert_eq!(1.0 - c.lambda, 0.0);
    }

    #[test]
    fn table_worked_example() {
        let scaled = ruz_scaled();
        let tau = [0, 2, 1, 3];
        let pred = table_predictions(&scaled, &tau, &[1], 1..2, 3..4, 0.5).unwrap();
        assert!(!pred.degenerate);
        let u = pred.vertices.iter().find(|v| v.vertex == 1).unwrap();
        assert_eq!(u.class, VertexClass::B2);
        assert!((u.values[0] - 2.0).abs() < 1e-15);
        let z2 = pred.vertices.iter().find(|v| v.vertex == 3).unwrap();
        assert!((z2.values[0] - 1.5).abs() < 1e-15);

        let brute_u = conditional_expected_latency(&scaled, &tau, &[1], &[2, 3], 0.5, 1).unwrap();
        let brute_z2 = conditional_expected_latency(&scaled, &tau, &[1], &[2, 3], 0.5, 3).unwrap();
        assert!((brute_u - 2.0).abs() < 1e-15);
        assert!((brute_z2 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn conditional_edge_cases() {
        let scaled = ruz_scaled();
        let tau = [0, 1, 2, 3];
        // empty U: plain realised latency
        assert_eq!(conditional_expected_latency(&scaled, &tau, &[1, 2], &[], 0.5, 2).unwrap(), 2.0);
        // first vertex before U is unaffected by U
        assert_eq!(conditional_expected_latency(&scaled, &tau, &[1], &[2, 3], 0.5, 1).unwrap(), 1.0);
        let big: Vec<usize> = (0..21).collect();
        assert!(matches!(
            conditional_expected_latency(&scaled, &tau, &[], &big, 0.5, 1),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn table_rejects_malformed_parts() {
        let scaled = ruz_scaled();
        let tau = [0, 2, 1, 3];
        assert!(table_predictions(&scaled, &tau, &[], 3..4, 1..2, 0.5).is_err());
        // part containing u is not co-located with z
        assert!(table_predictions(&scaled, &tau, &[], 1..3, 3..4, 0.5).is_err());
        assert!(table_predictions(&scaled, &tau, &[3], 1..2, 3..4, 0.5).is_err());
    }
}
