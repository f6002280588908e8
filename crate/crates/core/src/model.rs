//! Metric, instance and tour data model plus single-scenario latency.
//!
//! A master tour is a permutation of every vertex that starts at the root.
//! For a fixed active set the tour is shortcut over inactive vertices and
//! each active vertex pays the distance travelled from the root until it
//! is reached.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that can answer pairwise distance queries over `0..size()`.
///
/// Implemented by [`Metric`] and by the scaled instance, whose copy
/// metric is never materialised.
pub trait Distances<S> {
    fn size(&self) -> usize;
    fn dist(&self, a: usize, b: usize) -> S;
}

/// Which checks [`Metric::with_validation`] performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    #[default]
    Full,
    /// Skip the O(n^3) triangle check for inputs that are metric by construction.
    SkipTriangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricViolation {
    Dimension { row: usize, len: usize, expected: usize },
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize },
    Diagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MetricViolation::Dimension { row, len, expected } => {
                write!(f, "row {row} has {len} entries, expected {expected}")
            }
            MetricViolation::NonFinite { i, j } => write!(f, "d({i},{j}) is not finite"),
            MetricViolation::Negative { i, j } => write!(f, "d({i},{j}) is negative"),
            MetricViolation::Diagonal { i } => write!(f, "d({i},{i}) is not zero"),
            MetricViolation::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            MetricViolation::Triangle { i, j, k } => {
                write!(f, "d({i},{k}) > d({i},{j}) + d({j},{k})")
            }
        }
    }
}

/// Checks a square distance matrix. Empty result iff the matrix is a metric
/// (symmetric, zero diagonal, triangle inequality within 1e-9 relative).
pub fn validate_metric<S: Scalar>(rows: &[Vec<S>]) -> Vec<MetricViolation> {
    validate_rows(rows, Validation::Full)
}

fn validate_rows<S: Scalar>(rows: &[Vec<S>], validation: Validation) -> Vec<MetricViolation> {
    let n = rows.len();
    let mut out: Vec<MetricViolation> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() != n)
        .map(|(row, r)| MetricViolation::Dimension { row, len: r.len(), expected: n })
        .collect();
    if !out.is_empty() {
        return out;
    }
    let tol = S::validation_tol();
    for i in 0..n {
        for j in 0..n {
            let d = rows[i][j];
            if !d.is_finite() {
                out.push(MetricViolation::NonFinite { i, j });
            } else if d < S::zero() {
                out.push(MetricViolation::Negative { i, j });
            }
        }
        if rows[i][i] != S::zero() {
            out.push(MetricViolation::Diagonal { i });
        }
        for j in i + 1..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if (a - b).abs() > tol * (S::one() + a.abs().max(b.abs())) {
                out.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    if !out.is_empty() || validation == Validation::SkipTriangle {
        return out;
    }
    for i in 0..n {
        for k in i + 1..n {
            let direct = rows[i][k];
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let via = rows[i][j] + rows[j][k];
                if direct > via + tol * (S::one() + direct) {
                    out.push(MetricViolation::Triangle { i, j, k });
                }
            }
        }
    }
    out
}

/// Finite symmetric metric with a designated root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric<S> {
    n: usize,
    dist: Vec<S>,
    root: usize,
}

impl<S: Scalar> Metric<S> {
    pub fn new(rows: Vec<Vec<S>>, root: usize) -> Result<Self> {
        Self::with_validation(rows, root, Validation::Full)
    }

    pub fn with_validation(rows: Vec<Vec<S>>, root: usize, validation: Validation) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMetric("no vertices".into()));
        }
        if root >= n {
            return Err(Error::RootOutOfRange { root, n });
        }
        let violations = validate_rows(&rows, validation);
        if !violations.is_empty() {
            let shown: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
            let more = violations.len().saturating_sub(shown.len());
            let mut msg = shown.join("; ");
            if more > 0 {
                msg.push_str(&format!("; and {more} more"));
            }
            return Err(Error::InvalidMetric(msg));
        }
        Ok(Metric { n, dist: rows.into_iter().flatten().collect(), root })
    }

    /// Euclidean metric on planar points.
    pub fn from_points(points: &[[S; 2]], root: usize) -> Result<Self> {
        let rows = points
            .iter()
            .map(|a| points.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
            .collect();
        Self::with_validation(rows, root, Validation::SkipTriangle)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.dist.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Metric induced on `subset` (given in the order the new indices take).
    fn induced(&self, subset: &[usize], root: usize) -> Self {
        let m = subset.len();
        let mut dist = Vec::with_capacity(m * m);
        for &a in subset {
            for &b in subset {
                dist.push(self.dist[a * self.n + b]);
            }
        }
        Metric { n: m, dist, root }
    }
}

impl<S: Scalar> Distances<S> for Metric<S> {
    #[inline]
    fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, a: usize, b: usize) -> S {
        self.dist[a * self.n + b]
    }
}

/// Metric plus independent activation probabilities. The root is always
/// active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriInstance<S> {
    metric: Metric<S>,
    prob: Vec<S>,
}

impl<S: Scalar> AprioriInstance<S> {
    /// Validates probabilities; a root probability other than 1 is replaced
    /// by 1 with a warning.
    pub fn new(metric: Metric<S>, mut prob: Vec<S>) -> Result<Self> {
        if prob.len() != metric.n() {
            return Err(Error::ProbabilityCount { expected: metric.n(), got: prob.len() });
        }
        for (vertex, &p) in prob.iter().enumerate() {
            if !(p >= S::zero() && p <= S::one()) {
                return Err(Error::ProbabilityRange { vertex, value: p.to_f64().unwrap_or(f64::NAN) });
            }
        }
        let root = metric.root();
        if prob[root] != S::one() {
            log::warn!("root probability {} overridden to 1", prob[root]);
            prob[root] = S::one();
        }
        Ok(AprioriInstance { metric, prob })
    }

    #[inline]
    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    #[inline]
    pub fn prob(&self) -> &[S] {
        &self.prob
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.metric.n()
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.metric.root()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> S {
        self.metric.dist(a, b)
    }

    /// Same metric with another probability vector.
    pub fn with_probabilities(&self, prob: Vec<S>) -> Result<Self> {
        Self::new(self.metric.clone(), prob)
    }
}

/// Permutation of all vertices starting at the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MasterTour {
    order: Vec<usize>,
}

impl MasterTour {
    pub fn new(order: Vec<usize>, root: usize) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::InvalidTour("empty tour".into()));
        }
        if order[0] != root {
            return Err(Error::InvalidTour(format!("tour starts at {} instead of root {root}", order[0])));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n {
                return Err(Error::InvalidTour(format!("vertex {v} out of range for {n} vertices")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidTour(format!("vertex {v} visited twice")));
            }
        }
        Ok(MasterTour { order })
    }

    /// Root followed by the remaining vertices in index order.
    pub fn identity(n: usize, root: usize) -> Self {
        let order = std::iter::once(root).chain((0..n).filter(|&v| v != root)).collect();
        MasterTour { order }
    }

    pub(crate) fn from_order_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(MasterTour::new(order.clone(), order[0]).is_ok());
        MasterTour { order }
    }

    #[inline]
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.order[0]
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Position of every vertex in the tour.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

/// Realised set of active vertices; always contains the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    mask: Vec<bool>,
    root: usize,
}

impl ActiveSet {
    pub fn new(n: usize, root: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        if root >= n {
            return Err(Error::RootOutOfRange { root, n });
        }
        let mut mask = vec![false; n];
        mask[root] = true;
        for v in members {
            *mask.get_mut(v).ok_or(Error::VertexOutOfRange { vertex: v, n })? = true;
        }
        Ok(ActiveSet { mask, root })
    }

    pub fn from_mask(mut mask: Vec<bool>, root: usize) -> Result<Self> {
        let n = mask.len();
        *mask.get_mut(root).ok_or(Error::RootOutOfRange { root, n })? = true;
        Ok(ActiveSet { mask, root })
    }

    pub fn full(n: usize, root: usize) -> Self {
        ActiveSet { mask: vec![true; n], root }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, v: usize) {
        if v >= self.mask.len() {
            self.mask.resize(v + 1, false);
        }
        self.mask[v] = true;
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &a)| a).map(|(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.members().count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

fn check_active(tour: &MasterTour, active: &ActiveSet) -> Result<()> {
    if active.root() != tour.root() {
        return Err(Error::InvalidTour(format!(
            "active set root {} differs from tour root {}",
            active.root(),
            tour.root()
        )));
    }
    match active.members().find(|&v| v >= tour.len()) {
        Some(v) => Err(Error::NotOnTour(v)),
        None => Ok(()),
    }
}

/// Active vertices in tour order, root first.
pub fn shortcut(tour: &MasterTour, active: &ActiveSet) -> Result<Vec<usize>> {
    check_active(tour, active)?;
    Ok(tour.order().iter().copied().filter(|&v| active.contains(v)).collect())
}

/// Latency of each active vertex (in visiting order) and their sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedLatency<S> {
    pub per_vertex: Vec<(usize, S)>,
    pub total: S,
}

impl<S: Scalar> RealizedLatency<S> {
    pub fn latency_of(&self, v: usize) -> Option<S> {
        self.per_vertex.iter().find(|(u, _)| *u == v).map(|&(_, l)| l)
    }
}

pub fn realized_latency<S: Scalar, D: Distances<S>>(
    metric: &D,
    tour: &MasterTour,
    active: &ActiveSet,
) -> Result<RealizedLatency<S>> {
    let path = shortcut(tour, active)?;
    let mut per_vertex = Vec::with_capacity(path.len());
    let mut clock = S::zero();
    let mut total = S::zero();
    let mut prev = path[0];
    per_vertex.push((prev, S::zero()));
    for &v in &path[1..] {
        clock = clock + metric.dist(prev, v);
        total = total + clock;
        per_vertex.push((v, clock));
        prev = v;
    }
    Ok(RealizedLatency { per_vertex, total })
}

/// Total latency along `order` when `is_active` selects the active vertices.
/// The first entry of `order` is always treated as active.
pub(crate) fn walk_total<S: Scalar, D: Distances<S>>(
    d: &D,
    order: &[usize],
    mut is_active: impl FnMut(usize) -> bool,
) -> S {
    let mut clock = S::zero();
    let mut total = S::zero();
    let mut prev = order[0];
    for (pos, &v) in order.iter().enumerate().skip(1) {
        if is_active(pos) {
            clock = clock + d.dist(prev, v);
            total = total + clock;
            prev = v;
        }
    }
    total
}

/// Latency of the vertex at position `target` along `order`, if active.
pub(crate) fn walk_latency_at<S: Scalar, D: Distances<S>>(
    d: &D,
    order: &[usize],
    target: usize,
    mut is_active: impl FnMut(usize) -> bool,
) -> Option<S> {
    if target == 0 {
        return Some(S::zero());
    }
    if !is_active(target) {
        return None;
    }
    let mut clock = S::zero();
    let mut prev = order[0];
    for (pos, &v) in order.iter().enumerate().take(target + 1).skip(1) {
        if pos == target || is_active(pos) {
            clock = clock + d.dist(prev, v);
            prev = v;
        }
    }
    Some(clock)
}

/// Instance induced on a vertex subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction<S> {
    pub instance: AprioriInstance<S>,
    /// `to_original[i]` is the original index of restricted vertex `i`.
    pub to_original: Vec<usize>,
}

impl<S> Restriction<S> {
    /// Restricted index of an original vertex.
    pub fn index_of(&self, original: usize) -> Option<usize> {
        self.to_original.binary_search(&original).ok()
    }
}

pub fn restrict_instance<S: Scalar>(instance: &AprioriInstance<S>, subset: &[usize]) -> Result<Restriction<S>> {
    let n = instance.n();
    let mut to_original = subset.to_vec();
    to_original.sort_unstable();
    to_original.dedup();
    if let Some(&v) = to_original.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    let root = to_original
        .binary_search(&instance.root())
        .map_err(|_| Error::RootMissing(instance.root()))?;
    let metric = instance.metric().induced(&to_original, root);
    let prob = to_original.iter().map(|&v| instance.prob()[v]).collect();
    Ok(Restriction { instance: AprioriInstance { metric, prob }, to_original })
}
