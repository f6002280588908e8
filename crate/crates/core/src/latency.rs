//! Expected latency of a master tour.
//!
//! Four routes to the same quantity:
//!
//! * [`exact_elat`]: O(n^2) sum over edges of the shortcut tour. Edge
//!   `(i, j)` is used iff `i` and `j` are active and everything between
//!   them is inactive, and it is paid once by every active vertex from `j`
//!   onwards.
//! * [`brute_force_elat`]: enumerates every active set. Exponential; used
//!   as an oracle.
//! * [`mc_elat`]: seeded Monte Carlo with a standard error.
//! * [`block_elat`]: the edge sum over runs of co-located copies that share
//!   one activation probability, in O(b^2) for b runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{walk_total, AprioriInstance, Distances, MasterTour};
use crate::scalar::{hit_probability, Scalar};

/// Default cap on non-root vertices for exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Brute,
    Mc,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyEstimate<S> {
    pub value: S,
    /// Zero for the exact methods.
    pub stderr: S,
    pub method: Method,
}

impl<S: Scalar> LatencyEstimate<S> {
    fn exact(value: S, method: Method) -> Self {
        LatencyEstimate { value, stderr: S::zero(), method }
    }
}

/// Sum over ordered pairs `i < j` of
/// `dist(i, j) * q_i * q_j * prod_{i<k<j} (1 - q_k) * weight_j`.
///
/// `weight[j]` is the expected number of active vertices from `j` onwards
/// given that `j` is the endpoint of the edge.
fn edge_sum<S: Scalar>(q: &[S], weight: &[S], dist: impl Fn(usize, usize) -> S) -> S {
    let m = q.len();
    let mut total = S::zero();
    for i in 0..m {
        if q[i] <= S::zero() {
            continue;
        }
        // gap = prod of (1 - q_k) strictly between i and j; once some q_k = 1
        // nothing beyond it can be reached directly from i.
        let mut gap = S::one();
        for j in i + 1..m {
            if q[j] > S::zero() {
                total = total + dist(i, j) * q[i] * q[j] * gap * weight[j];
            }
            gap = gap * (S::one() - q[j]);
            if gap <= S::zero() {
                break;
            }
        }
    }
    total
}

/// Exact expected latency of `order` under probabilities `prob` (indexed by
/// vertex). The first vertex of `order` is treated as always active.
pub fn exact_elat_with<S: Scalar, D: Distances<S>>(d: &D, prob: &[S], order: &[usize]) -> S {
    let m = order.len();
    let q: Vec<S> = order
        .iter()
        .enumerate()
        .map(|(pos, &v)| if pos == 0 { S::one() } else { prob[v] })
        .collect();
    let mut weight = vec![S::zero(); m];
    let mut suffix = S::zero();
    for j in (0..m).rev() {
        weight[j] = S::one() + suffix;
        suffix = suffix + q[j];
    }
    edge_sum(&q, &weight, |i, j| d.dist(order[i], order[j]))
}

pub fn exact_elat<S: Scalar>(instance: &AprioriInstance<S>, tour: &MasterTour) -> LatencyEstimate<S> {
    LatencyEstimate::exact(exact_elat_with(instance.metric(), instance.prob(), tour.order()), Method::Exact)
}

/// Exhaustive expectation over all active sets of the non-root vertices.
pub fn brute_force_elat_with<S: Scalar, D: Distances<S>>(
    d: &D,
    prob: &[S],
    order: &[usize],
    limit: usize,
) -> Result<S> {
    let k = order.len() - 1;
    if k > limit || k >= usize::BITS as usize {
        return Err(Error::TooLarge { size: k, limit });
    }
    let p: Vec<S> = order[1..].iter().map(|&v| prob[v]).collect();
    let mut total = S::zero();
    for mask in 0usize..(1 << k) {
        let mut weight = S::one();
        for (bit, &pv) in p.iter().enumerate() {
            weight = weight * if mask >> bit & 1 == 1 { pv } else { S::one() - pv };
        }
        if weight == S::zero() {
            continue;
        }
        total = total + weight * walk_total(d, order, |pos| mask >> (pos - 1) & 1 == 1);
    }
    Ok(total)
}

pub fn brute_force_elat<S: Scalar>(
    instance: &AprioriInstance<S>,
    tour: &MasterTour,
    limit: usize,
) -> Result<LatencyEstimate<S>> {
    brute_force_elat_with(instance.metric(), instance.prob(), tour.order(), limit)
        .map(|v| LatencyEstimate::exact(v, Method::Brute))
}

/// Monte Carlo estimate. Sample `i` draws from its own ChaCha stream
/// `(seed, i)`, so the result does not depend on how samples are scheduled.
pub fn mc_elat<S: Scalar>(
    instance: &AprioriInstance<S>,
    tour: &MasterTour,
    samples: usize,
    seed: u64,
) -> Result<LatencyEstimate<S>> {
    if samples < 2 {
        return Err(Error::TooFewSamples(samples));
    }
    let order = tour.order();
    let p: Vec<f64> = order.iter().map(|&v| instance.prob()[v].as_f64()).collect();
    let draws: Vec<S> = (0..samples)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let active: Vec<bool> = p.iter().map(|&pv| rng.random::<f64>() < pv).collect();
            walk_total(instance.metric(), order, |pos| active[pos])
        })
        .collect();

    // Welford, sequential in sample order.
    let mut mean = S::zero();
    let mut m2 = S::zero();
    for (k, &x) in draws.iter().enumerate() {
        let delta = x - mean;
        mean = mean + delta / S::from_usize_lossy(k + 1);
        m2 = m2 + delta * (x - mean);
    }
    let n = S::from_usize_lossy(samples);
    let variance = m2 / (n - S::one());
    Ok(LatencyEstimate { value: mean, stderr: (variance / n).sqrt(), method: Method::Mc })
}

/// Run of `size` co-located copies at `rep`, each active with `prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block<S> {
    pub rep: usize,
    pub size: usize,
    pub prob: S,
}

impl<S: Scalar> Block<S> {
    /// Probability that at least one copy is active.
    pub fn hit_probability(&self) -> S {
        hit_probability(self.prob, self.size)
    }

    /// Expected active copies given at least one is active; 0 if the block
    /// can never be hit.
    pub fn conditional_count(&self) -> S {
        let q = self.hit_probability();
        if q <= S::zero() {
            S::zero()
        } else {
            S::from_usize_lossy(self.size) * self.prob / q
        }
    }
}

/// Tour over blocks, led by an always-active root block of size one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSequence<S> {
    pub root: usize,
    pub blocks: Vec<Block<S>>,
}

impl<S: Scalar> BlockSequence<S> {
    pub fn new(root: usize, blocks: Vec<Block<S>>) -> Result<Self> {
        if let Some(i) = blocks.iter().position(|b| b.size == 0) {
            return Err(Error::EmptyBlock(i));
        }
        Ok(BlockSequence { root, blocks })
    }

    pub fn total_copies(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }
}

pub fn block_elat_value<S: Scalar, D: Distances<S>>(d: &D, seq: &BlockSequence<S>) -> S {
    let b = seq.blocks.len() + 1;
    let mut q = Vec::with_capacity(b);
    let mut weight = vec![S::zero(); b];
    q.push(S::one());
    q.extend(seq.blocks.iter().map(Block::hit_probability));
    let mut suffix = S::zero();
    for j in (1..b).rev() {
        let blk = &seq.blocks[j - 1];
        weight[j] = blk.conditional_count() + suffix;
        suffix = suffix + S::from_usize_lossy(blk.size) * blk.prob;
    }
    let rep = |i: usize| if i == 0 { seq.root } else { seq.blocks[i - 1].rep };
    edge_sum(&q, &weight, |i, j| d.dist(rep(i), rep(j)))
}

pub fn block_elat<S: Scalar, D: Distances<S>>(d: &D, seq: &BlockSequence<S>) -> Result<LatencyEstimate<S>> {
    if let Some(i) = seq.blocks.iter().position(|b| b.size == 0) {
        return Err(Error::EmptyBlock(i));
    }
    Ok(LatencyEstimate::exact(block_elat_value(d, seq), Method::Block))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Metric;

    fn line(pa: f64, pb: f64) -> AprioriInstance<f64> {
        let m = Metric::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).unwrap();
        AprioriInstance::new(m, vec![1.0, pa, pb]).unwrap()
    }

    fn tour(o: &[usize]) -> MasterTour {
        MasterTour::new(o.to_vec(), 0).unwrap()
    }

    // r, u, z with d(r,u)=1, d(r,z)=2, d(u,z)=1
    fn ruz() -> Metric<f64> {
        Metric::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).unwrap()
    }

    #[test]
    fn exact_line_examples() {
        assert_eq!(exact_elat(&line(1.0, 1.0), &tour(&[0, 1, 2])).value, 3.0);
        assert!((exact_elat(&line(0.5, 0.5), &tour(&[0, 1, 2])).value - 1.5).abs() < 1e-15);
        assert!((exact_elat(&line(0.0, 0.5), &tour(&[0, 1, 2])).value - 1.0).abs() < 1e-15);
        assert!((exact_elat(&line(0.5, 0.5), &tour(&[0, 2, 1])).value - 2.0).abs() < 1e-15);
        // scaled-down probabilities, enumerated by hand: 0.75
        assert!((exact_elat(&line(0.25, 0.25), &tour(&[0, 1, 2])).value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn brute_force_line_examples() {
        let b = brute_force_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(b.value, 1.5);
        assert_eq!(b.method, Method::Brute);
        let b = brute_force_elat(&line(0.5, 0.5), &tour(&[0, 2, 1]), BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(b.value, 2.0);
        let det = brute_force_elat(&line(1.0, 0.0), &tour(&[0, 2, 1]), BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(det.value, 1.0);
    }

    #[test]
    fn brute_force_respects_limit() {
        assert_eq!(
            brute_force_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), 1),
            Err(Error::TooLarge { size: 2, limit: 1 })
        );
    }

    #[test]
    fn exact_handles_certain_vertices_mid_tour() {
        // q = 1 in the middle truncates every longer edge
        let inst = line(1.0, 0.3);
        let b = brute_force_elat(&inst, &tour(&[0, 1, 2]), 15).unwrap().value;
        assert!((exact_elat(&inst, &tour(&[0, 1, 2])).value - b).abs() < 1e-15);
    }

    #[test]
    fn mc_deterministic_inputs_have_zero_error() {
        let est = mc_elat(&line(1.0, 1.0), &tour(&[0, 1, 2]), 100, 3).unwrap();
        assert_eq!(est.value, 3.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_is_reproducible() {
        let a = mc_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), 2, 11).unwrap();
        let b = mc_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), 2, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr.is_finite());
        assert_eq!(mc_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), 1, 11), Err(Error::TooFewSamples(1)));
    }

    #[test]
    fn mc_converges_on_line() {
        let est = mc_elat(&line(0.5, 0.5), &tour(&[0, 1, 2]), 100_000, 7).unwrap();
        assert!((est.value - 1.5).abs() <= 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn block_examples() {
        let m = ruz();
        let seq = BlockSequence::new(
            0,
            vec![Block { rep: 1, size: 1, prob: 0.5 }, Block { rep: 2, size: 2, prob: 0.5 }],
        )
        .unwrap();
        assert!((block_elat(&m, &seq).unwrap().value - 2.5).abs() < 1e-15);

        // (r, z, u, z) as runs of one copy each
        let split = BlockSequence::new(
            0,
            vec![
                Block { rep: 2, size: 1, prob: 0.5 },
                Block { rep: 1, size: 1, prob: 0.5 },
                Block { rep: 2, size: 1, prob: 0.5 },
            ],
        )
        .unwrap();
        assert!((block_elat(&m, &split).unwrap().value - 3.25).abs() < 1e-15);
    }

    #[test]
    fn unit_blocks_reduce_to_exact() {
        let inst = line(0.3, 0.8);
        let seq = BlockSequence::new(
            0,
            vec![Block { rep: 2, size: 1, prob: 0.8 }, Block { rep: 1, size: 1, prob: 0.3 }],
        )
        .unwrap();
        let flat = exact_elat(&inst, &tour(&[0, 2, 1])).value;
        assert!((block_elat(&ruz(), &seq).unwrap().value - flat).abs() < 1e-15);
    }

    #[test]
    fn zero_size_block_is_rejected() {
        assert_eq!(
            BlockSequence::new(0, vec![Block { rep: 1, size: 0, prob: 0.5 }]),
            Err(Error::EmptyBlock(0))
        );
        let bad = BlockSequence { root: 0, blocks: vec![Block { rep: 1, size: 0, prob: 0.5f64 }] };
        assert_eq!(block_elat(&ruz(), &bad), Err(Error::EmptyBlock(0)));
    }

    #[test]
    fn never_hit_blocks_contribute_nothing() {
        let seq = BlockSequence::new(
            0,
            vec![Block { rep: 1, size: 3, prob: 0.0 }, Block { rep: 2, size: 1, prob: 1.0 }],
        )
        .unwrap();
        assert_eq!(block_elat(&ruz(), &seq).unwrap().value, 2.0);
    }

    #[test]
    fn f32_matches_f64() {
        let m32 = Metric::<f32>::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]], 0).unwrap();
        let inst = AprioriInstance::new(m32, vec![1.0, 0.5, 0.5]).unwrap();
        assert!((exact_elat(&inst, &tour(&[0, 1, 2])).value - 1.5).abs() < 1e-6);
    }
}
