//! Seeded random instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use trp_core::model::{AprioriInstance, Metric};

use crate::io::distance_matrix;

/// Side of the square Euclidean points are drawn from.
pub const PLANE_SIDE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricModel {
    /// Points uniform in a square, Euclidean distances.
    EuclideanUniform,
    /// Random symmetric weights in `[1, 100]`, closed under shortest paths.
    MatrixShortestpath,
}

/// Serialized as its `uniform(a,b)` / `two-tier(high,low)` string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProbModel {
    Uniform { lo: f64, hi: f64 },
    /// Each non-root vertex is `high` or `low` with equal odds; at least one
    /// vertex gets `low`, and at least one gets `high` when `n >= 3`.
    TwoTier { high: f64, low: f64 },
}

impl fmt::Display for MetricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricModel::EuclideanUniform => "euclidean-uniform",
            MetricModel::MatrixShortestpath => "matrix-shortestpath",
        })
    }
}

impl FromStr for MetricModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euclidean-uniform" | "euclidean" => Ok(MetricModel::EuclideanUniform),
            "matrix-shortestpath" | "matrix" => Ok(MetricModel::MatrixShortestpath),
            _ => Err(format!("unknown metric model `{s}` (euclidean-uniform, matrix-shortestpath)")),
        }
    }
}

impl fmt::Display for ProbModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbModel::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            ProbModel::TwoTier { high, low } => write!(f, "two-tier({high},{low})"),
        }
    }
}

impl TryFrom<String> for ProbModel {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ProbModel> for String {
    fn from(m: ProbModel) -> String {
        m.to_string()
    }
}

/// Parses `uniform(a,b)` or `two-tier(high,low)`.
impl FromStr for ProbModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad probability model `{s}` (uniform(a,b) or two-tier(high,low))");
        let (kind, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<f64> = args.split(',').map(|a| a.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let [a, b] = nums[..] else { return Err(bad()) };
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(format!("probabilities in `{s}` must lie in [0, 1]"));
        }
        match kind.trim() {
            "uniform" if a <= b => Ok(ProbModel::Uniform { lo: a, hi: b }),
            "two-tier" => Ok(ProbModel::TwoTier { high: a, low: b }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub metric: MetricModel,
    pub prob: ProbModel,
}

/// splitmix64 mix of a master seed and an index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_points(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random_range(0.0..PLANE_SIDE), rng.random_range(0.0..PLANE_SIDE)]).collect()
}

/// Floyd-Warshall closure of a symmetric nonnegative matrix.
pub fn shortest_path_closure(rows: &mut [Vec<f64>]) {
    let n = rows.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = rows[i][k] + rows[k][j];
                if via < rows[i][j] {
                    rows[i][j] = via;
                }
            }
        }
    }
}

pub fn random_metric(rng: &mut impl Rng, n: usize, model: MetricModel) -> Metric<f64> {
    match model {
        MetricModel::EuclideanUniform => {
            Metric::new(distance_matrix(&random_points(rng, n)), 0).expect("euclidean distances form a metric")
        }
        MetricModel::MatrixShortestpath => {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let w = rng.random_range(1.0..=100.0);
                    rows[i][j] = w;
                    rows[j][i] = w;
                }
            }
            shortest_path_closure(&mut rows);
            Metric::new(rows, 0).expect("shortest-path closure is a metric")
        }
    }
}

pub fn random_probabilities(rng: &mut impl Rng, n: usize, model: ProbModel) -> Vec<f64> {
    let mut prob = vec![1.0; n];
    match model {
        ProbModel::Uniform { lo, hi } => {
            for p in prob.iter_mut().skip(1) {
                *p = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            }
        }
        ProbModel::TwoTier { high, low } => {
            for p in prob.iter_mut().skip(1) {
                *p = if rng.random_bool(0.5) { high } else { low };
            }
            if n >= 2 && !prob[1..].contains(&low) {
                let v = rng.random_range(1..n);
                prob[v] = low;
            }
            if n >= 3 && !prob[1..].contains(&high) {
                let v = rng.random_range(1..n);
                prob[v] = high;
            }
        }
    }
    prob
}

pub fn generate(config: &GenConfig) -> AprioriInstance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let metric = random_metric(&mut rng, config.n, config.metric);
    let prob = random_probabilities(&mut rng, config.n, config.prob);
    AprioriInstance::new(metric, prob).expect("generated probabilities are valid")
}

pub fn instance_name(config: &GenConfig) -> String {
    let tag = match config.metric {
        MetricModel::EuclideanUniform => "euc",
        MetricModel::MatrixShortestpath => "mat",
    };
    format!("{tag}-n{}-s{}", config.n, config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use trp_core::model::validate_metric;
    use trp_core::reduction::partition_xy;

    fn cfg(n: usize, seed: u64, metric: MetricModel, prob: ProbModel) -> GenConfig {
        GenConfig { n, seed, metric, prob }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(5, 1, MetricModel::EuclideanUniform, ProbModel::Uniform { lo: 0.1, hi: 0.9 });
        assert_eq!(generate(&c), generate(&c));
        let other = GenConfig { seed: 2, ..c };
        assert_ne!(generate(&c), generate(&other));
    }

    #[test]
    fn two_tier_creates_y_vertex() {
        for seed in 0..50 {
            let c = cfg(5, seed, MetricModel::EuclideanUniform, ProbModel::TwoTier { high: 0.7, low: 1e-4 });
            let inst = generate(&c);
            assert!(!partition_xy(&inst).y.is_empty());
            assert!(inst.prob()[1..].contains(&0.7));
        }
    }

    #[test]
    fn matrix_model_is_metric() {
        for seed in 0..20 {
            let c = cfg(7, seed, MetricModel::MatrixShortestpath, ProbModel::Uniform { lo: 0.0, hi: 1.0 });
            assert!(validate_metric(&generate(&c).metric().rows()).is_empty());
        }
    }

    #[test]
    fn model_strings_round_trip() {
        for s in ["uniform(0.1,0.9)", "two-tier(0.6,0.0001)"] {
            assert_eq!(s.parse::<ProbModel>().unwrap().to_string(), s);
        }
        assert!("uniform(0.9,0.1)".parse::<ProbModel>().is_err());
        assert!("two-tier(2,0)".parse::<ProbModel>().is_err());
        assert_eq!("matrix".parse::<MetricModel>().unwrap(), MetricModel::MatrixShortestpath);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
