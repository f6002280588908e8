//! A priori traveling repairman toolkit: expected-latency evaluators, the
//! reduction from arbitrary to uniform visit probabilities, and the
//! consecutive-copy transform it relies on.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`; the `*32` aliases use `f32`.

pub mod consecutive;
pub mod error;
pub mod latency;
pub mod model;
pub mod reduction;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use latency::{Method, BRUTE_FORCE_LIMIT};
pub use model::{shortcut, ActiveSet, Distances, MasterTour, MetricViolation, Validation};
pub use reduction::{apriori_solve, SolveConfig};
pub use scalar::{hit_probability, le_rel, Scalar};
pub use solvers::{solver_by_name, SolverDescriptor, UniformSolver};

pub type Metric = model::Metric<f64>;
pub type AprioriInstance = model::AprioriInstance<f64>;
pub type ScaledInstance = reduction::ScaledInstance<f64>;
pub type LatencyEstimate = latency::LatencyEstimate<f64>;
pub type ReductionArtifacts = reduction::ReductionArtifacts<f64>;

pub type Metric32 = model::Metric<f32>;
pub type AprioriInstance32 = model::AprioriInstance<f32>;
pub type ScaledInstance32 = reduction::ScaledInstance<f32>;
pub type LatencyEstimate32 = latency::LatencyEstimate<f32>;
