use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("root {root} out of range for {n} vertices")]
    RootOutOfRange { root: usize, n: usize },

    #[error("expected {expected} probabilities, got {got}")]
    ProbabilityCount { expected: usize, got: usize },

    #[error("probability of vertex {vertex} is {value}, outside [0, 1]")]
    ProbabilityRange { vertex: usize, value: f64 },

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("active vertex {0} is not on the tour")]
    NotOnTour(usize),

    #[error("subset does not contain the root {0}")]
    RootMissing(usize),

    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("{size} vertices to enumerate exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("block {0} has size zero")]
    EmptyBlock(usize),

    #[error("degenerate reduction: no non-root vertex has probability at least 1/n^2")]
    DegenerateReduction,

    #[error("scaled instance needs {copies} copies, cap is {cap}")]
    CopyCapExceeded { copies: usize, cap: usize },

    #[error("tour is not consecutive: copies of vertex {0} are split")]
    NotConsecutive(usize),

    #[error("invalid parts: {0}")]
    InvalidParts(String),

    #[error("lambda is undefined for p = 0")]
    LambdaUndefined,

    #[error("solver {name} failed: {reason}")]
    Solver { name: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
