use thiserror::Error;

/// Errors raised by the sampler, prior handling and summaries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("stacked design is rank deficient (rank {rank} < {p}); deficient directions: {directions:?}")]
    RankDeficient {
        rank: usize,
        p: usize,
        directions: Vec<Vec<f64>>,
    },

    #[error("precision matrix is not positive definite")]
    Cholesky,

    #[error("effective sample size undefined: {0}")]
    UndefinedEss(String),

    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("unstable ED50: {fraction:.4} of draws have a near-zero slope")]
    UnstableEd50 { fraction: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
