use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a periodic chain needs at least 3 sites, got {0}")]
    ChainTooShort(usize),

    #[error("transverse field must be finite and non-negative, got {0}")]
    InvalidField(f64),

    #[error("exact diagonalization supports at most {max} sites, got {n}")]
    TooLargeForEd { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} is too large: {size} exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spin values must be +1 or -1, found {0}")]
    InvalidSpin(i64),

    #[error("ring norm vanished (rescaled trace {0:e}); the state is degenerate")]
    DegenerateNorm(f64),

    #[error("objective returned {value} at parameters {params:?}")]
    NonFiniteObjective { value: f64, params: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("accuracy goal {goal:e} is never crossed: {reason}")]
    NoCrossing { goal: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
