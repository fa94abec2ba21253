use thiserror::Error;

/// Errors produced by lattice, sampling and decoding operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular basis: exact rank {rank} < dimension {n}")]
    SingularBasis { rank: usize, n: usize },

    #[error("malformed basis: {0}")]
    MalformedBasis(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "enumeration budget exceeded: more than {cap} lattice points in radius {radius:.4} \
         (dimension/radius too large for exact mode)"
    )]
    EnumerationBudget { cap: usize, radius: f64 },

    #[error("probe budget exceeded: {needed} probe points requested, cap is {cap}")]
    ProbeBudget { needed: usize, cap: usize },

    #[error(
        "width too small for the Klein sampler: s = {s:.6} < {threshold:.6} \
         (statistical guarantee void; reduce the basis or raise s)"
    )]
    WidthTooSmall { s: f64, threshold: f64 },

    #[error("smoothing bracket not found: {0}")]
    BracketNotFound(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible preprocessing size: N = {0} vectors; pass an explicit override count")]
    InfeasibleCount(String),
}

pub type Result<T> = std::result::Result<T, Error>;
