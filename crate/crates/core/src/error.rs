//! Library error type.

/// Errors produced by the numeric core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// The iterative eigen routine behind the SVD did not converge within
    /// its sweep cap. Callers never receive partially converged factors.
    #[error("eigen iteration did not converge within {cap} sweeps")]
    NoConvergence { cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
