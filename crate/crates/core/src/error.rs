use thiserror::Error;

/// Errors produced by body construction and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("matrix is singular or not invertible")]
    SingularMatrix,

    #[error("direction is not traceless symmetric: {0}")]
    InvalidDirection(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("method {method} cannot be used here: {reason}")]
    MethodMismatch { method: String, reason: String },

    #[error("restricted spherical measure is empty ({0})")]
    EmptyMeasure(String),

    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
