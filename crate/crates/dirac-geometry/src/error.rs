//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkew(f64),

    #[error("symmetric form is degenerate (|det| = {0:.3e})")]
    DegenerateForm(f64),

    #[error("unknown group or algebra name `{0}`")]
    UnknownName(String),

    #[error("group constraint violated before projection (residual {0:.3e})")]
    ConstraintViolation(f64),

    #[error("arrows are not composable (source/target mismatch {0:.3e})")]
    NotComposable(f64),

    #[error("linear system has no solution at tolerance (residual {0:.3e})")]
    NoSolution(f64),

    #[error("solution is not unique at tolerance (slack dimension {0})")]
    NotUnique(usize),

    #[error("orbit directions do not match the computed kernel of the pulled-back structure")]
    OrbitMismatch,

    #[error("target point is not a regular value (rank {rank} < {expected})")]
    NotRegular { rank: usize, expected: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
