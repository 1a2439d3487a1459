use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fragment point count overflows usize (edges {edges:?})")]
    CountOverflow { edges: Vec<u64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("box {index} is not inside the unit cube: {detail}")]
    BoxOutsideUnitCube { index: usize, detail: String },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("cell measure is {measure}, expected 1 (witness {witness:?})")]
    CellMeasure { measure: f64, witness: Option<Vec<f64>> },

    #[error("cell pieces overlap at {point:?}")]
    CellDoubleCoverage { point: Vec<f64> },

    #[error("cell pieces leave a gap at {point:?}")]
    CellGap { point: Vec<f64> },

    #[error("matrix is singular or ill-conditioned: {0}")]
    Singular(String),

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("numerical consistency breach: {0}")]
    Consistency(String),

    #[error("candidate enumeration of {count} points exceeds the guard {limit}")]
    EnumerationGuard { count: u128, limit: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
