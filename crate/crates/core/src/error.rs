use thiserror::Error;

/// Errors raised by matrix construction, functional calculus and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,
    #[error("function is undefined or non-positive at {0}")]
    Domain(f64),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("invalid mean specification: {0}")]
    InvalidSpec(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("empty input")]
    Empty,
    #[error("malformed matrix data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
