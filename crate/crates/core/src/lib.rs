//! Operator means on symmetric positive definite matrices, their
//! fixed-point deformations, and multivariate means.

pub mod deform;
pub mod error;
mod fixed_point;
pub mod grammar;
pub mod io;
pub mod matrix_mean;
pub mod multimean;
pub mod repfun;
pub mod spd;

pub use deform::ScalarSolveConfig;
pub use error::{Error, Result};
pub use matrix_mean::{binary_mean, MatrixSolveConfig, SolveReport, Start};
pub use multimean::{eval_multi, MultiMeanSpec, WeightVector};
pub use repfun::{rep_of, MeanSpec, RepFunction};
pub use spd::SpdMatrix;

/// Evaluation grid shared by the pointwise checks.
pub const GRID: [f64; 9] = [0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0];
