//! Binary operator means on SPD matrices and the matrix fixed-point equation
//! `X = (X σ₁ A) τ (X σ₂ B)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::Driver;
use crate::repfun::{rep_of, MeanSpec, RepFunction};
use crate::spd::{check_dims, sym_fun_calc_with, thompson_dist, HalfPowers, SpdMatrix};

/// Where the matrix fixed-point iteration starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Start {
    /// `X₀ = λ·I` with `λ` the largest eigenvalue over all inputs. Iterates
    /// are then Loewner nonincreasing; acceleration is disabled.
    FromAbove,
    /// Weighted arithmetic mean of the inputs.
    #[default]
    ArithmeticMean,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixSolveConfig {
    /// Thompson-metric tolerance on `d_T(X, F(X))`.
    pub tol: f64,
    pub max_iter: usize,
    pub start: Start,
    /// Anderson history depth; 0 gives plain Picard iteration.
    pub acceleration: usize,
}

impl Default for MatrixSolveConfig {
    fn default() -> Self {
        MatrixSolveConfig {
            tol: 1e-11,
            max_iter: 500,
            start: Start::ArithmeticMean,
            acceleration: 5,
        }
    }
}

impl MatrixSolveConfig {
    pub fn with_tol(tol: f64) -> Self {
        MatrixSolveConfig {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(Error::Parameter(format!(
                "matrix tolerance {} must lie in (0, 1e-6]",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Configuration for nested solves inside an outer map.
    pub fn inner(&self) -> Self {
        MatrixSolveConfig {
            tol: (self.tol / 10.0).max(1e-14),
            max_iter: self.max_iter.max(500),
            start: Start::ArithmeticMean,
            acceleration: self.acceleration,
        }
    }

    pub(crate) fn driver(&self) -> Driver {
        Driver {
            tol: self.tol,
            max_iter: self.max_iter,
            depth: match self.start {
                Start::FromAbove => 0,
                Start::ArithmeticMean => self.acceleration,
            },
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `d_T(X, F(X))` at the returned `X`.
    pub residual: f64,
    pub converged: bool,
}

impl SolveReport {
    pub fn exact() -> Self {
        SolveReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }

    /// Turns a non-converged report into an error.
    pub fn ok(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

/// `A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`.
pub fn mean_with_rep(f: &RepFunction, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(a, b)?;
    let hp = HalfPowers::of(a)?;
    let inner = sym_fun_calc_with(&hp.whiten(b), |x| f.eval(x))?;
    SpdMatrix::from_computed(hp.color(&inner))
}

/// `A σ B` for a catalog mean.
pub fn binary_mean(spec: &MeanSpec, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(a, b)?;
    match spec {
        MeanSpec::Left => Ok(a.clone()),
        MeanSpec::Right => Ok(b.clone()),
        _ => mean_with_rep(&rep_of(spec)?, a, b),
    }
}

/// A binary mean with its representing function evaluated once.
#[derive(Clone, Debug)]
pub(crate) enum BoundMean {
    Left,
    Right,
    Rep(RepFunction),
}

impl BoundMean {
    pub fn new(spec: &MeanSpec) -> Result<Self> {
        Ok(match spec {
            MeanSpec::Left => BoundMean::Left,
            MeanSpec::Right => BoundMean::Right,
            other => BoundMean::Rep(rep_of(other)?),
        })
    }

    pub fn apply(&self, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
        match self {
            BoundMean::Left => Ok(a.clone()),
            BoundMean::Right => Ok(b.clone()),
            BoundMean::Rep(f) => mean_with_rep(f, a, b),
        }
    }
}

/// Largest eigenvalue over all inputs, times the identity.
pub(crate) fn upper_start(ms: &[&SpdMatrix]) -> Result<SpdMatrix> {
    let mut top = 0.0_f64;
    for m in ms {
        top = top.max(m.eigen()?.max());
    }
    Ok(SpdMatrix::scalar(ms[0].dim(), top))
}

fn reject_left(sigma: &MeanSpec) -> Result<()> {
    if sigma.is_left() {
        Err(Error::InvalidSpec(
            "a deforming mean must differ from the left trivial mean".into(),
        ))
    } else {
        Ok(())
    }
}

fn deform_map(
    tau: &MeanSpec,
    sigma1: &MeanSpec,
    sigma2: &MeanSpec,
) -> Result<(BoundMean, BoundMean, BoundMean)> {
    reject_left(sigma1)?;
    reject_left(sigma2)?;
    Ok((
        BoundMean::new(tau)?,
        BoundMean::new(sigma1)?,
        BoundMean::new(sigma2)?,
    ))
}

/// Solves `X = (X σ₁ A) τ (X σ₂ B)`.
pub fn deform_fixed_point(
    tau: &MeanSpec,
    sigma1: &MeanSpec,
    sigma2: &MeanSpec,
    a: &SpdMatrix,
    b: &SpdMatrix,
    cfg: &MatrixSolveConfig,
) -> Result<(SpdMatrix, SolveReport)> {
    deform_fixed_point_observed(tau, sigma1, sigma2, a, b, cfg, |_| {})
}

/// As [`deform_fixed_point`], reporting every accepted iterate.
pub fn deform_fixed_point_observed(
    tau: &MeanSpec,
    sigma1: &MeanSpec,
    sigma2: &MeanSpec,
    a: &SpdMatrix,
    b: &SpdMatrix,
    cfg: &MatrixSolveConfig,
    observe: impl FnMut(&SpdMatrix),
) -> Result<(SpdMatrix, SolveReport)> {
    cfg.validate()?;
    check_dims(a, b)?;
    let (t, s1, s2) = deform_map(tau, sigma1, sigma2)?;
    let x0 = match cfg.start {
        Start::FromAbove => upper_start(&[a, b])?,
        Start::ArithmeticMean => SpdMatrix::from_computed((a.as_matrix() + b.as_matrix()) * 0.5)?,
    };
    let map = |x: &SpdMatrix| t.apply(&s1.apply(x, a)?, &s2.apply(x, b)?);
    cfg.driver().solve_observed(map, x0, observe)
}

/// `d_T((Xσ₁A)τ(Xσ₂B), X)` for a candidate `X`.
pub fn deform_residual(
    tau: &MeanSpec,
    sigma1: &MeanSpec,
    sigma2: &MeanSpec,
    a: &SpdMatrix,
    b: &SpdMatrix,
    x: &SpdMatrix,
) -> Result<f64> {
    let (t, s1, s2) = deform_map(tau, sigma1, sigma2)?;
    thompson_dist(x, &t.apply(&s1.apply(x, a)?, &s2.apply(x, b)?)?)
}

/// Thompson distance between the matrix fixed point and the functional
/// calculus of the scalar deformed representing function.
pub fn cross_check(
    tau: &MeanSpec,
    sigma: &MeanSpec,
    a: &SpdMatrix,
    b: &SpdMatrix,
    cfg: &MatrixSolveConfig,
) -> Result<f64> {
    let (x, report) = deform_fixed_point(tau, sigma, sigma, a, b, cfg)?;
    report.ok()?;
    let y = binary_mean(&MeanSpec::deformed(tau.clone(), sigma.clone()), a, b)?;
    thompson_dist(&x, &y)
}
