//! Symmetric positive definite matrices and the functional calculus on them.
//!
//! Every eigensolve symmetrizes its input first. Positive definiteness is
//! judged against a relative floor: the smallest eigenvalue must exceed
//! `1e-12 * ||A||` where `||A||` is the spectral norm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative floor on the smallest eigenvalue.
pub const PD_FLOOR: f64 = 1e-12;
/// Relative tolerance on `|a_ij - a_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// A dense real symmetric positive definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

/// Spectral decomposition `A = V diag(λ) Vᵀ` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomp {
    /// `V diag(g(λ)) Vᵀ`, symmetrized.
    pub fn recompose(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        symmetrize(&(scaled * v.transpose()))
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Eigendecomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenDecomp> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format("non-finite matrix entry".into()));
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(Error::EigenFailure)?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Applies `f` to the spectrum of a symmetric matrix (not necessarily definite).
pub fn sym_fun_calc(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    sym_fun_calc_with(m, |x| Ok(f(x)))
}

/// Fallible variant of [`sym_fun_calc`]; non-finite values are domain errors.
pub fn sym_fun_calc_with(m: &DMatrix<f64>, f: impl Fn(f64) -> Result<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    apply_spectrum(&eig, f)
}

fn apply_spectrum(eig: &EigenDecomp, f: impl Fn(f64) -> Result<f64>) -> Result<DMatrix<f64>> {
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        let y = f(*v)?;
        if !y.is_finite() {
            return Err(Error::Domain(*v));
        }
        *v = y;
    }
    Ok(eig.recompose(&vals))
}

/// `V diag(f(λᵢ)) Vᵀ` for an SPD matrix.
pub fn fun_calc(a: &SpdMatrix, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    a.fun_calc_with(|x| Ok(f(x)))
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness; stores the symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite matrix entry".into()));
        }
        let asym = max_abs(&(&m - m.transpose()));
        if asym > SYMMETRY_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::NotSymmetric(asym));
        }
        let m = symmetrize(&m);
        let eig = sym_eigen(&m)?;
        let norm = eig.max().abs().max(eig.min().abs());
        if eig.min() <= PD_FLOOR * norm || eig.min() <= 0.0 {
            return Err(Error::NotPositiveDefinite(eig.min()));
        }
        Ok(SpdMatrix(m))
    }

    /// Wraps a matrix produced by an SPD-preserving computation. The input is
    /// symmetrized and checked with a Cholesky factorization only.
    pub(crate) fn from_computed(m: DMatrix<f64>) -> Result<Self> {
        let m = symmetrize(&m);
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(f64::NAN));
        }
        match m.clone().cholesky() {
            Some(_) => Ok(SpdMatrix(m)),
            None => {
                let min = sym_eigen(&m).map(|e| e.min()).unwrap_or(f64::NAN);
                Err(Error::NotPositiveDefinite(min))
            }
        }
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        SpdMatrix::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix(DMatrix::identity(dim, dim))
    }

    /// `c·I`; panics unless `c > 0`.
    pub fn scalar(dim: usize, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scalar matrix needs c > 0");
        SpdMatrix(DMatrix::identity(dim, dim) * c)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::NotPositiveDefinite(bad));
        }
        Ok(SpdMatrix(DMatrix::from_diagonal(&DVector::from_row_slice(
            values,
        ))))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d * d).map(|k| self.0[(k / d, k % d)]).collect()
    }

    pub fn eigen(&self) -> Result<EigenDecomp> {
        sym_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.eigenvalues.iter().copied().collect())
    }

    pub fn fun_calc_with(&self, f: impl Fn(f64) -> Result<f64>) -> Result<DMatrix<f64>> {
        apply_spectrum(&self.eigen()?, f)
    }

    /// Functional calculus with a function that is positive on the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SpdMatrix> {
        self.map_with(|x| Ok(f(x)))
    }

    pub fn map_with(&self, f: impl Fn(f64) -> Result<f64>) -> Result<SpdMatrix> {
        let eig = self.eigen()?;
        map_spectrum_with(&eig, f)
    }

    pub fn sqrt(&self) -> Result<SpdMatrix> {
        self.map(f64::sqrt)
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        self.map(|x| 1.0 / x)
    }

    pub fn powf(&self, p: f64) -> Result<SpdMatrix> {
        self.map(|x| x.powf(p))
    }

    /// Symmetric matrix logarithm.
    pub fn log(&self) -> Result<DMatrix<f64>> {
        fun_calc(self, f64::ln)
    }

    /// `c·A` for `c > 0`.
    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale factor {c} must be positive"
            )));
        }
        Ok(SpdMatrix(&self.0 * c))
    }

    pub fn add(&self, other: &SpdMatrix) -> Result<SpdMatrix> {
        check_dims(self, other)?;
        Ok(SpdMatrix(&self.0 + &other.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

fn map_spectrum_with(eig: &EigenDecomp, f: impl Fn(f64) -> Result<f64>) -> Result<SpdMatrix> {
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        let y = f(*v)?;
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Domain(*v));
        }
        *v = y;
    }
    SpdMatrix::from_computed(eig.recompose(&vals))
}

/// Square root and inverse square root of one matrix, sharing one eigensolve.
#[derive(Clone, Debug)]
pub(crate) struct HalfPowers {
    pub half: DMatrix<f64>,
    pub inv_half: DMatrix<f64>,
}

impl HalfPowers {
    pub fn of(a: &SpdMatrix) -> Result<Self> {
        let eig = a.eigen()?;
        let sq = eig.eigenvalues.map(f64::sqrt);
        let isq = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
        Ok(HalfPowers {
            half: eig.recompose(&sq),
            inv_half: eig.recompose(&isq),
        })
    }

    /// `A^{-1/2} B A^{-1/2}` as a symmetric matrix.
    pub fn whiten(&self, b: &SpdMatrix) -> DMatrix<f64> {
        symmetrize(&(&self.inv_half * b.as_matrix() * &self.inv_half))
    }

    /// `A^{1/2} M A^{1/2}`.
    pub fn color(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.half * m * &self.half))
    }
}

pub(crate) fn check_dims(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Eigenvalues of the pencil `(B, A)`, i.e. of `A⁻¹B`, through a Cholesky
/// factor of `A`.
pub fn generalized_eigenvalues(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    check_dims(a, b)?;
    let chol =
        a.0.clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite(f64::NAN))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(b.as_matrix())
        .ok_or(Error::Singular)?;
    let m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::Singular)?;
    let eig = sym_eigen(&m)?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Thompson metric `||log A^{-1/2} B A^{-1/2}||` in operator norm.
pub fn thompson_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let mu = generalized_eigenvalues(a, b)?;
    Ok(mu.iter().fold(0.0_f64, |acc, m| acc.max(m.ln().abs())))
}

/// Riemannian trace metric `||log A^{-1/2} B A^{-1/2}||_2` (Frobenius norm).
pub fn riemann_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let mu = generalized_eigenvalues(a, b)?;
    Ok(mu.iter().map(|m| m.ln().powi(2)).sum::<f64>().sqrt())
}

/// `C A Cᵀ` for invertible `C`.
pub fn congruence(c: &DMatrix<f64>, a: &SpdMatrix) -> Result<SpdMatrix> {
    if c.nrows() != a.dim() || c.ncols() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: c.nrows().max(c.ncols()),
        });
    }
    let sv = c.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-14 * smax) {
        return Err(Error::Singular);
    }
    SpdMatrix::from_computed(c * a.as_matrix() * c.transpose())
}

/// `A ≤ B` in the Loewner order: `λ_min(B − A) ≥ −tol`.
pub fn loewner_leq(a: &SpdMatrix, b: &SpdMatrix, tol: f64) -> bool {
    loewner_gap(a, b).map(|g| g >= -tol).unwrap_or(false)
}

/// `λ_min(B − A)`.
pub fn loewner_gap(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(sym_eigen(&(b.as_matrix() - a.as_matrix()))?.min())
}

/// Deterministic random SPD matrix with condition number at most `cond_bound`.
///
/// The spectrum is log-uniform on `[c, c·cond_bound]` for a random scale `c`
/// and the eigenvectors come from a QR factorization of a uniform random
/// matrix.
pub fn random_spd(dim: usize, seed: u64, cond_bound: f64) -> SpdMatrix {
    assert!(dim >= 1, "dim must be positive");
    assert!(cond_bound >= 1.0, "cond_bound must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_spd_from(&mut rng, dim, cond_bound)
}

/// Same as [`random_spd`] but drawing from a caller-owned generator.
pub fn random_spd_from<R: Rng>(rng: &mut R, dim: usize, cond_bound: f64) -> SpdMatrix {
    let scale: f64 = rng.gen_range(-0.5_f64..0.5).exp();
    let log_cond = cond_bound.ln();
    let mut vals: Vec<f64> = (0..dim)
        .map(|_| scale * (rng.gen::<f64>() * log_cond).exp())
        .collect();
    if dim == 1 {
        vals[0] = scale;
    }
    let q = random_orthogonal(rng, dim);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vals));
    SpdMatrix(symmetrize(&(&q * d * q.transpose())))
}

/// Random well-conditioned invertible matrix (for congruence tests).
pub fn random_invertible<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let q1 = random_orthogonal(rng, dim);
    let q2 = random_orthogonal(rng, dim);
    let s = DVector::from_fn(dim, |_, _| rng.gen_range(0.5_f64..2.0));
    q1 * DMatrix::from_diagonal(&s) * q2
}

fn random_orthogonal<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0_f64..1.0));
        let qr = g.qr();
        let r = qr.r();
        if (0..dim).all(|i| r[(i, i)].abs() > 1e-6) {
            return qr.q();
        }
    }
}

/// Direct sum `A ⊕ B`.
pub fn block_diag(a: &SpdMatrix, b: &SpdMatrix) -> SpdMatrix {
    let (p, q) = (a.dim(), b.dim());
    let mut m = DMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a.as_matrix());
    m.view_mut((p, p), (q, q)).copy_from(b.as_matrix());
    SpdMatrix(m)
}
