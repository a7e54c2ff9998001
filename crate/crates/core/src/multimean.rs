//! Multivariate means: weighted arithmetic and harmonic means, the Karcher
//! mean, power means, deformed means `M_{(σ₁,…,σₙ)}` and adjoints.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix_mean::{upper_start, BoundMean, MatrixSolveConfig, SolveReport, Start};
use crate::repfun::{derivative_at_one, rep_of, MeanSpec};
use crate::spd::{check_dims, thompson_dist, HalfPowers, SpdMatrix};

/// A probability weight vector of length at least 2.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::Parameter(format!(
                "a weight vector needs at least 2 entries, got {}",
                w.len()
            )));
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Parameter("weights must be nonnegative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector(w))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter("need at least 2 weights".into()));
        }
        WeightVector::new(vec![1.0 / n as f64; n]).or_else(|_| {
            let mut w = vec![1.0 / n as f64; n];
            let rest: f64 = w[1..].iter().sum();
            w[0] = 1.0 - rest;
            WeightVector::new(w)
        })
    }

    /// Normalizes a nonnegative vector with positive sum.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::Parameter("weights have no positive mass".into()));
        }
        let mut w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        // absorb rounding so the sum is 1 to within an ulp or two
        let last = w.len() - 1;
        let head: f64 = w[..last].iter().sum();
        if (1.0 - head) >= 0.0 {
            w[last] = 1.0 - head;
        }
        WeightVector::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        WeightVector(perm.iter().map(|&i| self.0[i]).collect())
    }
}

/// Weight vector derived from `w` and per-coordinate parameters.
pub type HatWeight = WeightVector;

#[derive(Clone, Debug, PartialEq)]
pub enum MultiMeanSpec {
    /// `𝒜_w`.
    Arithmetic(WeightVector),
    /// `ℋ_w`.
    Harmonic(WeightVector),
    /// `G_w`, the solution of the Karcher equation.
    Karcher(WeightVector),
    /// `P_{w,r}`, `r ∈ [−1, 1] \ {0}`.
    Power { w: WeightVector, r: f64 },
    /// `M_{(σ₁,…,σₙ)}`.
    Deformed {
        base: Box<MultiMeanSpec>,
        sigmas: Vec<MeanSpec>,
    },
    /// `M*(A) = M(A⁻¹)⁻¹`.
    Adjoint(Box<MultiMeanSpec>),
}

impl fmt::Display for MultiMeanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiMeanSpec::Arithmetic(_) => write!(f, "arith"),
            MultiMeanSpec::Harmonic(_) => write!(f, "harm"),
            MultiMeanSpec::Karcher(_) => write!(f, "karcher"),
            MultiMeanSpec::Power { r, .. } => write!(f, "powmean:r={r}"),
            MultiMeanSpec::Deformed { base, sigmas } => {
                write!(f, "deform({base}")?;
                for s in sigmas {
                    write!(f, "; {s}")?;
                }
                write!(f, ")")
            }
            MultiMeanSpec::Adjoint(b) => write!(f, "adjoint({b})"),
        }
    }
}

impl MultiMeanSpec {
    pub fn deformed(base: MultiMeanSpec, sigmas: Vec<MeanSpec>) -> Self {
        MultiMeanSpec::Deformed {
            base: Box::new(base),
            sigmas,
        }
    }

    /// Weights of the innermost base mean.
    pub fn weights(&self) -> &WeightVector {
        match self {
            MultiMeanSpec::Arithmetic(w)
            | MultiMeanSpec::Harmonic(w)
            | MultiMeanSpec::Karcher(w)
            | MultiMeanSpec::Power { w, .. } => w,
            MultiMeanSpec::Deformed { base, .. } | MultiMeanSpec::Adjoint(base) => base.weights(),
        }
    }

    pub fn arity(&self) -> usize {
        self.weights().len()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MultiMeanSpec::Arithmetic(_)
            | MultiMeanSpec::Harmonic(_)
            | MultiMeanSpec::Karcher(_) => Ok(()),
            MultiMeanSpec::Power { r, .. } => {
                if *r == 0.0 || !(-1.0..=1.0).contains(r) {
                    Err(Error::Parameter(format!(
                        "r = {r} must lie in [-1, 1] \\ {{0}}"
                    )))
                } else {
                    Ok(())
                }
            }
            MultiMeanSpec::Deformed { base, sigmas } => {
                base.validate()?;
                if sigmas.len() != base.arity() {
                    return Err(Error::InvalidSpec(format!(
                        "{} deforming means for a mean of {} variables",
                        sigmas.len(),
                        base.arity()
                    )));
                }
                for s in sigmas {
                    s.validate()?;
                    if s.is_left() {
                        return Err(Error::InvalidSpec(
                            "a deforming mean must differ from the left trivial mean".into(),
                        ));
                    }
                }
                Ok(())
            }
            MultiMeanSpec::Adjoint(base) => base.validate(),
        }
    }

    /// Weight `w` for which `ℋ_w ≤ M ≤ 𝒜_w`.
    pub fn g_weight(&self) -> Result<WeightVector> {
        match self {
            MultiMeanSpec::Deformed { base, sigmas } => {
                let alphas = sigmas
                    .iter()
                    .map(|s| derivative_at_one(&rep_of(s)?))
                    .collect::<Result<Vec<_>>>()?;
                hat_weight_alpha(&base.g_weight()?, &alphas)
            }
            MultiMeanSpec::Adjoint(base) => base.g_weight(),
            other => Ok(other.weights().clone()),
        }
    }
}

fn check_inputs(spec: &MultiMeanSpec, a: &[SpdMatrix]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    if a.len() != spec.arity() {
        return Err(Error::DimensionMismatch {
            expected: spec.arity(),
            found: a.len(),
        });
    }
    for m in &a[1..] {
        check_dims(&a[0], m)?;
    }
    Ok(())
}

fn weighted_sum(w: &WeightVector, ms: &[SpdMatrix]) -> DMatrix<f64> {
    let d = ms[0].dim();
    let mut acc = DMatrix::zeros(d, d);
    for (wj, m) in w.as_slice().iter().zip(ms) {
        if *wj != 0.0 {
            acc += m.as_matrix() * *wj;
        }
    }
    acc
}

pub fn arithmetic(w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    SpdMatrix::from_computed(weighted_sum(w, a))
}

pub fn harmonic(w: &WeightVector, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    let inv = a
        .iter()
        .map(SpdMatrix::inverse)
        .collect::<Result<Vec<_>>>()?;
    SpdMatrix::from_computed(weighted_sum(w, &inv))?.inverse()
}

fn invert_all(a: &[SpdMatrix]) -> Result<Vec<SpdMatrix>> {
    a.iter().map(SpdMatrix::inverse).collect()
}

/// Evaluates a multivariate mean; iterative kinds report their residuals.
pub fn eval_multi(
    spec: &MultiMeanSpec,
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<(SpdMatrix, SolveReport)> {
    spec.validate()?;
    cfg.validate()?;
    check_inputs(spec, a)?;
    match spec {
        MultiMeanSpec::Arithmetic(w) => Ok((arithmetic(w, a)?, SolveReport::exact())),
        MultiMeanSpec::Harmonic(w) => Ok((harmonic(w, a)?, SolveReport::exact())),
        MultiMeanSpec::Karcher(w) => karcher(w, a, cfg),
        MultiMeanSpec::Power { w, r } => power_mean(w, *r, a, cfg),
        MultiMeanSpec::Deformed { base, sigmas } => deform_multi(base, sigmas, a, cfg),
        MultiMeanSpec::Adjoint(base) => {
            let (x, rep) = eval_multi(base, &invert_all(a)?, cfg)?;
            Ok((x.inverse()?, rep))
        }
    }
}

/// `Σ wⱼ log X^{-1/2} Aⱼ X^{-1/2}`.
fn karcher_gradient(hp: &HalfPowers, w: &WeightVector, a: &[SpdMatrix]) -> Result<DMatrix<f64>> {
    let d = a[0].dim();
    let mut s = DMatrix::zeros(d, d);
    for (wj, aj) in w.as_slice().iter().zip(a) {
        if *wj != 0.0 {
            let l = crate::spd::sym_fun_calc_with(&hp.whiten(aj), |x| {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(Error::Domain(x))
                }
            })?;
            s += l * *wj;
        }
    }
    Ok(s)
}

/// `‖Σ wⱼ log X^{-1/2} Aⱼ X^{-1/2}‖_F`.
pub fn karcher_residual(x: &SpdMatrix, w: &WeightVector, a: &[SpdMatrix]) -> Result<f64> {
    if a.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: a.len(),
        });
    }
    for m in a {
        check_dims(x, m)?;
    }
    Ok(karcher_gradient(&HalfPowers::of(x)?, w, a)?.norm())
}

fn karcher(
    w: &WeightVector,
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<(SpdMatrix, SolveReport)> {
    let mut x = arithmetic(w, a)?;
    let mut hp = HalfPowers::of(&x)?;
    let mut s = karcher_gradient(&hp, w, a)?;
    let mut res = s.norm();
    let mut theta = 1.0_f64;
    let mut iterations = 0;
    while res > cfg.tol {
        if iterations >= cfg.max_iter || theta < 1e-12 {
            return Ok((
                x,
                SolveReport {
                    iterations,
                    residual: res,
                    converged: false,
                },
            ));
        }
        iterations += 1;
        let step = crate::spd::sym_fun_calc(&(&s * theta), f64::exp)?;
        let cand = SpdMatrix::from_computed(hp.color(&step))?;
        let chp = HalfPowers::of(&cand)?;
        let cs = karcher_gradient(&chp, w, a)?;
        let cres = cs.norm();
        if cres < res {
            x = cand;
            hp = chp;
            s = cs;
            res = cres;
        } else {
            theta *= 0.5;
        }
    }
    Ok((
        x,
        SolveReport {
            iterations,
            residual: res,
            converged: true,
        },
    ))
}

/// `Σ wⱼ (X #_r Aⱼ)`.
fn power_map(x: &SpdMatrix, w: &WeightVector, r: f64, a: &[SpdMatrix]) -> Result<SpdMatrix> {
    let hp = HalfPowers::of(x)?;
    let d = x.dim();
    let mut acc = DMatrix::zeros(d, d);
    for (wj, aj) in w.as_slice().iter().zip(a) {
        if *wj != 0.0 {
            let inner = crate::spd::sym_fun_calc(&hp.whiten(aj), |t| t.powf(r))?;
            acc += inner * *wj;
        }
    }
    SpdMatrix::from_computed(hp.color(&acc))
}

fn power_mean(
    w: &WeightVector,
    r: f64,
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<(SpdMatrix, SolveReport)> {
    if r < 0.0 {
        let inv = invert_all(a)?;
        let (x, rep) = power_mean(w, -r, &inv, cfg)?;
        return Ok((x.inverse()?, rep));
    }
    let x0 = match cfg.start {
        Start::FromAbove => upper_start(&a.iter().collect::<Vec<_>>())?,
        Start::ArithmeticMean => arithmetic(w, a)?,
    };
    cfg.driver().solve(|x| power_map(x, w, r, a), x0)
}

/// Thompson residual of the defining equation of `P_{w,r}` at `X`.
pub fn power_residual(x: &SpdMatrix, w: &WeightVector, r: f64, a: &[SpdMatrix]) -> Result<f64> {
    if r < 0.0 {
        let inv = invert_all(a)?;
        return power_residual(&x.inverse()?, w, -r, &inv);
    }
    thompson_dist(x, &power_map(x, w, r, a)?)
}

/// Solves `X = M(X σ₁ A₁, …, X σₙ Aₙ)`.
pub fn deform_multi(
    base: &MultiMeanSpec,
    sigmas: &[MeanSpec],
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<(SpdMatrix, SolveReport)> {
    let spec = MultiMeanSpec::deformed(base.clone(), sigmas.to_vec());
    spec.validate()?;
    cfg.validate()?;
    check_inputs(&spec, a)?;
    let bound = sigmas
        .iter()
        .map(BoundMean::new)
        .collect::<Result<Vec<_>>>()?;
    let inner = cfg.inner();
    let map = |x: &SpdMatrix| -> Result<SpdMatrix> {
        let args = bound
            .iter()
            .zip(a)
            .map(|(s, aj)| s.apply(x, aj))
            .collect::<Result<Vec<_>>>()?;
        let (y, rep) = eval_multi(base, &args, &inner)?;
        rep.ok()?;
        Ok(y)
    };
    let x0 = match cfg.start {
        Start::FromAbove => upper_start(&a.iter().collect::<Vec<_>>())?,
        Start::ArithmeticMean => arithmetic(base.weights(), a)?,
    };
    cfg.driver().solve(map, x0)
}

/// `d_T(X, M(X σ₁ A₁, …, X σₙ Aₙ))`.
pub fn deform_residual(
    base: &MultiMeanSpec,
    sigmas: &[MeanSpec],
    a: &[SpdMatrix],
    x: &SpdMatrix,
    cfg: &MatrixSolveConfig,
) -> Result<f64> {
    let args = sigmas
        .iter()
        .zip(a)
        .map(|(s, aj)| BoundMean::new(s)?.apply(x, aj))
        .collect::<Result<Vec<_>>>()?;
    let (y, rep) = eval_multi(base, &args, &cfg.inner())?;
    rep.ok()?;
    thompson_dist(x, &y)
}

/// Residual of the defining equation of `spec` at `X`. Closed forms are
/// compared with their direct evaluation.
pub fn residual(
    spec: &MultiMeanSpec,
    a: &[SpdMatrix],
    x: &SpdMatrix,
    cfg: &MatrixSolveConfig,
) -> Result<f64> {
    match spec {
        MultiMeanSpec::Karcher(w) => karcher_residual(x, w, a),
        MultiMeanSpec::Power { w, r } => power_residual(x, w, *r, a),
        MultiMeanSpec::Deformed { base, sigmas } => deform_residual(base, sigmas, a, x, cfg),
        MultiMeanSpec::Adjoint(base) => residual(base, &invert_all(a)?, &x.inverse()?, cfg),
        MultiMeanSpec::Arithmetic(_) | MultiMeanSpec::Harmonic(_) => {
            thompson_dist(x, &eval_multi(spec, a, cfg)?.0)
        }
    }
}

/// `M*`; the adjoint of an adjoint is the original spec.
pub fn adjoint_multi(spec: &MultiMeanSpec) -> MultiMeanSpec {
    match spec {
        MultiMeanSpec::Adjoint(inner) => (**inner).clone(),
        other => MultiMeanSpec::Adjoint(Box::new(other.clone())),
    }
}

/// `ŵⱼ ∝ wⱼ αⱼ`.
pub fn hat_weight_alpha(w: &WeightVector, alphas: &[f64]) -> Result<HatWeight> {
    if alphas.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: alphas.len(),
        });
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Parameter("alphas must lie in [0, 1]".into()));
    }
    let raw: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(alphas)
        .map(|(w, a)| w * a)
        .collect();
    if raw.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Parameter("all products w_j alpha_j vanish".into()));
    }
    if alphas.iter().all(|a| *a == alphas[0]) {
        return Ok(w.clone());
    }
    WeightVector::normalized(raw)
}

/// `ŵⱼ ∝ wⱼ / |rⱼ|` for `rⱼ` all positive or all negative.
pub fn hat_weight_r(w: &WeightVector, rs: &[f64]) -> Result<HatWeight> {
    if rs.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: rs.len(),
        });
    }
    let all_pos = rs.iter().all(|r| *r > 0.0 && *r <= 1.0);
    let all_neg = rs.iter().all(|r| *r < 0.0 && *r >= -1.0);
    if !(all_pos || all_neg) {
        return Err(Error::Parameter(
            "exponents must be all in (0, 1] or all in [-1, 0)".into(),
        ));
    }
    if rs.iter().all(|r| *r == rs[0]) {
        return Ok(w.clone());
    }
    WeightVector::normalized(
        w.as_slice()
            .iter()
            .zip(rs)
            .map(|(w, r)| w / r.abs())
            .collect(),
    )
}

/// Limit of `M_{(𝔭_{s,r₁},…,𝔭_{s,rₙ})}` as `s → 0` for a base with
/// sandwich weight `w`.
pub fn boundary_limit(w: &WeightVector, rs: &[f64]) -> Result<MultiMeanSpec> {
    if rs.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: rs.len(),
        });
    }
    if rs.iter().all(|r| *r == 0.0) {
        return Ok(MultiMeanSpec::Karcher(w.clone()));
    }
    let hat = hat_weight_r(w, rs)?;
    let sigmas = rs.iter().map(|r| MeanSpec::Geometric(r.abs())).collect();
    let base = if rs[0] > 0.0 {
        MultiMeanSpec::Arithmetic(hat)
    } else {
        MultiMeanSpec::Harmonic(hat)
    };
    Ok(MultiMeanSpec::deformed(base, sigmas))
}

/// `M_{s,r}`: `M_{𝔭_{s,r}}` for `s > 0`, `P_{w,r}` at `s = 0, r ≠ 0`, and
/// `G_w` at `s = r = 0`, with `w` the sandwich weight of `base`.
pub fn m_family(
    base: &MultiMeanSpec,
    s: f64,
    r: f64,
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<SpdMatrix> {
    MeanSpec::power(s, r).validate()?;
    let spec = if s == 0.0 {
        let w = base.g_weight()?;
        if r == 0.0 {
            MultiMeanSpec::Karcher(w)
        } else {
            MultiMeanSpec::Power { w, r }
        }
    } else if s == 1.0 {
        base.clone()
    } else {
        MultiMeanSpec::deformed(base.clone(), vec![MeanSpec::power(s, r); base.arity()])
    };
    let (x, rep) = eval_multi(&spec, a, cfg)?;
    rep.ok()?;
    Ok(x)
}

/// Positive root of `x³ + (e₁/3)x² − (e₂/3)x − e₃ = 0` by bisection, where
/// `eₖ` are the elementary symmetric polynomials of `(a₁, a₂, a₃)`.
pub fn cubic_root(a1: f64, a2: f64, a3: f64) -> f64 {
    let e1 = a1 + a2 + a3;
    let e2 = a1 * a2 + a2 * a3 + a3 * a1;
    let e3 = a1 * a2 * a3;
    let p = |x: f64| ((x + e1 / 3.0) * x - e2 / 3.0) * x - e3;
    // p(0) < 0 and p(max aᵢ) ≥ 0
    let (mut lo, mut hi) = (0.0, a1.max(a2).max(a3));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(ℋ_∇ on 1×1 matrices, positive cubic root)` for uniform weights.
pub fn cubic_check(a1: f64, a2: f64, a3: f64) -> Result<(f64, f64)> {
    if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) {
        return Err(Error::Parameter(
            "cubic check needs positive scalars".into(),
        ));
    }
    let spec = MultiMeanSpec::deformed(
        MultiMeanSpec::Harmonic(WeightVector::uniform(3)?),
        vec![MeanSpec::Arithmetic(0.5); 3],
    );
    let a = [a1, a2, a3]
        .iter()
        .map(|&v| SpdMatrix::diag(&[v]))
        .collect::<Result<Vec<_>>>()?;
    let cfg = MatrixSolveConfig::with_tol(1e-14);
    let (x, rep) = eval_multi(&spec, &a, &cfg)?;
    rep.ok()?;
    Ok((x.as_matrix()[(0, 0)], cubic_root(a1, a2, a3)))
}
