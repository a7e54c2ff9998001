//! Representing functions of operator means and the mean catalog.
//!
//! A mean `σ` acts on SPD pairs through its representing function `f`:
//! `A σ B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`. Functions live on
//! `(0, ∞)`; `f(0)` is never evaluated.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::deform;
use crate::error::{Error, Result};

type EvalFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// Step for the central difference at `t = 1`.
pub const DERIVATIVE_STEP: f64 = 1e-6;

/// A scalar representing function with an optional analytic `f'(1)`.
#[derive(Clone)]
pub struct RepFunction {
    eval: Arc<EvalFn>,
    name: String,
    alpha: Option<f64>,
}

impl fmt::Debug for RepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepFunction")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl RepFunction {
    pub fn new(
        name: impl Into<String>,
        alpha: Option<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        RepFunction {
            eval: Arc::new(move |t| Ok(f(t))),
            name: name.into(),
            alpha,
        }
    }

    pub fn fallible(
        name: impl Into<String>,
        alpha: Option<f64>,
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        RepFunction {
            eval: Arc::new(f),
            name: name.into(),
            alpha,
        }
    }

    /// `f(t)` for `t > 0`; a non-finite or non-positive value is a domain error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(t));
        }
        let y = (self.eval)(t)?;
        if y.is_finite() && y > 0.0 {
            Ok(y)
        } else {
            Err(Error::Domain(t))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same function with the analytic derivative at 1 forgotten.
    pub fn without_alpha(mut self) -> Self {
        self.alpha = None;
        self
    }

    /// True when `f` is numerically the constant 1 (the left trivial mean).
    pub fn looks_left(&self) -> bool {
        let probe = |t: f64| {
            self.eval(t)
                .map(|y| (y - 1.0).abs() < 1e-14)
                .unwrap_or(false)
        };
        probe(2.0) && probe(0.5)
    }
}

/// Catalog of binary means.
#[derive(Clone, Debug)]
pub enum MeanSpec {
    /// `𝔩`: `A 𝔩 B = A`.
    Left,
    /// `𝔯`: `A 𝔯 B = B`.
    Right,
    /// `∇_α`.
    Arithmetic(f64),
    /// `#_α`.
    Geometric(f64),
    /// `!_α`.
    Harmonic(f64),
    /// `𝔭_{s,r}`; `r = 0` means `#_s`.
    Power {
        s: f64,
        r: f64,
    },
    /// Power difference mean `σ_q`, `q ∈ [−1, 2] \ {0, 1}`.
    PowerDifference(f64),
    /// Fujii–Kamei dyadic family member `m_{k/2^level}` built from a symmetric base.
    Dyadic {
        base: Box<MeanSpec>,
        k: u64,
        level: u32,
    },
    /// `τ_σ`.
    Deformed {
        tau: Box<MeanSpec>,
        sigma: Box<MeanSpec>,
    },
    Custom(RepFunction),
}

impl PartialEq for MeanSpec {
    fn eq(&self, other: &Self) -> bool {
        use MeanSpec::*;
        match (self, other) {
            (Left, Left) | (Right, Right) => true,
            (Arithmetic(a), Arithmetic(b))
            | (Geometric(a), Geometric(b))
            | (Harmonic(a), Harmonic(b))
            | (PowerDifference(a), PowerDifference(b)) => a == b,
            (Power { s: s1, r: r1 }, Power { s: s2, r: r2 }) => s1 == s2 && r1 == r2,
            (
                Dyadic {
                    base: b1,
                    k: k1,
                    level: l1,
                },
                Dyadic {
                    base: b2,
                    k: k2,
                    level: l2,
                },
            ) => b1 == b2 && k1 == k2 && l1 == l2,
            (Deformed { tau: t1, sigma: s1 }, Deformed { tau: t2, sigma: s2 }) => {
                t1 == t2 && s1 == s2
            }
            (Custom(f), Custom(g)) => Arc::ptr_eq(&f.eval, &g.eval),
            _ => false,
        }
    }
}

impl fmt::Display for MeanSpec {
    /// Canonical textual form, parsed back by [`crate::grammar::parse_mean`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanSpec::Left => write!(f, "left"),
            MeanSpec::Right => write!(f, "right"),
            MeanSpec::Arithmetic(a) => write!(f, "arith:{a}"),
            MeanSpec::Geometric(a) => write!(f, "geom:{a}"),
            MeanSpec::Harmonic(a) => write!(f, "harm:{a}"),
            MeanSpec::Power { s, r } => write!(f, "pow:{s},{r}"),
            MeanSpec::PowerDifference(q) => write!(f, "pdiff:{q}"),
            MeanSpec::Dyadic { base, k, level } => {
                write!(f, "dyadic({base}; {k}/{})", 1u64 << level)
            }
            MeanSpec::Deformed { tau, sigma } => write!(f, "deform({tau}; {sigma})"),
            MeanSpec::Custom(r) => write!(f, "custom:{}", r.name()),
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must lie in [0, 1]")))
    }
}

impl MeanSpec {
    pub fn deformed(tau: MeanSpec, sigma: MeanSpec) -> MeanSpec {
        MeanSpec::Deformed {
            tau: Box::new(tau),
            sigma: Box::new(sigma),
        }
    }

    pub fn power(s: f64, r: f64) -> MeanSpec {
        MeanSpec::Power { s, r }
    }

    pub fn is_left(&self) -> bool {
        match self {
            MeanSpec::Left => true,
            MeanSpec::Arithmetic(a) | MeanSpec::Geometric(a) | MeanSpec::Harmonic(a) => *a == 0.0,
            MeanSpec::Power { s, .. } => *s == 0.0,
            MeanSpec::Dyadic { k, .. } => *k == 0,
            MeanSpec::Deformed { tau, .. } => tau.is_left(),
            MeanSpec::Custom(f) => f.looks_left(),
            _ => false,
        }
    }

    /// Checks parameter ranges recursively.
    pub fn validate(&self) -> Result<()> {
        match self {
            MeanSpec::Left | MeanSpec::Right | MeanSpec::Custom(_) => Ok(()),
            MeanSpec::Arithmetic(a) | MeanSpec::Geometric(a) | MeanSpec::Harmonic(a) => {
                check_unit("alpha", *a)
            }
            MeanSpec::Power { s, r } => {
                check_unit("s", *s)?;
                if (-1.0..=1.0).contains(r) {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("r = {r} must lie in [-1, 1]")))
                }
            }
            MeanSpec::PowerDifference(q) => {
                if !(-1.0..=2.0).contains(q) {
                    return Err(Error::Parameter(format!("q = {q} must lie in [-1, 2]")));
                }
                if q.abs() < 1e-9 || (q - 1.0).abs() < 1e-9 {
                    return Err(Error::Parameter(format!(
                        "q = {q} is a removable-singularity case and is not provided"
                    )));
                }
                Ok(())
            }
            MeanSpec::Dyadic { base, k, level } => {
                if *level > 20 {
                    return Err(Error::Parameter(format!("dyadic level {level} exceeds 20")));
                }
                if *k > 1u64 << level {
                    return Err(Error::Parameter(format!(
                        "dyadic numerator {k} exceeds 2^{level}"
                    )));
                }
                base.validate()
            }
            MeanSpec::Deformed { tau, sigma } => {
                tau.validate()?;
                sigma.validate()?;
                if sigma.is_left() {
                    return Err(Error::InvalidSpec(
                        "a deforming mean must differ from the left trivial mean".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Spec of the transpose `τ'`, in closed form where the catalog allows.
    pub fn transpose_spec(&self) -> Result<MeanSpec> {
        Ok(match self {
            MeanSpec::Left => MeanSpec::Right,
            MeanSpec::Right => MeanSpec::Left,
            MeanSpec::Arithmetic(a) => MeanSpec::Arithmetic(1.0 - a),
            MeanSpec::Geometric(a) => MeanSpec::Geometric(1.0 - a),
            MeanSpec::Harmonic(a) => MeanSpec::Harmonic(1.0 - a),
            MeanSpec::Power { s, r } => MeanSpec::Power { s: 1.0 - s, r: *r },
            MeanSpec::PowerDifference(q) => MeanSpec::PowerDifference(*q),
            other => MeanSpec::Custom(transpose(&rep_of(other)?)),
        })
    }

    /// Spec of the adjoint `τ*`.
    pub fn adjoint_spec(&self) -> Result<MeanSpec> {
        Ok(match self {
            MeanSpec::Left => MeanSpec::Left,
            MeanSpec::Right => MeanSpec::Right,
            MeanSpec::Arithmetic(a) => MeanSpec::Harmonic(*a),
            MeanSpec::Geometric(a) => MeanSpec::Geometric(*a),
            MeanSpec::Harmonic(a) => MeanSpec::Arithmetic(*a),
            MeanSpec::Power { s, r } => MeanSpec::Power { s: *s, r: -r },
            other => MeanSpec::Custom(adjoint(&rep_of(other)?)),
        })
    }

    /// Spec of the dual `τ⊥`.
    pub fn dual_spec(&self) -> Result<MeanSpec> {
        self.transpose_spec()?.adjoint_spec()
    }
}

/// `(1 − s + s t^r)^{1/r}`, evaluated through `ln1p`/`expm1` so that small
/// `r` and `t` near 1 keep full relative precision.
pub fn power_mean_value(s: f64, r: f64, t: f64) -> f64 {
    let u = t.ln();
    if r == 0.0 {
        return (s * u).exp();
    }
    ((s * (r * u).exp_m1()).ln_1p() / r).exp()
}

/// `((q−1)/q) · (1 − t^q) / (1 − t^{q−1})`, continuous at `t = 1`.
pub fn power_difference_value(q: f64, t: f64) -> f64 {
    let u = t.ln();
    if u == 0.0 {
        return 1.0;
    }
    ((q - 1.0) / q) * (q * u).exp_m1() / ((q - 1.0) * u).exp_m1()
}

/// Closed-form representing function of a catalog entry.
pub fn rep_of(spec: &MeanSpec) -> Result<RepFunction> {
    spec.validate()?;
    let name = spec.to_string();
    Ok(match *spec {
        MeanSpec::Left => RepFunction::new(name, Some(0.0), |_| 1.0),
        MeanSpec::Right => RepFunction::new(name, Some(1.0), |t| t),
        MeanSpec::Arithmetic(a) => RepFunction::new(name, Some(a), move |t| (1.0 - a) + a * t),
        MeanSpec::Geometric(a) => RepFunction::new(name, Some(a), move |t| t.powf(a)),
        MeanSpec::Harmonic(a) => {
            RepFunction::new(name, Some(a), move |t| 1.0 / ((1.0 - a) + a / t))
        }
        MeanSpec::Power { s, r } => {
            RepFunction::new(name, Some(s), move |t| power_mean_value(s, r, t))
        }
        MeanSpec::PowerDifference(q) => {
            RepFunction::new(name, Some(0.5), move |t| power_difference_value(q, t))
        }
        MeanSpec::Dyadic { ref base, k, level } => dyadic_family_exact(base, k, level)?,
        MeanSpec::Deformed { ref tau, ref sigma } => deform::deformed_rep(tau, sigma)?,
        MeanSpec::Custom(ref f) => f.clone(),
    })
}

/// Scalar mean `x σ t = x · f(t / x)`.
pub fn scalar_mean(f: &RepFunction, x: f64, t: f64) -> Result<f64> {
    Ok(x * f.eval(t / x)?)
}

/// Transpose: `t · f(1/t)`.
pub fn transpose(f: &RepFunction) -> RepFunction {
    let g = f.clone();
    RepFunction::fallible(
        format!("transpose({})", f.name()),
        f.alpha().map(|a| 1.0 - a),
        move |t| Ok(t * g.eval(1.0 / t)?),
    )
}

/// Adjoint: `f(1/t)⁻¹`.
pub fn adjoint(f: &RepFunction) -> RepFunction {
    let g = f.clone();
    RepFunction::fallible(format!("adjoint({})", f.name()), f.alpha(), move |t| {
        Ok(1.0 / g.eval(1.0 / t)?)
    })
}

/// Dual: `t / f(t)`.
pub fn dual(f: &RepFunction) -> RepFunction {
    let g = f.clone();
    RepFunction::fallible(
        format!("dual({})", f.name()),
        f.alpha().map(|a| 1.0 - a),
        move |t| Ok(t / g.eval(t)?),
    )
}

/// Central difference at 1, clamped to `[0, 1]`.
pub fn numeric_derivative_at_one(f: &RepFunction) -> Result<f64> {
    let h = DERIVATIVE_STEP;
    let d = (f.eval(1.0 + h)? - f.eval(1.0 - h)?) / (2.0 * h);
    Ok(d.clamp(0.0, 1.0))
}

/// `f'(1)`: the stored analytic value, else a central difference.
pub fn derivative_at_one(f: &RepFunction) -> Result<f64> {
    match f.alpha() {
        Some(a) => Ok(a),
        None => numeric_derivative_at_one(f),
    }
}

/// Which necessary condition an evaluation failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OmCheck {
    Normalization,
    Monotonicity,
    MinMaxBound,
    AlphaBound,
    DerivativeBound,
    Evaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmViolation {
    pub check: OmCheck,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

/// Result of the operator-monotonicity screen.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OmReport {
    pub alpha: f64,
    pub violations: Vec<OmViolation>,
}

impl OmReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, check: OmCheck) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

/// Screens `f` against necessary conditions for membership in the operator
/// monotone class: `f(1) = 1`, monotonicity along the grid, the min/max
/// bound, the `α`-bound `t/((1−α)t+α) ≤ f(t) ≤ (1−α)+αt` with `α = f'(1)`,
/// and the derivative bound `f'(t) ≤ max{1, 1/(2t)}`.
///
/// Passing the screen does not prove operator monotonicity.
pub fn check_om_surrogates(f: &RepFunction, grid: &[f64]) -> OmReport {
    let mut report = OmReport::default();
    let mut push = |check, t, value, bound| {
        report.violations.push(OmViolation {
            check,
            t,
            value,
            bound,
        })
    };

    match f.eval(1.0) {
        Ok(v) if (v - 1.0).abs() <= 1e-12 => {}
        Ok(v) => push(OmCheck::Normalization, 1.0, v, 1.0),
        Err(_) => push(OmCheck::Evaluation, 1.0, f64::NAN, 1.0),
    }
    let alpha = derivative_at_one(f).unwrap_or(f64::NAN);

    let mut pts: Vec<f64> = grid.iter().copied().filter(|t| *t > 0.0).collect();
    pts.sort_by(f64::total_cmp);
    let mut prev: Option<(f64, f64)> = None;
    for &t in &pts {
        let v = match f.eval(t) {
            Ok(v) => v,
            Err(_) => {
                push(OmCheck::Evaluation, t, f64::NAN, f64::NAN);
                continue;
            }
        };
        let slack = 1e-12 * t.max(1.0);
        if let Some((_, pv)) = prev {
            if v < pv - slack {
                push(OmCheck::Monotonicity, t, v, pv);
            }
        }
        prev = Some((t, v));

        let (lo, hi) = (t.min(1.0), t.max(1.0));
        if v < lo - slack {
            push(OmCheck::MinMaxBound, t, v, lo);
        }
        if v > hi + slack {
            push(OmCheck::MinMaxBound, t, v, hi);
        }

        if alpha.is_finite() {
            let aslack = 1e-8 * t.max(1.0);
            let upper = (1.0 - alpha) + alpha * t;
            let lower = t / ((1.0 - alpha) * t + alpha);
            if v > upper + aslack {
                push(OmCheck::AlphaBound, t, v, upper);
            }
            if v < lower - aslack {
                push(OmCheck::AlphaBound, t, v, lower);
            }
        }

        let h = 1e-6 * t;
        if let (Ok(up), Ok(dn)) = (f.eval(t + h), f.eval(t - h)) {
            let d = (up - dn) / (2.0 * h);
            let bound = 1.0_f64.max(1.0 / (2.0 * t));
            if d > bound + 1e-6 {
                push(OmCheck::DerivativeBound, t, d, bound);
            }
        }
    }
    report.alpha = alpha;
    report
}

fn is_symmetric_on(f: &RepFunction, grid: &[f64]) -> Result<bool> {
    for &t in grid {
        let lhs = f.eval(t)?;
        let rhs = t * f.eval(1.0 / t)?;
        if (lhs - rhs).abs() > 1e-10 * t.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Writes a dyadic rational `α ∈ [0, 1]` as `k / 2^level` in lowest terms,
/// with `level ≤ 20`.
pub fn dyadic_parts(alpha: f64) -> Result<(u64, u32)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "alpha = {alpha} must lie in [0, 1]"
        )));
    }
    let scaled = alpha * f64::from(1u32 << 20);
    if scaled.fract() != 0.0 {
        return Err(Error::Parameter(format!(
            "alpha = {alpha} is not a dyadic rational with denominator at most 2^20"
        )));
    }
    let mut k = scaled as u64;
    let mut level = 20u32;
    while level > 0 && k.is_multiple_of(2) {
        k /= 2;
        level -= 1;
    }
    Ok((k, level))
}

/// Fujii–Kamei regular family `m_α` from a symmetric mean `σ`, at dyadic `α`.
pub fn dyadic_family(sigma: &MeanSpec, alpha: f64) -> Result<RepFunction> {
    let (k, level) = dyadic_parts(alpha)?;
    dyadic_family_exact(sigma, k, level)
}

fn dyadic_family_exact(sigma: &MeanSpec, k: u64, level: u32) -> Result<RepFunction> {
    if level > 20 || k > 1u64 << level {
        return Err(Error::Parameter(format!("{k}/2^{level} is not in [0, 1]")));
    }
    let base = rep_of(sigma)?;
    if !is_symmetric_on(&base, &crate::GRID)? {
        return Err(Error::InvalidSpec(format!(
            "dyadic family needs a symmetric base mean, {} is not",
            base.name()
        )));
    }
    let alpha = k as f64 / (1u64 << level) as f64;
    let name = format!("dyadic({}; {k}/{})", base.name(), 1u64 << level);
    Ok(RepFunction::fallible(name, Some(alpha), move |t| {
        let mut memo = HashMap::new();
        dyadic_value(&base, k, level, t, &mut memo)
    }))
}

fn dyadic_value(
    base: &RepFunction,
    k: u64,
    level: u32,
    t: f64,
    memo: &mut HashMap<(u64, u32), f64>,
) -> Result<f64> {
    let (mut k, mut level) = (k, level);
    while level > 0 && k.is_multiple_of(2) {
        k /= 2;
        level -= 1;
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k == 1u64 << level {
        return Ok(t);
    }
    if let Some(v) = memo.get(&(k, level)) {
        return Ok(*v);
    }
    // k odd: m_{k/2^l} = m_{(k-1)/2^l} σ m_{(k+1)/2^l}
    let lo = dyadic_value(base, k - 1, level, t, memo)?;
    let hi = dyadic_value(base, k + 1, level, t, memo)?;
    let v = scalar_mean(base, lo, hi)?;
    memo.insert((k, level), v);
    Ok(v)
}
