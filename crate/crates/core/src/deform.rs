//! Scalar deformation: the representing function of `τ_σ`.
//!
//! `f_{τ_σ}(t)` is the unique `x > 0` with `x = (x σ 1) τ (x σ t)`. The
//! map `x ↦ (x σ 1) τ (x σ t)` is a strict contraction for the log-scale
//! metric, and Picard iteration started at `max{1, t}` decreases
//! monotonically to the fixed point. When contraction is slow (for example
//! `σ = 𝔭_{s,r}` with small `s`) the solver switches to bisection on
//! `g(x) = log F(x) − log x`, which is strictly decreasing.

use crate::error::{Error, Result};
use crate::repfun::{self, derivative_at_one, rep_of, MeanSpec, RepFunction};

/// Tolerances for the scalar fixed-point solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarSolveConfig {
    /// Tolerance in log scale.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ScalarSolveConfig {
    fn default() -> Self {
        ScalarSolveConfig {
            tol: 1e-13,
            max_iter: 200,
        }
    }
}

impl ScalarSolveConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = ScalarSolveConfig { tol, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(Error::Parameter(format!(
                "scalar tolerance {} must lie in (0, 1e-6]",
                self.tol
            )));
        }
        if self.max_iter < 10 {
            return Err(Error::Parameter(format!(
                "max_iter {} must be at least 10",
                self.max_iter
            )));
        }
        Ok(())
    }
}

/// Estimated contraction above which Picard gives way to bisection.
const SLOW_CONTRACTION: f64 = 0.95;
/// Steps this small are at the rounding floor of `ln`.
const STEP_FLOOR: f64 = 4.0 * f64::EPSILON;

struct PairMap<'a> {
    tau: &'a RepFunction,
    s1: &'a RepFunction,
    s2: &'a RepFunction,
    t: f64,
}

impl PairMap<'_> {
    /// `(x σ₁ 1) τ (x σ₂ t)`.
    fn apply(&self, x: f64) -> Result<f64> {
        let a = x * self.s1.eval(1.0 / x)?;
        let b = x * self.s2.eval(self.t / x)?;
        repfun::scalar_mean(self.tau, a, b)
    }

    fn log_gap(&self, u: f64) -> Result<f64> {
        let x = u.exp();
        Ok(self.apply(x)?.ln() - u)
    }
}

fn check_sigma(f: &RepFunction) -> Result<()> {
    if f.looks_left() {
        Err(Error::InvalidSpec(format!(
            "deforming mean {} is numerically the left trivial mean",
            f.name()
        )))
    } else {
        Ok(())
    }
}

/// Solves `x = (x σ 1) τ (x σ t)`.
pub fn solve_f_deformed(
    f_tau: &RepFunction,
    f_sigma: &RepFunction,
    t: f64,
    cfg: &ScalarSolveConfig,
) -> Result<f64> {
    solve_f_deformed_pair(f_tau, f_sigma, f_sigma, t, cfg)
}

/// Solves `x = (x σ₁ 1) τ (x σ₂ t)`.
pub fn solve_f_deformed_pair(
    f_tau: &RepFunction,
    f_sigma1: &RepFunction,
    f_sigma2: &RepFunction,
    t: f64,
    cfg: &ScalarSolveConfig,
) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(t));
    }
    check_sigma(f_sigma1)?;
    check_sigma(f_sigma2)?;
    if t == 1.0 {
        return Ok(1.0);
    }
    let map = PairMap {
        tau: f_tau,
        s1: f_sigma1,
        s2: f_sigma2,
        t,
    };
    let tol = cfg.tol;
    let mut x = t.max(1.0);
    let mut prev_step: Option<f64> = None;
    for k in 0..cfg.max_iter {
        let fx = map.apply(x)?;
        let step = (fx / x).ln().abs();
        if step <= STEP_FLOOR {
            return Ok(fx);
        }
        let q = prev_step.map(|p| if p > 0.0 { step / p } else { 0.0 });
        if step <= tol {
            match q {
                Some(q) if q < 1.0 && step * q / (1.0 - q) > tol => {}
                _ => return Ok(fx),
            }
        }
        x = fx;
        if k >= 10 && q.is_some_and(|q| q > SLOW_CONTRACTION) {
            break;
        }
        prev_step = Some(step);
    }
    bisect(&map, x, cfg)
}

fn bisect(map: &PairMap<'_>, upper: f64, cfg: &ScalarSolveConfig) -> Result<f64> {
    let t = map.t;
    let mut lo = t.min(1.0).ln();
    let mut hi = t.max(1.0).ln();
    let u = upper.ln();
    if u > lo && u < hi && map.log_gap(u)? <= 0.0 {
        hi = u;
    }
    // at width `tol` the midpoint is within `tol / 2` of the root
    let mut iterations = 0;
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = map.log_gap(mid)?;
        if g == 0.0 {
            return Ok(mid.exp());
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 400 {
            return Err(Error::NotConverged {
                iterations,
                residual: hi - lo,
            });
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// First `n` Picard iterates `x₀ = max{1,t}, x₁ = F(x₀), …` (for diagnostics).
pub fn picard_iterates(
    f_tau: &RepFunction,
    f_sigma: &RepFunction,
    t: f64,
    n: usize,
) -> Result<Vec<f64>> {
    check_sigma(f_sigma)?;
    let map = PairMap {
        tau: f_tau,
        s1: f_sigma,
        s2: f_sigma,
        t,
    };
    let mut out = Vec::with_capacity(n);
    let mut x = t.max(1.0);
    for _ in 0..n {
        out.push(x);
        x = map.apply(x)?;
    }
    Ok(out)
}

/// `|f_σ(1/x) · f_τ(f_σ(t/x)/f_σ(1/x)) − 1|`, the relative fixed-point defect at `x`.
pub fn fixed_point_defect(
    f_tau: &RepFunction,
    f_sigma: &RepFunction,
    t: f64,
    x: f64,
) -> Result<f64> {
    let a = f_sigma.eval(1.0 / x)?;
    let b = f_sigma.eval(t / x)?;
    Ok((a * f_tau.eval(b / a)? - 1.0).abs())
}

/// Representing function of `τ_σ` at the default tolerance.
pub fn deformed_rep(tau: &MeanSpec, sigma: &MeanSpec) -> Result<RepFunction> {
    deformed_rep_with(tau, sigma, &ScalarSolveConfig::default())
}

pub fn deformed_rep_with(
    tau: &MeanSpec,
    sigma: &MeanSpec,
    cfg: &ScalarSolveConfig,
) -> Result<RepFunction> {
    if sigma.is_left() {
        return Err(Error::InvalidSpec(
            "a deforming mean must differ from the left trivial mean".into(),
        ));
    }
    let ft = rep_of(tau)?;
    let fs = rep_of(sigma)?;
    deformed_from_reps(&ft, &fs, cfg)
}

/// `τ_σ` from representing functions directly.
pub fn deformed_from_reps(
    f_tau: &RepFunction,
    f_sigma: &RepFunction,
    cfg: &ScalarSolveConfig,
) -> Result<RepFunction> {
    cfg.validate()?;
    check_sigma(f_sigma)?;
    let (ft, fs, cfg) = (f_tau.clone(), f_sigma.clone(), *cfg);
    let name = format!("deform({}; {})", f_tau.name(), f_sigma.name());
    Ok(RepFunction::fallible(name, None, move |t| {
        solve_f_deformed(&ft, &fs, t, &cfg)
    }))
}

/// Representing function of the mean deformed by the pair `(σ₁, σ₂)`.
pub fn deformed_rep_pair(
    tau: &MeanSpec,
    sigma1: &MeanSpec,
    sigma2: &MeanSpec,
) -> Result<RepFunction> {
    let cfg = ScalarSolveConfig::default();
    let ft = rep_of(tau)?;
    let f1 = rep_of(sigma1)?;
    let f2 = rep_of(sigma2)?;
    check_sigma(&f1)?;
    check_sigma(&f2)?;
    let name = format!("deform({}; {}; {})", tau, sigma1, sigma2);
    Ok(RepFunction::fallible(name, None, move |t| {
        solve_f_deformed_pair(&ft, &f1, &f2, t, &cfg)
    }))
}

/// Closed form of `f_{#_{∇_s}}(t)`.
pub fn closed_form_geom_arith(s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Parameter(format!("s = {s} must lie in (0, 1]")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(t));
    }
    let a = (1.0 - s) * (1.0 + t);
    Ok((a + (a * a + 4.0 * s * (2.0 - s) * t).sqrt()) / (2.0 * (2.0 - s)))
}

/// Closed form of `f_{(!_α)_{∇_s}}(t)`.
pub fn closed_form_harm_arith(alpha: f64, s: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "alpha = {alpha} must lie in [0, 1]"
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("s = {s} must lie in (0, 1)")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(t));
    }
    let b = 1.0 - alpha - s + (alpha - s) * t;
    Ok((b + (b * b + 4.0 * s * (1.0 - s) * t).sqrt()) / (2.0 * (1.0 - s)))
}

/// A member `τ_{s,r}` of the two-parameter family.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformedFamilyPoint {
    pub s: f64,
    pub r: f64,
    pub tau: MeanSpec,
}

impl DeformedFamilyPoint {
    pub fn rep(&self) -> Result<RepFunction> {
        tau_family(&self.tau, self.s, self.r)
    }
}

/// `τ_{s,r} = τ_{𝔭_{s,r}}` for `s > 0`, and its boundary `𝔭_{α,r}` at `s = 0`
/// with `α = f_τ'(1)`.
pub fn tau_family(tau: &MeanSpec, s: f64, r: f64) -> Result<RepFunction> {
    MeanSpec::power(s, r).validate()?;
    if s == 1.0 {
        return rep_of(tau);
    }
    if s == 0.0 {
        let alpha = derivative_at_one(&rep_of(tau)?)?;
        return rep_of(&MeanSpec::power(alpha, r));
    }
    deformed_rep(tau, &MeanSpec::power(s, r))
}

/// Generalized power mean with representing function `f_τ(t^r)^{1/r}`.
///
/// For `r < 0` this is `(τ*)_{#_{|r|}}`, the same formula read through the adjoint.
pub fn generalized_power(tau: &MeanSpec, r: f64) -> Result<RepFunction> {
    if r == 0.0 || !(-1.0..=1.0).contains(&r) {
        return Err(Error::Parameter(format!(
            "r = {r} must lie in [-1, 1] \\ {{0}}"
        )));
    }
    let f = rep_of(tau)?;
    let alpha = f.alpha();
    let name = format!("genpow({}; {r})", f.name());
    Ok(RepFunction::fallible(name, alpha, move |t| {
        Ok(f.eval(t.powf(r))?.powf(1.0 / r))
    }))
}

/// `max_t |f_{σ_σ}(t) − f_σ(t)|` over the grid.
pub fn self_deformation_residual(sigma: &MeanSpec, grid: &[f64]) -> Result<f64> {
    let f = rep_of(sigma)?;
    let g = deformed_rep(sigma, sigma)?;
    let mut worst = 0.0_f64;
    for &t in grid {
        worst = worst.max((g.eval(t)? - f.eval(t)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repfun::{adjoint, numeric_derivative_at_one, transpose};
    use crate::GRID;
    use approx::assert_abs_diff_eq;

    fn rep(s: &MeanSpec) -> RepFunction {
        rep_of(s).unwrap()
    }

    fn solve(tau: &MeanSpec, sigma: &MeanSpec, t: f64) -> f64 {
        solve_f_deformed(&rep(tau), &rep(sigma), t, &ScalarSolveConfig::default()).unwrap()
    }

    fn catalog() -> Vec<MeanSpec> {
        vec![
            MeanSpec::Arithmetic(0.3),
            MeanSpec::Geometric(0.6),
            MeanSpec::Harmonic(0.5),
            MeanSpec::power(0.4, -0.5),
            MeanSpec::power(0.7, 0.5),
            MeanSpec::PowerDifference(1.5),
        ]
    }

    #[test]
    fn config_validation() {
        assert!(ScalarSolveConfig::new(1e-13, 200).is_ok());
        assert!(ScalarSolveConfig::new(1e-5, 200).is_err());
        assert!(ScalarSolveConfig::new(0.0, 200).is_err());
        assert!(ScalarSolveConfig::new(1e-10, 9).is_err());
    }

    #[test]
    fn solver_examples() {
        let x = solve(&MeanSpec::Arithmetic(0.5), &MeanSpec::Geometric(0.5), 4.0);
        assert_abs_diff_eq!(x, 2.25, epsilon = 1e-12);
        for tau in catalog() {
            for sigma in catalog() {
                assert_eq!(solve(&tau, &sigma, 1.0), 1.0);
            }
        }
        for t in GRID {
            let x = solve(&MeanSpec::Arithmetic(0.5), &MeanSpec::Harmonic(0.5), t);
            assert_abs_diff_eq!(x, t.sqrt(), epsilon = 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn rejects_left_sigma() {
        let left = rep(&MeanSpec::Left);
        let tau = rep(&MeanSpec::Arithmetic(0.5));
        let cfg = ScalarSolveConfig::default();
        assert!(solve_f_deformed(&tau, &left, 2.0, &cfg).is_err());
        assert!(deformed_rep(&MeanSpec::Right, &MeanSpec::Left).is_err());
        assert!(deformed_rep(&MeanSpec::Right, &MeanSpec::power(0.0, 0.5)).is_err());
    }

    #[test]
    fn fixed_point_defect_is_small() {
        for tau in catalog() {
            for sigma in catalog() {
                let (ft, fs) = (rep(&tau), rep(&sigma));
                for t in GRID {
                    let x = solve_f_deformed(&ft, &fs, t, &ScalarSolveConfig::default()).unwrap();
                    assert!(fixed_point_defect(&ft, &fs, t, x).unwrap() <= 1e-10);
                    assert!(x >= t.min(1.0) * (1.0 - 1e-14) && x <= t.max(1.0) * (1.0 + 1e-14));
                }
            }
        }
    }

    #[test]
    fn picard_from_above_is_monotone() {
        let ft = rep(&MeanSpec::Harmonic(0.3));
        let fs = rep(&MeanSpec::power(0.5, 0.5));
        for t in GRID {
            let xs = picard_iterates(&ft, &fs, t, 60).unwrap();
            for w in xs.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn slow_contraction_is_accurate() {
        // σ = 𝔭_{s,1} = ∇_s with tiny s contracts at rate about 1 − s
        for t in GRID {
            let x = solve(&MeanSpec::Geometric(0.5), &MeanSpec::Arithmetic(1e-4), t);
            let want = closed_form_geom_arith(1e-4, t).unwrap();
            assert_abs_diff_eq!(x, want, epsilon = 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn trivial_deformations() {
        for sigma in catalog() {
            let l = deformed_rep(&MeanSpec::Left, &sigma).unwrap();
            let r = deformed_rep(&MeanSpec::Right, &sigma).unwrap();
            for t in GRID {
                assert_abs_diff_eq!(l.eval(t).unwrap(), 1.0, epsilon = 1e-11);
                assert_abs_diff_eq!(r.eval(t).unwrap(), t, epsilon = 1e-11 * t.max(1.0));
            }
        }
        for tau in catalog() {
            let d = deformed_rep(&tau, &MeanSpec::Right).unwrap();
            let f = rep(&tau);
            for t in GRID {
                assert_abs_diff_eq!(
                    d.eval(t).unwrap(),
                    f.eval(t).unwrap(),
                    epsilon = 1e-12 * t.max(1.0)
                );
            }
        }
    }

    #[test]
    fn geometric_is_fixed_by_geometric() {
        for (a, b) in [(0.2, 0.5), (0.7, 0.25), (0.5, 1.0)] {
            let d = deformed_rep(&MeanSpec::Geometric(a), &MeanSpec::Geometric(b)).unwrap();
            for t in GRID {
                assert_abs_diff_eq!(d.eval(t).unwrap(), t.powf(a), epsilon = 1e-10 * t.max(1.0));
            }
        }
    }

    #[test]
    fn pair_deformation() {
        let sig = MeanSpec::Harmonic(0.4);
        let tau = MeanSpec::Geometric(0.3);
        let p = deformed_rep_pair(&tau, &sig, &sig).unwrap();
        let d = deformed_rep(&tau, &sig).unwrap();
        let r = deformed_rep_pair(
            &MeanSpec::Right,
            &MeanSpec::Arithmetic(0.5),
            &MeanSpec::Geometric(0.6),
        )
        .unwrap();
        let q = deformed_rep_pair(
            &MeanSpec::Arithmetic(0.5),
            &MeanSpec::Geometric(0.5),
            &MeanSpec::Right,
        )
        .unwrap();
        for t in GRID {
            assert_abs_diff_eq!(
                p.eval(t).unwrap(),
                d.eval(t).unwrap(),
                epsilon = 1e-13 * t.max(1.0)
            );
            assert_abs_diff_eq!(r.eval(t).unwrap(), t, epsilon = 1e-11 * t.max(1.0));
            // 2x − √x − t = 0, so √x = (1 + √(1 + 8t)) / 4
            let y = (1.0 + (1.0 + 8.0 * t).sqrt()) / 4.0;
            let x = q.eval(t).unwrap();
            assert_abs_diff_eq!(x, y * y, epsilon = 1e-11 * t.max(1.0));
            assert_abs_diff_eq!(2.0 * x - x.sqrt() - t, 0.0, epsilon = 1e-10 * t.max(1.0));
        }
    }

    #[test]
    fn closed_forms() {
        for t in GRID {
            assert_eq!(closed_form_geom_arith(0.5, 1.0).unwrap(), 1.0);
            assert_abs_diff_eq!(
                closed_form_geom_arith(1e-12, t).unwrap(),
                (1.0 + t) / 2.0,
                epsilon = 1e-10 * t.max(1.0)
            );
            assert_abs_diff_eq!(
                closed_form_harm_arith(0.3, 0.4, 1.0).unwrap(),
                1.0,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                closed_form_harm_arith(0.3, 1e-12, t).unwrap(),
                0.7 + 0.3 * t,
                epsilon = 1e-10 * t.max(1.0)
            );
            assert_abs_diff_eq!(
                closed_form_harm_arith(0.5, 0.5, t).unwrap(),
                t.sqrt(),
                epsilon = 1e-13 * t.max(1.0)
            );
        }
        assert_abs_diff_eq!(
            closed_form_geom_arith(1.0, 4.0).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(closed_form_geom_arith(0.0, 2.0).is_err());
        assert!(closed_form_harm_arith(0.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn tau_family_endpoints() {
        for tau in catalog() {
            let f = rep(&tau);
            let alpha = derivative_at_one(&f).unwrap();
            for r in [-1.0, -0.4, 0.0, 0.4, 1.0] {
                let one = tau_family(&tau, 1.0, r).unwrap();
                let zero = tau_family(&tau, 0.0, r).unwrap();
                let p = rep(&MeanSpec::power(alpha, r));
                for t in GRID {
                    assert_eq!(one.eval(t).unwrap(), f.eval(t).unwrap());
                    assert_eq!(zero.eval(t).unwrap(), p.eval(t).unwrap());
                }
            }
            let lin = tau_family(&tau, 0.0, 1.0).unwrap();
            assert_abs_diff_eq!(
                lin.eval(3.0).unwrap(),
                1.0 - alpha + 3.0 * alpha,
                epsilon = 1e-14
            );
        }
        let near = tau_family(&MeanSpec::Arithmetic(0.3), 1e-4, 0.0).unwrap();
        assert_abs_diff_eq!(near.eval(4.0).unwrap(), 4f64.powf(0.3), epsilon = 1e-2);
    }

    #[test]
    fn generalized_power_examples() {
        for (a, r) in [(0.3, 0.5), (0.8, 0.25), (0.5, 1.0)] {
            let g = generalized_power(&MeanSpec::Arithmetic(a), r).unwrap();
            let d = deformed_rep(&MeanSpec::Arithmetic(a), &MeanSpec::Geometric(r)).unwrap();
            for t in GRID {
                let want = (1.0 - a + a * t.powf(r)).powf(1.0 / r);
                assert_abs_diff_eq!(g.eval(t).unwrap(), want, epsilon = 1e-12 * t.max(1.0));
                assert_abs_diff_eq!(d.eval(t).unwrap(), want, epsilon = 1e-10 * t.max(1.0));
            }
        }
        for tau in catalog() {
            let f = rep(&tau);
            let one = generalized_power(&tau, 1.0).unwrap();
            let minus = generalized_power(&tau, -1.0).unwrap();
            let adj = adjoint(&f);
            let half_neg = generalized_power(&tau, -0.5).unwrap();
            let via_adj =
                deformed_rep(&tau.adjoint_spec().unwrap(), &MeanSpec::Geometric(0.5)).unwrap();
            for t in GRID {
                let tol = 1e-12 * t.max(1.0);
                assert_abs_diff_eq!(one.eval(t).unwrap(), f.eval(t).unwrap(), epsilon = tol);
                assert_abs_diff_eq!(minus.eval(t).unwrap(), adj.eval(t).unwrap(), epsilon = tol);
                assert_abs_diff_eq!(
                    half_neg.eval(t).unwrap(),
                    via_adj.eval(t).unwrap(),
                    epsilon = 1e-10 * t.max(1.0)
                );
            }
        }
        assert!(generalized_power(&MeanSpec::Arithmetic(0.5), 0.0).is_err());
    }

    #[test]
    fn self_deformation() {
        for r in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert!(self_deformation_residual(&MeanSpec::power(0.5, r), &GRID).unwrap() <= 1e-9);
        }
        assert!(self_deformation_residual(&MeanSpec::PowerDifference(2.0), &GRID).unwrap() <= 1e-9);
        let grid = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0];
        assert!(self_deformation_residual(&MeanSpec::PowerDifference(0.3), &grid).unwrap() > 1e-4);
    }

    #[test]
    fn derivative_preserved() {
        for tau in catalog() {
            for sigma in catalog() {
                let d = deformed_rep(&tau, &sigma).unwrap();
                assert!(d.alpha().is_none());
                let a = numeric_derivative_at_one(&d).unwrap();
                let b = derivative_at_one(&rep(&tau)).unwrap();
                assert!((a - b).abs() <= 1e-5, "{tau} by {sigma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn transpose_and_adjoint_commute_with_deformation() {
        for tau in catalog() {
            for sigma in catalog() {
                let d = deformed_rep(&tau, &sigma).unwrap();
                let dt = deformed_rep(&tau.transpose_spec().unwrap(), &sigma).unwrap();
                let da = deformed_rep(&tau.adjoint_spec().unwrap(), &sigma.adjoint_spec().unwrap())
                    .unwrap();
                let (td, ad) = (transpose(&d), adjoint(&d));
                for t in GRID {
                    let tol = 1e-10 * t.max(1.0);
                    assert_abs_diff_eq!(td.eval(t).unwrap(), dt.eval(t).unwrap(), epsilon = tol);
                    assert_abs_diff_eq!(ad.eval(t).unwrap(), da.eval(t).unwrap(), epsilon = tol);
                }
            }
        }
    }

    #[test]
    fn monotone_in_generators() {
        for a in [0.25, 0.5, 0.8] {
            let taus = [
                MeanSpec::Harmonic(a),
                MeanSpec::Geometric(a),
                MeanSpec::Arithmetic(a),
            ];
            let sigmas = [
                MeanSpec::power(0.5, -0.5),
                MeanSpec::Geometric(0.5),
                MeanSpec::power(0.5, 0.5),
            ];
            for i in 0..3 {
                for j in 0..3 {
                    let lo = deformed_rep(&taus[i.min(j)], &sigmas[i.min(j)]).unwrap();
                    let hi = deformed_rep(&taus[i.max(j)], &sigmas[i.max(j)]).unwrap();
                    let mid = deformed_rep(&taus[i], &sigmas[j]).unwrap();
                    for t in GRID {
                        let tol = 1e-11 * t.max(1.0);
                        assert!(lo.eval(t).unwrap() <= mid.eval(t).unwrap() + tol);
                        assert!(mid.eval(t).unwrap() <= hi.eval(t).unwrap() + tol);
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_sigma_geometry() {
        let syms = [
            MeanSpec::Arithmetic(0.5),
            MeanSpec::Harmonic(0.5),
            MeanSpec::Geometric(0.5),
            MeanSpec::power(0.5, 0.3),
            MeanSpec::power(0.5, -0.7),
        ];
        for sigma in syms {
            let a = deformed_rep(&sigma.adjoint_spec().unwrap(), &sigma).unwrap();
            let d = deformed_rep(&sigma.dual_spec().unwrap(), &sigma).unwrap();
            for t in GRID {
                let tol = 1e-10 * t.max(1.0);
                assert_abs_diff_eq!(a.eval(t).unwrap(), t.sqrt(), epsilon = tol);
                assert_abs_diff_eq!(d.eval(t).unwrap(), t.sqrt(), epsilon = tol);
            }
        }
    }

    #[test]
    fn proper_convergence_along_sequences() {
        let target = deformed_rep(&MeanSpec::Arithmetic(0.3), &MeanSpec::Geometric(0.5)).unwrap();
        let mut last = f64::INFINITY;
        for k in 2..8 {
            let h = 0.5f64.powi(k);
            let fk = deformed_rep(
                &MeanSpec::Arithmetic(0.3 + h),
                &MeanSpec::Geometric(0.5 + h),
            )
            .unwrap();
            let dev = GRID
                .iter()
                .map(|&t| (fk.eval(t).unwrap() - target.eval(t).unwrap()).abs() / t.max(1.0))
                .fold(0.0, f64::max);
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 1e-1);
    }

    #[test]
    fn nested_deformation_composes() {
        let inner = MeanSpec::deformed(MeanSpec::Arithmetic(0.5), MeanSpec::Harmonic(0.5));
        let outer = deformed_rep(&inner, &MeanSpec::Geometric(0.5)).unwrap();
        for t in GRID {
            assert_abs_diff_eq!(
                outer.eval(t).unwrap(),
                t.sqrt(),
                epsilon = 1e-10 * t.max(1.0)
            );
        }
    }
}
