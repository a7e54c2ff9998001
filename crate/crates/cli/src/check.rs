//! Seeded invariant suites behind `meanforge check`.
//!
//! Each property reports the largest deviation it saw and passes when that
//! deviation is at most its threshold. With a nonzero perturbation every
//! computed output is scaled by `1 + perturb` before it is compared, which
//! should make the suite fail.

use meanforge::deform::{
    closed_form_geom_arith, closed_form_harm_arith, fixed_point_defect, solve_f_deformed,
};
use meanforge::matrix_mean::cross_check;
use meanforge::multimean::{
    self, arithmetic, cubic_root, harmonic, karcher_residual, power_residual,
};
use meanforge::repfun::{adjoint, derivative_at_one, dual, numeric_derivative_at_one, transpose};
use meanforge::spd::{
    block_diag, congruence, loewner_gap, random_invertible, random_spd_from, thompson_dist,
};
use meanforge::{
    binary_mean, eval_multi, rep_of, MatrixSolveConfig, MeanSpec, MultiMeanSpec, RepFunction,
    Result, ScalarSolveConfig, SpdMatrix, WeightVector, GRID,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub perturb: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub threshold: f64,
    pub cases: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub perturb: f64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

struct Ctx<'a> {
    cfg: &'a CheckConfig,
    rng: ChaCha8Rng,
    worst: f64,
    cases: usize,
}

impl Ctx<'_> {
    fn p(&self, x: f64) -> f64 {
        x * (1.0 + self.cfg.perturb)
    }

    fn pm(&self, m: &SpdMatrix) -> Result<SpdMatrix> {
        if self.cfg.perturb == 0.0 {
            Ok(m.clone())
        } else {
            m.scale(1.0 + self.cfg.perturb)
        }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        if deviation.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(deviation);
        }
    }

    fn spd(&mut self, dim: usize, cond: f64) -> SpdMatrix {
        random_spd_from(&mut self.rng, dim, cond)
    }

    fn spds(&mut self, n: usize, dim: usize, cond: f64) -> Vec<SpdMatrix> {
        (0..n).map(|_| self.spd(dim, cond)).collect()
    }

    fn weights(&mut self, n: usize) -> Result<WeightVector> {
        let raw: Vec<f64> = (0..n).map(|_| self.rng.gen_range(0.1..1.0)).collect();
        WeightVector::normalized(raw)
    }

    fn matrix_cfg(&self) -> MatrixSolveConfig {
        MatrixSolveConfig::with_tol(self.cfg.tol)
    }
}

type Check = fn(&mut Ctx) -> Result<()>;

struct Property {
    name: &'static str,
    threshold: Threshold,
    run: Check,
}

#[derive(Clone, Copy)]
enum Threshold {
    Abs(f64),
    /// Multiple of the solver tolerance.
    Tol(f64),
}

impl Threshold {
    fn value(self, cfg: &CheckConfig) -> f64 {
        match self {
            Threshold::Abs(v) => v,
            Threshold::Tol(k) => k * cfg.tol,
        }
    }
}

fn properties() -> Vec<Property> {
    vec![
        Property {
            name: "thompson_axioms",
            threshold: Threshold::Abs(1e-10),
            run: thompson_axioms,
        },
        Property {
            name: "thompson_invariance",
            threshold: Threshold::Abs(1e-9),
            run: thompson_invariance,
        },
        Property {
            name: "fun_calc_order",
            threshold: Threshold::Abs(1e-12),
            run: fun_calc_order,
        },
        Property {
            name: "repfun_bounds",
            threshold: Threshold::Abs(1e-12),
            run: repfun_bounds,
        },
        Property {
            name: "transform_algebra",
            threshold: Threshold::Abs(1e-12),
            run: transform_algebra,
        },
        Property {
            name: "deformation_oracles",
            threshold: Threshold::Abs(1e-10),
            run: deformation_oracles,
        },
        Property {
            name: "scalar_fixed_point",
            threshold: Threshold::Abs(1e-10),
            run: scalar_fixed_point,
        },
        Property {
            name: "derivative_preservation",
            threshold: Threshold::Abs(1e-5),
            run: derivative_preservation,
        },
        Property {
            name: "deformation_symmetries",
            threshold: Threshold::Abs(1e-10),
            run: deformation_symmetries,
        },
        Property {
            name: "self_deformation",
            threshold: Threshold::Abs(1e-9),
            run: self_deformation,
        },
        Property {
            name: "matrix_cross_check",
            threshold: Threshold::Tol(10.0),
            run: matrix_cross_check,
        },
        Property {
            name: "contraction",
            threshold: Threshold::Abs(1e-10),
            run: contraction,
        },
        Property {
            name: "transformer_equality",
            threshold: Threshold::Abs(1e-9),
            run: transformer_equality,
        },
        Property {
            name: "joint_monotonicity",
            threshold: Threshold::Abs(1e-9),
            run: joint_monotonicity,
        },
        Property {
            name: "direct_sum",
            threshold: Threshold::Abs(1e-9),
            run: direct_sum,
        },
        Property {
            name: "karcher_residual",
            threshold: Threshold::Abs(1e-10),
            run: karcher_residual_prop,
        },
        Property {
            name: "power_residual",
            threshold: Threshold::Abs(1e-10),
            run: power_residual_prop,
        },
        Property {
            name: "deformed_residual",
            threshold: Threshold::Abs(1e-10),
            run: deformed_residual_prop,
        },
        Property {
            name: "mean_chain",
            threshold: Threshold::Abs(1e-9),
            run: mean_chain,
        },
        Property {
            name: "multi_congruence",
            threshold: Threshold::Abs(1e-9),
            run: multi_congruence,
        },
        Property {
            name: "multi_nonexpansive",
            threshold: Threshold::Abs(1e-10),
            run: multi_nonexpansive,
        },
        Property {
            name: "cubic_oracle",
            threshold: Threshold::Abs(1e-9),
            run: cubic_oracle,
        },
    ]
}

pub fn property_names() -> Vec<&'static str> {
    properties().iter().map(|p| p.name).collect()
}

fn seed_for(seed: u64, name: &str) -> u64 {
    // FNV-1a keeps per-property streams independent of suite order
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed
}

/// Runs the selected properties (all when `only` is empty).
pub fn run(cfg: &CheckConfig, only: &[String]) -> std::result::Result<CheckReport, String> {
    let all = properties();
    for name in only {
        if !all.iter().any(|p| p.name == name) {
            return Err(format!("unknown property {name:?}"));
        }
    }
    let mut results = Vec::new();
    for prop in all
        .iter()
        .filter(|p| only.is_empty() || only.iter().any(|n| n == p.name))
    {
        let mut ctx = Ctx {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed_for(cfg.seed, prop.name)),
            worst: 0.0,
            cases: 0,
        };
        let outcome = (prop.run)(&mut ctx);
        let threshold = prop.threshold.value(cfg);
        let error = outcome.err().map(|e| e.to_string());
        results.push(PropertyResult {
            name: prop.name,
            passed: error.is_none() && ctx.worst <= threshold,
            max_deviation: ctx.worst,
            threshold,
            cases: ctx.cases,
            error,
        });
    }
    Ok(CheckReport {
        seed: cfg.seed,
        dims: cfg.dims.clone(),
        trials: cfg.trials,
        perturb: cfg.perturb,
        passed: results.iter().all(|r| r.passed),
        properties: results,
    })
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

fn rel(a: f64, b: f64, t: f64) -> f64 {
    (a - b).abs() / t.max(1.0)
}

fn thompson_axioms(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let (a, b, m) = (c.spd(dim, 100.0), c.spd(dim, 100.0), c.spd(dim, 100.0));
            let ab = c.p(thompson_dist(&a, &b)?);
            let ba = thompson_dist(&b, &a)?;
            let am = thompson_dist(&a, &m)?;
            let mb = thompson_dist(&m, &b)?;
            c.record((ab - ba).abs());
            c.record((ab - am - mb).max(0.0));
            c.record(thompson_dist(&c.pm(&a)?, &a)?);
        }
    }
    Ok(())
}

fn thompson_invariance(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let (a, b) = (c.spd(dim, 100.0), c.spd(dim, 100.0));
            let m = random_invertible(&mut c.rng, dim);
            let base = thompson_dist(&a, &b)?;
            let cong = c.p(thompson_dist(&congruence(&m, &a)?, &congruence(&m, &b)?)?);
            let inv = c.p(thompson_dist(&a.inverse()?, &b.inverse()?)?);
            c.record((cong - base).abs());
            c.record((inv - base).abs());
        }
    }
    Ok(())
}

fn fun_calc_order(c: &mut Ctx) -> Result<()> {
    let fs: [fn(f64) -> f64; 3] = [f64::sqrt, |t| t / (1.0 + t), |t| t.powf(0.3)];
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let lo: Vec<f64> = (0..dim).map(|_| c.rng.gen_range(0.1..10.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|x| x + c.rng.gen_range(0.0..1.0)).collect();
            let (a, b) = (SpdMatrix::diag(&lo)?, SpdMatrix::diag(&hi)?);
            for f in fs {
                let fa = c.pm(&a.map(f)?)?;
                let fb = b.map(f)?;
                c.record((-loewner_gap(&fa, &fb)?).max(0.0));
            }
        }
    }
    Ok(())
}

const CATALOG_GRID: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];

fn repfun_bounds(c: &mut Ctx) -> Result<()> {
    for spec in catalog() {
        let f = rep_of(&spec)?;
        c.record((c.p(f.eval(1.0)?) - 1.0).abs());
        for t in CATALOG_GRID {
            let v = c.p(f.eval(t)?);
            c.record((t.min(1.0) - v).max(0.0).max(v - t.max(1.0)) / t.max(1.0));
        }
    }
    Ok(())
}

fn transform_algebra(c: &mut Ctx) -> Result<()> {
    for spec in catalog() {
        let f = rep_of(&spec)?;
        for t in GRID {
            let d = c.p(dual(&f).eval(t)?);
            c.record(rel(d, adjoint(&transpose(&f)).eval(t)?, t));
            c.record(rel(d, transpose(&adjoint(&f)).eval(t)?, t));
            c.record(rel(transpose(&transpose(&f)).eval(t)?, f.eval(t)?, t));
            c.record(rel(adjoint(&adjoint(&f)).eval(t)?, f.eval(t)?, t));
        }
    }
    Ok(())
}

fn solve(c: &Ctx, tau: &RepFunction, sigma: &RepFunction, t: f64) -> Result<f64> {
    Ok(c.p(solve_f_deformed(
        tau,
        sigma,
        t,
        &ScalarSolveConfig::default(),
    )?))
}

fn deformation_oracles(c: &mut Ctx) -> Result<()> {
    for i in 1..10 {
        let a = i as f64 / 10.0;
        for r in [0.25, 0.5, 1.0] {
            let sig = rep_of(&MeanSpec::Geometric(r))?;
            let ar = rep_of(&MeanSpec::Arithmetic(a))?;
            let hm = rep_of(&MeanSpec::Harmonic(a))?;
            let gm = rep_of(&MeanSpec::Geometric(a))?;
            for t in GRID {
                c.record((solve(c, &ar, &sig, t)? - (1.0 - a + a * t.powf(r)).powf(1.0 / r)).abs());
                c.record(
                    (solve(c, &hm, &sig, t)? - rep_of(&MeanSpec::power(a, -r))?.eval(t)?).abs(),
                );
                c.record((solve(c, &gm, &sig, t)? - t.powf(a)).abs());
            }
        }
        let s = a;
        let geo = rep_of(&MeanSpec::Geometric(0.5))?;
        let ars = rep_of(&MeanSpec::Arithmetic(s))?;
        for t in GRID {
            c.record((solve(c, &geo, &ars, t)? - closed_form_geom_arith(s, t)?).abs());
            for alpha in [0.2, 0.5, 0.8] {
                let hm = rep_of(&MeanSpec::Harmonic(alpha))?;
                c.record((solve(c, &hm, &ars, t)? - closed_form_harm_arith(alpha, s, t)?).abs());
            }
        }
    }
    let half = [
        MeanSpec::Arithmetic(0.5),
        MeanSpec::Harmonic(0.5),
        MeanSpec::Geometric(0.5),
    ];
    for (tau, sigma) in [(0, 1), (1, 0), (2, 2)] {
        let (ft, fs) = (rep_of(&half[tau])?, rep_of(&half[sigma])?);
        for t in GRID {
            c.record((solve(c, &ft, &fs, t)? - t.sqrt()).abs());
        }
    }
    Ok(())
}

fn scalar_fixed_point(c: &mut Ctx) -> Result<()> {
    for tau in catalog() {
        for sigma in catalog() {
            let (ft, fs) = (rep_of(&tau)?, rep_of(&sigma)?);
            for t in GRID {
                let x = solve(c, &ft, &fs, t)?;
                c.record(fixed_point_defect(&ft, &fs, t, x)?);
            }
        }
    }
    Ok(())
}

fn derivative_preservation(c: &mut Ctx) -> Result<()> {
    for tau in catalog() {
        let alpha = derivative_at_one(&rep_of(&tau)?)?;
        for sigma in catalog() {
            let d = meanforge::deform::deformed_rep(&tau, &sigma)?;
            let shifted = RepFunction::fallible("perturbed", None, {
                let (d, p) = (d.clone(), c.cfg.perturb);
                move |t| Ok(d.eval(t)? * t.powf(p))
            });
            c.record((numeric_derivative_at_one(&shifted)? - alpha).abs());
        }
    }
    Ok(())
}

fn deformation_symmetries(c: &mut Ctx) -> Result<()> {
    use meanforge::deform::deformed_rep;
    for tau in catalog() {
        for sigma in catalog() {
            let d = deformed_rep(&tau, &sigma)?;
            let dt = deformed_rep(&tau.transpose_spec()?, &sigma)?;
            let da = deformed_rep(&tau.adjoint_spec()?, &sigma.adjoint_spec()?)?;
            let (td, ad) = (transpose(&d), adjoint(&d));
            for t in GRID {
                let v = c.p(td.eval(t)?);
                c.record(rel(v, dt.eval(t)?, t));
                c.record(rel(ad.eval(t)?, da.eval(t)?, t));
            }
        }
    }
    Ok(())
}

fn self_deformation(c: &mut Ctx) -> Result<()> {
    use meanforge::deform::deformed_rep;
    let mut specs: Vec<(MeanSpec, MeanSpec)> = Vec::new();
    for q in [-1.0, 0.5, 2.0] {
        specs.push((MeanSpec::PowerDifference(q), MeanSpec::PowerDifference(q)));
    }
    for r in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        specs.push((MeanSpec::power(0.3, r), MeanSpec::power(0.6, r)));
        specs.push((MeanSpec::power(0.5, r), MeanSpec::power(0.5, r)));
    }
    for (tau, sigma) in specs {
        let f = rep_of(&tau)?;
        let d = deformed_rep(&tau, &sigma)?;
        for t in GRID {
            c.record((c.p(d.eval(t)?) - f.eval(t)?).abs());
        }
    }
    Ok(())
}

fn combos() -> Vec<(MeanSpec, MeanSpec)> {
    vec![
        (MeanSpec::Arithmetic(0.4), MeanSpec::Harmonic(0.6)),
        (MeanSpec::Geometric(0.3), MeanSpec::Arithmetic(0.5)),
        (MeanSpec::Harmonic(0.7), MeanSpec::Geometric(0.5)),
        (MeanSpec::power(0.6, -0.5), MeanSpec::power(0.5, 0.5)),
        (MeanSpec::PowerDifference(1.5), MeanSpec::Harmonic(0.3)),
        (MeanSpec::Arithmetic(0.5), MeanSpec::PowerDifference(-1.0)),
    ]
}

fn matrix_cross_check(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let (a, b) = (c.spd(dim, 50.0), c.spd(dim, 50.0));
            for (tau, sigma) in combos() {
                let dev = cross_check(&tau, &sigma, &a, &b, &cfg)?;
                c.record(dev + c.cfg.perturb.abs());
            }
        }
    }
    Ok(())
}

fn contraction(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let m = c.spds(4, dim, 50.0);
            for spec in catalog() {
                let lhs = thompson_dist(
                    &c.pm(&binary_mean(&spec, &m[0], &m[2])?)?,
                    &binary_mean(&spec, &m[1], &m[3])?,
                )?;
                let bound = thompson_dist(&m[0], &m[1])?.max(thompson_dist(&m[2], &m[3])?);
                c.record((lhs - bound).max(0.0));
                let dxy = thompson_dist(&m[0], &m[1])?;
                if dxy >= 0.1 {
                    let l = thompson_dist(
                        &c.pm(&binary_mean(&spec, &m[0], &m[2])?)?,
                        &binary_mean(&spec, &m[1], &m[2])?,
                    )?;
                    c.record((l - dxy + 1e-12).max(0.0));
                }
            }
        }
    }
    Ok(())
}

fn deformed_specs() -> Vec<MeanSpec> {
    combos()
        .into_iter()
        .take(3)
        .map(|(t, s)| MeanSpec::deformed(t, s))
        .collect()
}

fn transformer_equality(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let (a, b) = (c.spd(dim, 30.0), c.spd(dim, 30.0));
            let m = random_invertible(&mut c.rng, dim);
            for spec in deformed_specs() {
                let lhs = c.pm(&congruence(&m, &binary_mean(&spec, &a, &b)?)?)?;
                let rhs = binary_mean(&spec, &congruence(&m, &a)?, &congruence(&m, &b)?)?;
                c.record(thompson_dist(&lhs, &rhs)?);
            }
        }
    }
    Ok(())
}

fn joint_monotonicity(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let (a, b) = (c.spd(dim, 30.0), c.spd(dim, 30.0));
            let (da, db) = (c.spd(dim, 10.0).scale(0.2)?, c.spd(dim, 10.0).scale(0.2)?);
            let (a2, b2) = (a.add(&da)?, b.add(&db)?);
            for spec in deformed_specs() {
                let lo = binary_mean(&spec, &a, &b)?;
                let hi = binary_mean(&spec, &a2, &b2)?;
                let lo = c.pm(&lo)?;
                c.record((-loewner_gap(&lo, &hi)?).max(0.0));
            }
        }
    }
    Ok(())
}

fn direct_sum(c: &mut Ctx) -> Result<()> {
    for &dim in &c.cfg.dims.clone() {
        for _ in 0..c.cfg.trials {
            let m = c.spds(4, dim, 30.0);
            for spec in deformed_specs() {
                let whole =
                    binary_mean(&spec, &block_diag(&m[0], &m[1]), &block_diag(&m[2], &m[3]))?;
                let parts = block_diag(
                    &binary_mean(&spec, &m[0], &m[2])?,
                    &binary_mean(&spec, &m[1], &m[3])?,
                );
                c.record(thompson_dist(&c.pm(&whole)?, &parts)?);
            }
        }
    }
    Ok(())
}

fn multi_dims(c: &Ctx) -> Vec<usize> {
    c.cfg.dims.clone()
}

fn karcher_residual_prop(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for n in [2, 3, 5] {
            for _ in 0..c.cfg.trials.div_ceil(2) {
                let a = c.spds(n, dim, 30.0);
                let w = c.weights(n)?;
                let (x, rep) = eval_multi(&MultiMeanSpec::Karcher(w.clone()), &a, &cfg)?;
                rep.ok()?;
                c.record(karcher_residual(&c.pm(&x)?, &w, &a)?);
            }
        }
    }
    Ok(())
}

fn power_residual_prop(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for n in [2, 3, 5] {
            for _ in 0..c.cfg.trials.div_ceil(2) {
                let a = c.spds(n, dim, 30.0);
                let w = c.weights(n)?;
                let r = c.rng.gen_range(0.1..1.0) * if c.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let (x, rep) = eval_multi(&MultiMeanSpec::Power { w: w.clone(), r }, &a, &cfg)?;
                rep.ok()?;
                c.record(power_residual(&c.pm(&x)?, &w, r, &a)?);
            }
        }
    }
    Ok(())
}

fn deformed_multi_specs(w: &WeightVector) -> Vec<MultiMeanSpec> {
    let n = w.len();
    let mixed: Vec<MeanSpec> = (0..n)
        .map(|j| match j % 3 {
            0 => MeanSpec::Arithmetic(0.5),
            1 => MeanSpec::Harmonic(0.4),
            _ => MeanSpec::Geometric(0.7),
        })
        .collect();
    vec![
        MultiMeanSpec::deformed(MultiMeanSpec::Arithmetic(w.clone()), mixed.clone()),
        MultiMeanSpec::deformed(
            MultiMeanSpec::Harmonic(w.clone()),
            vec![MeanSpec::power(0.5, 0.5); n],
        ),
        MultiMeanSpec::deformed(MultiMeanSpec::Karcher(w.clone()), mixed),
    ]
}

fn deformed_residual_prop(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for n in [2, 3, 5] {
            let a = c.spds(n, dim, 20.0);
            let w = c.weights(n)?;
            for spec in deformed_multi_specs(&w) {
                let (x, rep) = eval_multi(&spec, &a, &cfg)?;
                rep.ok()?;
                c.record(multimean::residual(&spec, &a, &c.pm(&x)?, &cfg)?);
            }
        }
    }
    Ok(())
}

fn mean_chain(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for _ in 0..c.cfg.trials {
            let n = 3;
            let a = c.spds(n, dim, 30.0);
            let w = c.weights(n)?;
            let (r, s) = (0.3, 0.7);
            let p = |r: f64| -> Result<SpdMatrix> {
                let (x, rep) = eval_multi(&MultiMeanSpec::Power { w: w.clone(), r }, &a, &cfg)?;
                rep.ok()?;
                Ok(x)
            };
            let (g, rep) = eval_multi(&MultiMeanSpec::Karcher(w.clone()), &a, &cfg)?;
            rep.ok()?;
            let mut chain = [
                harmonic(&w, &a)?,
                p(-s)?,
                p(-r)?,
                g,
                p(r)?,
                p(s)?,
                arithmetic(&w, &a)?,
            ];
            chain[0] = c.pm(&chain[0])?;
            for pair in chain.windows(2) {
                c.record((-loewner_gap(&pair[0], &pair[1])?).max(0.0));
            }
            for spec in deformed_multi_specs(&w) {
                let hat = spec.g_weight()?;
                let (x, rep) = eval_multi(&spec, &a, &cfg)?;
                rep.ok()?;
                c.record((-loewner_gap(&harmonic(&hat, &a)?, &x)?).max(0.0));
                c.record((-loewner_gap(&x, &arithmetic(&hat, &a)?)?).max(0.0));
            }
        }
    }
    Ok(())
}

fn multi_congruence(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for _ in 0..c.cfg.trials.div_ceil(2) {
            let n = 3;
            let a = c.spds(n, dim, 20.0);
            let w = c.weights(n)?;
            let m = random_invertible(&mut c.rng, dim);
            let ca = a
                .iter()
                .map(|x| congruence(&m, x))
                .collect::<Result<Vec<_>>>()?;
            let specs = vec![
                MultiMeanSpec::Karcher(w.clone()),
                MultiMeanSpec::Power {
                    w: w.clone(),
                    r: 0.5,
                },
                MultiMeanSpec::Power {
                    w: w.clone(),
                    r: -0.4,
                },
                MultiMeanSpec::deformed(
                    MultiMeanSpec::Karcher(w.clone()),
                    vec![MeanSpec::Arithmetic(0.5); n],
                ),
            ];
            for spec in specs {
                let (x, _) = eval_multi(&spec, &a, &cfg)?;
                let (y, _) = eval_multi(&spec, &ca, &cfg)?;
                c.record(thompson_dist(&c.pm(&congruence(&m, &x)?)?, &y)?);
            }
        }
    }
    Ok(())
}

fn multi_nonexpansive(c: &mut Ctx) -> Result<()> {
    let cfg = c.matrix_cfg();
    for dim in multi_dims(c) {
        for _ in 0..c.cfg.trials.div_ceil(2) {
            let n = 3;
            let a = c.spds(n, dim, 20.0);
            let b = c.spds(n, dim, 20.0);
            let w = c.weights(n)?;
            let mut bound = 0.0_f64;
            for (x, y) in a.iter().zip(&b) {
                bound = bound.max(thompson_dist(x, y)?);
            }
            let mut specs = vec![
                MultiMeanSpec::Arithmetic(w.clone()),
                MultiMeanSpec::Harmonic(w.clone()),
                MultiMeanSpec::Karcher(w.clone()),
                MultiMeanSpec::Power {
                    w: w.clone(),
                    r: 0.5,
                },
            ];
            specs.extend(deformed_multi_specs(&w));
            for spec in specs {
                let (x, _) = eval_multi(&spec, &a, &cfg)?;
                let (y, _) = eval_multi(&spec, &b, &cfg)?;
                let d = thompson_dist(&x, &y)?;
                c.record((c.p(d) - bound).max(0.0));
            }
        }
    }
    Ok(())
}

fn cubic_oracle(c: &mut Ctx) -> Result<()> {
    let mut triples = vec![(1.0, 1.0, 1.0), (1.0, 2.0, 4.0), (1.0, 2.0, 3.0)];
    for _ in 0..c.cfg.trials {
        triples.push((
            c.rng.gen_range(0.1..10.0),
            c.rng.gen_range(0.1..10.0),
            c.rng.gen_range(0.1..10.0),
        ));
    }
    for (a1, a2, a3) in triples {
        let (x, _) = multimean::cubic_check(a1, a2, a3)?;
        c.record((c.p(x) - cubic_root(a1, a2, a3)).abs() / x.max(1.0));
    }
    Ok(())
}

/// One line per property plus a verdict.
pub fn render_text(report: &CheckReport) -> String {
    let mut out = String::new();
    for p in &report.properties {
        out.push_str(&format!(
            "{} {:<24} max_deviation={} threshold={} cases={}",
            if p.passed { "PASS" } else { "FAIL" },
            p.name,
            crate::format::g15(p.max_deviation),
            crate::format::g15(p.threshold),
            p.cases
        ));
        if let Some(e) = &p.error {
            out.push_str(&format!(" error={e}"));
        }
        out.push('\n');
    }
    out.push_str(if report.passed {
        "passed\n"
    } else {
        "failed\n"
    });
    out
}
