//! Acceptance criteria, one PASS/FAIL line each.

use std::process::Command;

use meanforge::deform::{
    closed_form_geom_arith, closed_form_harm_arith, deformed_rep, self_deformation_residual,
    solve_f_deformed, tau_family,
};
use meanforge::matrix_mean::cross_check;
use meanforge::multimean::{
    arithmetic, cubic_check, cubic_root, harmonic, karcher_residual, power_residual, residual,
};
use meanforge::repfun::{derivative_at_one, numeric_derivative_at_one};
use meanforge::spd::{
    block_diag, congruence, loewner_gap, random_invertible, random_spd_from, thompson_dist,
};
use meanforge::{
    binary_mean, eval_multi, rep_of, MatrixSolveConfig, MeanSpec, MultiMeanSpec, Result,
    ScalarSolveConfig, SpdMatrix, WeightVector, GRID,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = fn() -> Result<Verdict>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(worst: f64, bound: f64, what: &str) -> Verdict {
    Verdict {
        passed: worst <= bound,
        detail: format!("{what}: max deviation {worst:.3e} (bound {bound:.0e})"),
    }
}

fn tenths() -> impl Iterator<Item = f64> {
    (1..10).map(|i| i as f64 / 10.0)
}

fn solve(tau: &MeanSpec, sigma: &MeanSpec, t: f64) -> Result<f64> {
    solve_f_deformed(
        &rep_of(tau)?,
        &rep_of(sigma)?,
        t,
        &ScalarSolveConfig::default(),
    )
}

fn closed_form_oracles() -> Result<Verdict> {
    let mut worst = 0.0_f64;
    for a in tenths() {
        for r in [0.25, 0.5, 1.0] {
            let sig = MeanSpec::Geometric(r);
            let p_neg = rep_of(&MeanSpec::power(a, -r))?;
            for t in GRID {
                let ar = solve(&MeanSpec::Arithmetic(a), &sig, t)?;
                worst = worst.max((ar - (1.0 - a + a * t.powf(r)).powf(1.0 / r)).abs());
                let hm = solve(&MeanSpec::Harmonic(a), &sig, t)?;
                worst = worst.max((hm - p_neg.eval(t)?).abs());
                let gm = solve(&MeanSpec::Geometric(a), &sig, t)?;
                worst = worst.max((gm - t.powf(a)).abs());
            }
        }
    }
    Ok(verdict(
        worst,
        1e-10,
        "arith/harm/geom deformed by geom over 27 (alpha, r)",
    ))
}

fn half_identities() -> Result<Verdict> {
    let (ar, hm, gm) = (
        MeanSpec::Arithmetic(0.5),
        MeanSpec::Harmonic(0.5),
        MeanSpec::Geometric(0.5),
    );
    let mut worst = 0.0_f64;
    for (tau, sigma) in [(&ar, &hm), (&hm, &ar), (&gm, &gm)] {
        for t in GRID {
            worst = worst.max((solve(tau, sigma, t)? - t.sqrt()).abs());
        }
    }
    Ok(verdict(
        worst,
        1e-10,
        "arith_harm, harm_arith, geom_geom vs sqrt",
    ))
}

fn three_lines() -> Result<Verdict> {
    let mut worst = 0.0_f64;
    for s in tenths() {
        let sigma = MeanSpec::Arithmetic(s);
        for t in GRID {
            let g = solve(&MeanSpec::Geometric(0.5), &sigma, t)?;
            worst = worst.max((g - closed_form_geom_arith(s, t)?).abs());
            for alpha in [0.2, 0.5, 0.8] {
                let h = solve(&MeanSpec::Harmonic(alpha), &sigma, t)?;
                worst = worst.max((h - closed_form_harm_arith(alpha, s, t)?).abs());
            }
        }
    }
    Ok(verdict(worst, 1e-10, "geom and harm deformed by arith:s"))
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

fn derivative_preservation() -> Result<Verdict> {
    let mut worst = 0.0_f64;
    for tau in catalog() {
        let want = derivative_at_one(&rep_of(&tau)?)?;
        for sigma in catalog() {
            let got = numeric_derivative_at_one(&deformed_rep(&tau, &sigma)?)?;
            worst = worst.max((got - want).abs());
        }
    }
    Ok(verdict(worst, 1e-5, "6x6 catalog"))
}

fn boundary_limit() -> Result<Verdict> {
    // deviations at or below this are roundoff and cannot decrease further
    const FLOOR: f64 = 1e-9;
    let taus = [
        MeanSpec::Arithmetic(0.3),
        MeanSpec::Harmonic(0.7),
        MeanSpec::PowerDifference(1.5),
    ];
    let mut passed = true;
    let mut last_worst = 0.0_f64;
    let mut notes = Vec::new();
    for tau in &taus {
        let alpha = derivative_at_one(&rep_of(tau)?)?;
        for r in [-1.0, -0.4, 0.0, 0.4, 1.0] {
            let target = rep_of(&MeanSpec::power(alpha, r))?;
            let mut devs = Vec::new();
            for s in [1e-2, 1e-3, 1e-4] {
                let f = tau_family(tau, s, r)?;
                let mut worst = 0.0_f64;
                for t in GRID {
                    worst = worst.max((f.eval(t)? - target.eval(t)?).abs());
                }
                devs.push(worst);
            }
            let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
            let exact = devs.iter().all(|d| *d <= FLOOR);
            if !(decreasing || exact) || devs[2] > 1e-2 {
                passed = false;
                notes.push(format!("{tau} r={r}: {devs:?}"));
            }
            last_worst = last_worst.max(devs[2]);
        }
    }
    let mut detail = format!("15 (tau, r) cases, worst deviation at s=1e-4 {last_worst:.3e}");
    if !notes.is_empty() {
        detail.push_str(&format!("; not decreasing: {}", notes.join(", ")));
    }
    Ok(Verdict { passed, detail })
}

fn interpolation_identities() -> Result<Verdict> {
    let mut fixed = 0.0_f64;
    for r in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for a in [0.2, 0.5, 0.8] {
            for b in [0.3, 0.6] {
                let f = rep_of(&MeanSpec::power(a, r))?;
                let d = deformed_rep(&MeanSpec::power(a, r), &MeanSpec::power(b, r))?;
                for t in GRID {
                    fixed = fixed.max((d.eval(t)? - f.eval(t)?).abs());
                }
            }
        }
    }
    let mut small = 0.0_f64;
    for q in [-1.0, 0.5, 2.0] {
        small = small.max(self_deformation_residual(
            &MeanSpec::PowerDifference(q),
            &GRID,
        )?);
    }
    let mut large = f64::INFINITY;
    for q in [0.3, 1.5] {
        large = large.min(self_deformation_residual(
            &MeanSpec::PowerDifference(q),
            &GRID,
        )?);
    }
    Ok(Verdict {
        passed: fixed <= 1e-9 && small <= 1e-9 && large >= 1e-4,
        detail: format!(
            "power means fixed {fixed:.3e}; self residual q in {{-1,1/2,2}} {small:.3e}, \
             q in {{0.3,1.5}} at least {large:.3e}"
        ),
    })
}

fn consistency() -> Result<Verdict> {
    let cfg = MatrixSolveConfig::default();
    let combos = [
        (MeanSpec::Arithmetic(0.4), MeanSpec::Harmonic(0.6)),
        (MeanSpec::Geometric(0.3), MeanSpec::Arithmetic(0.5)),
        (MeanSpec::Harmonic(0.7), MeanSpec::Geometric(0.5)),
        (MeanSpec::power(0.6, -0.5), MeanSpec::power(0.5, 0.5)),
        (MeanSpec::PowerDifference(1.5), MeanSpec::Harmonic(0.3)),
        (MeanSpec::Arithmetic(0.5), MeanSpec::PowerDifference(-1.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for dim in [2, 3, 5, 8] {
        for _ in 0..50 {
            let a = random_spd_from(&mut rng, dim, 50.0);
            let b = random_spd_from(&mut rng, dim, 50.0);
            for (tau, sigma) in &combos {
                worst = worst.max(cross_check(tau, sigma, &a, &b, &cfg)?);
            }
        }
    }
    Ok(verdict(
        worst,
        10.0 * cfg.tol,
        "1200 matrix vs scalar solves",
    ))
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Result<WeightVector> {
    WeightVector::normalized((0..n).map(|_| rng.gen_range(0.1..1.0)).collect())
}

fn spds(rng: &mut ChaCha8Rng, n: usize, dim: usize, cond: f64) -> Vec<SpdMatrix> {
    (0..n).map(|_| random_spd_from(rng, dim, cond)).collect()
}

fn deformed_specs(w: &WeightVector) -> Vec<MultiMeanSpec> {
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

fn residual_contracts() -> Result<Verdict> {
    let cfg = MatrixSolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut k, mut p, mut d) = (0.0_f64, 0.0_f64, 0.0_f64);
    for dim in [2, 3, 5] {
        for n in [2, 3, 5] {
            let a = spds(&mut rng, n, dim, 30.0);
            let w = weights(&mut rng, n)?;
            let (x, rep) = eval_multi(&MultiMeanSpec::Karcher(w.clone()), &a, &cfg)?;
            rep.ok()?;
            k = k.max(karcher_residual(&x, &w, &a)?);
            for r in [-0.7, -0.2, 0.3, 1.0] {
                let (x, rep) = eval_multi(&MultiMeanSpec::Power { w: w.clone(), r }, &a, &cfg)?;
                rep.ok()?;
                p = p.max(power_residual(&x, &w, r, &a)?);
            }
            for spec in deformed_specs(&w) {
                let (x, rep) = eval_multi(&spec, &a, &cfg)?;
                rep.ok()?;
                d = d.max(residual(&spec, &a, &x, &cfg)?);
            }
        }
    }
    let worst = k.max(p).max(d);
    Ok(Verdict {
        passed: worst <= 1e-10,
        detail: format!("karcher {k:.3e}, power {p:.3e}, deformed {d:.3e} (bound 1e-10)"),
    })
}

fn solve_multi(
    spec: &MultiMeanSpec,
    a: &[SpdMatrix],
    cfg: &MatrixSolveConfig,
) -> Result<SpdMatrix> {
    let (x, rep) = eval_multi(spec, a, cfg)?;
    rep.ok()?;
    Ok(x)
}

fn inequalities() -> Result<Verdict> {
    let cfg = MatrixSolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut chain, mut cong, mut nonexp) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..50 {
        let dim = [2, 3, 4][i % 3];
        let n = 2 + i % 3;
        let a = spds(&mut rng, n, dim, 30.0);
        let w = weights(&mut rng, n)?;
        let (r, s) = (rng.gen_range(0.05..0.5), rng.gen_range(0.5..0.95));
        let pw = |r: f64| solve_multi(&MultiMeanSpec::Power { w: w.clone(), r }, &a, &cfg);
        let seq = [
            harmonic(&w, &a)?,
            pw(-s)?,
            pw(-r)?,
            solve_multi(&MultiMeanSpec::Karcher(w.clone()), &a, &cfg)?,
            pw(r)?,
            pw(s)?,
            arithmetic(&w, &a)?,
        ];
        for pair in seq.windows(2) {
            chain = chain.max(-loewner_gap(&pair[0], &pair[1])?);
        }
        let spec = &deformed_specs(&w)[i % 3];
        let hat = spec.g_weight()?;
        let x = solve_multi(spec, &a, &cfg)?;
        chain = chain.max(-loewner_gap(&harmonic(&hat, &a)?, &x)?);
        chain = chain.max(-loewner_gap(&x, &arithmetic(&hat, &a)?)?);

        let m = random_invertible(&mut rng, dim);
        let ca = a
            .iter()
            .map(|x| congruence(&m, x))
            .collect::<Result<Vec<_>>>()?;
        let b = spds(&mut rng, n, dim, 30.0);
        let mut bound = 0.0_f64;
        for (x, y) in a.iter().zip(&b) {
            bound = bound.max(thompson_dist(x, y)?);
        }
        for spec in [
            MultiMeanSpec::Karcher(w.clone()),
            MultiMeanSpec::Power { w: w.clone(), r },
            MultiMeanSpec::Power {
                w: w.clone(),
                r: -s,
            },
            spec.clone(),
        ] {
            let x = solve_multi(&spec, &a, &cfg)?;
            let y = solve_multi(&spec, &ca, &cfg)?;
            cong = cong.max(thompson_dist(&congruence(&m, &x)?, &y)?);
            let z = solve_multi(&spec, &b, &cfg)?;
            nonexp = nonexp.max(thompson_dist(&x, &z)? - bound);
        }
    }
    let passed = chain <= 1e-9 && cong <= 1e-9 && nonexp <= 1e-9;
    Ok(Verdict {
        passed,
        detail: format!(
            "50 instances: chain slack {chain:.3e}, congruence {cong:.3e}, \
             non-expansiveness excess {nonexp:.3e} (bound 1e-9)"
        ),
    })
}

/// `(passed, known spec defect)`.
fn cubic() -> Result<(Verdict, bool)> {
    let (x, root) = cubic_check(1.0, 2.0, 4.0)?;
    let matches = (x - root).abs() <= 1e-9;
    let gap = (x - 2.0).abs();
    // (1, 2, 3) is not a geometric progression, so there the root is not G
    let (y, root3) = cubic_check(1.0, 2.0, 3.0)?;
    let gap3 = (y - 6f64.cbrt()).abs();
    let detail = format!(
        "(1,2,4): solver {x:.15} vs cubic root {root:.15}, |x - 2| = {gap:.1e}; \
         (1,2,3): solver {y:.15} vs root {root3:.15}, |x - 6^(1/3)| = {gap3:.3e}. \
         For a geometric progression e2 = G e1, so x = G solves the stated cubic exactly \
         and the clause requiring |x - 2| > 1e-3 cannot hold"
    );
    let core_ok = matches && (y - root3).abs() <= 1e-9 && gap3 > 1e-3;
    debug_assert!((cubic_root(1.0, 2.0, 4.0) - 2.0).abs() < 1e-12);
    Ok((
        Verdict {
            passed: core_ok && gap > 1e-3,
            detail,
        },
        core_ok && gap <= 1e-3,
    ))
}

fn direct_sum() -> Result<Verdict> {
    let cfg = MatrixSolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    let binary = [
        MeanSpec::Geometric(0.3),
        MeanSpec::PowerDifference(1.5),
        MeanSpec::deformed(MeanSpec::Arithmetic(0.4), MeanSpec::Harmonic(0.6)),
        MeanSpec::deformed(MeanSpec::Geometric(0.3), MeanSpec::power(0.5, -0.5)),
    ];
    for (p, q) in [(1, 2), (2, 3), (3, 3), (2, 5)] {
        let a = spds(&mut rng, 2, p, 30.0);
        let b = spds(&mut rng, 2, q, 30.0);
        let sums: Vec<SpdMatrix> = a.iter().zip(&b).map(|(x, y)| block_diag(x, y)).collect();
        for spec in &binary {
            let whole = binary_mean(spec, &sums[0], &sums[1])?;
            let parts = block_diag(
                &binary_mean(spec, &a[0], &a[1])?,
                &binary_mean(spec, &b[0], &b[1])?,
            );
            worst = worst.max(thompson_dist(&whole, &parts)?);
        }
        let w = weights(&mut rng, 2)?;
        let mut multi = vec![
            MultiMeanSpec::Karcher(w.clone()),
            MultiMeanSpec::Power {
                w: w.clone(),
                r: 0.4,
            },
        ];
        multi.extend(deformed_specs(&w));
        for spec in &multi {
            let whole = solve_multi(spec, &sums, &cfg)?;
            let parts = block_diag(&solve_multi(spec, &a, &cfg)?, &solve_multi(spec, &b, &cfg)?);
            worst = worst.max(thompson_dist(&whole, &parts)?);
        }
    }
    Ok(verdict(
        worst,
        1e-9,
        "binary and multivariate means on block-diagonal inputs",
    ))
}

fn cli_determinism() -> Verdict {
    let once = || {
        Command::new(env!("CARGO_BIN_EXE_meanforge"))
            .args(["check", "--seed", "42", "--format", "json"])
            .output()
    };
    match (once(), once()) {
        (Ok(a), Ok(b)) => {
            let same = a.stdout == b.stdout;
            let ok = a.status.code() == Some(0) && b.status.code() == Some(0);
            Verdict {
                passed: same && ok,
                detail: format!(
                    "exit codes {:?}/{:?}, reports {} ({} bytes)",
                    a.status.code(),
                    b.status.code(),
                    if same { "identical" } else { "differ" },
                    a.stdout.len()
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => Verdict {
            passed: false,
            detail: format!("could not run the binary: {e}"),
        },
    }
}

fn report(n: usize, v: Result<Verdict>) -> bool {
    let v = v.unwrap_or_else(|e| Verdict {
        passed: false,
        detail: format!("error: {e}"),
    });
    println!(
        "{} criterion {n:>2}: {}",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail
    );
    v.passed
}

fn main() {
    let mut failed = Vec::new();
    let mut known = Vec::new();
    let checks: [(usize, Criterion); 9] = [
        (1, closed_form_oracles),
        (2, half_identities),
        (3, three_lines),
        (4, derivative_preservation),
        (5, boundary_limit),
        (6, interpolation_identities),
        (7, consistency),
        (8, residual_contracts),
        (9, inequalities),
    ];
    for (n, f) in checks {
        if !report(n, f()) {
            failed.push(n);
        }
    }
    match cubic() {
        Ok((v, defect)) => {
            if !report(10, Ok(v)) {
                if defect {
                    known.push(10);
                } else {
                    failed.push(10);
                }
            }
        }
        Err(e) => {
            report(10, Err(e));
            failed.push(10);
        }
    }
    if !report(11, direct_sum()) {
        failed.push(11);
    }
    if !report(12, Ok(cli_determinism())) {
        failed.push(12);
    }
    if !known.is_empty() {
        println!(
            "known unattainable: criterion {known:?} (the separation clause contradicts its own oracle)"
        );
    }
    if failed.is_empty() {
        println!("acceptance: {} of 12 passed", 12 - known.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
