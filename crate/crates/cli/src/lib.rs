//! The `meanforge` command line.

pub mod check;
pub mod format;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use meanforge::deform::tau_family;
use meanforge::grammar::{parse_mean, parse_multi};
use meanforge::io::parse_matrix_list;
use meanforge::matrix_mean::deform_fixed_point;
use meanforge::{
    binary_mean, eval_multi, Error, MatrixSolveConfig, MeanSpec, MultiMeanSpec, SolveReport,
    SpdMatrix, Start, WeightVector,
};

use format::Format;

#[derive(Parser, Debug)]
#[command(name = "meanforge", version, about = "Operator means on SPD matrices")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Solver tolerance on the Thompson residual.
    #[arg(long, global = true, env = "MEANFORGE_TOL", default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StartArg {
    Above,
    Arith,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Binary mean of two matrices, or a multivariate mean of several.
    Mean {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        weights: Option<String>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Solve X = (X σ A) τ (X σ₂ B) by fixed-point iteration.
    Deform {
        #[arg(long)]
        tau: String,
        #[arg(long)]
        sigma: String,
        /// Second deforming mean; defaults to --sigma.
        #[arg(long)]
        sigma2: Option<String>,
        #[arg(long, value_enum, default_value = "arith")]
        start: StartArg,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Tabulate a representing function.
    Repfun {
        #[arg(long)]
        spec: String,
        /// Log-spaced grid `lo:hi:n`.
        #[arg(long)]
        grid: String,
    },
    /// Tabulate τ deformed by the power means over (s, r) sweeps.
    Family {
        #[arg(long)]
        tau: String,
        /// Comma-separated s values.
        #[arg(long)]
        s: String,
        /// Comma-separated r values.
        #[arg(long)]
        r: String,
        #[arg(long)]
        grid: String,
    },
    /// Weighted Karcher mean.
    Karcher {
        #[arg(long)]
        weights: Option<String>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Weighted matrix power mean.
    Power {
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[arg(long)]
        weights: Option<String>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Multivariate mean from a template such as `deform(karcher; arith:0.5)`.
    Multimean {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        weights: Option<String>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the seeded invariant suites.
    Check {
        #[arg(long, default_value = "2,3,5")]
        dims: String,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        /// Run only these properties.
        #[arg(long = "property")]
        properties: Vec<String>,
        /// Scale computed outputs by 1 + p before comparing.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        /// List property names and exit.
        #[arg(long)]
        list: bool,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: 4,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<(String, i32), Failure>;

/// Parses arguments, runs the command, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: &Cli) -> std::result::Result<i32, Failure> {
    let (text, code) = dispatch(cli)?;
    match &cli.common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(code)
}

fn dispatch(cli: &Cli) -> Outcome {
    let c = &cli.common;
    let cfg = MatrixSolveConfig {
        tol: c.tol,
        max_iter: c.max_iter,
        ..Default::default()
    };
    cfg.validate()?;
    match &cli.command {
        Command::Mean {
            spec,
            weights,
            inputs,
        } => {
            let a = read_inputs(inputs)?;
            let binary = parse_mean(spec);
            match binary {
                Ok(b) if a.len() == 2 => {
                    let m = binary_mean(&b, &a[0], &a[1])?;
                    Ok((
                        format::matrix(&m, None, c.format.unwrap_or(Format::Json)),
                        0,
                    ))
                }
                _ if parse_multi(spec).is_ok() => multi(c, &cfg, spec, weights.as_deref(), &a),
                Ok(_) => Err(Failure::usage(format!(
                    "binary mean {spec:?} needs exactly two matrices, got {}",
                    a.len()
                ))),
                Err(e) => Err(e.into()),
            }
        }
        Command::Deform {
            tau,
            sigma,
            sigma2,
            start,
            inputs,
        } => {
            let tau = parse_mean(tau)?;
            let s1 = parse_mean(sigma)?;
            let s2 = match sigma2 {
                Some(s) => parse_mean(s)?,
                None => s1.clone(),
            };
            let a = read_inputs(inputs)?;
            let [x, y] = a.as_slice() else {
                return Err(Failure::usage(format!(
                    "deform needs two matrices, got {}",
                    a.len()
                )));
            };
            let cfg = MatrixSolveConfig {
                start: match start {
                    StartArg::Above => Start::FromAbove,
                    StartArg::Arith => Start::ArithmeticMean,
                },
                ..cfg
            };
            let (m, report) = deform_fixed_point(&tau, &s1, &s2, x, y, &cfg)?;
            solved(c, &m, report)
        }
        Command::Repfun { spec, grid } => {
            let spec = parse_mean(spec)?;
            let f = meanforge::rep_of(&spec)?;
            let rows = parse_grid(grid)?
                .into_iter()
                .map(|t| Ok(vec![t, f.eval(t)?]))
                .collect::<meanforge::Result<Vec<_>>>()?;
            Ok((
                format::table(&["t", "f"], &rows, c.format.unwrap_or(Format::Csv)),
                0,
            ))
        }
        Command::Family { tau, s, r, grid } => {
            let tau: MeanSpec = parse_mean(tau)?;
            let (ss, rs, ts) = (parse_list(s, "s")?, parse_list(r, "r")?, parse_grid(grid)?);
            let mut rows = Vec::new();
            for &s in &ss {
                for &r in &rs {
                    let f = tau_family(&tau, s, r)?;
                    for &t in &ts {
                        rows.push(vec![s, r, t, f.eval(t)?]);
                    }
                }
            }
            Ok((
                format::table(
                    &["s", "r", "t", "f"],
                    &rows,
                    c.format.unwrap_or(Format::Csv),
                ),
                0,
            ))
        }
        Command::Karcher { weights, inputs } => {
            let a = read_inputs(inputs)?;
            let w = weights_for(weights.as_deref(), a.len())?;
            let (m, report) = eval_multi(&MultiMeanSpec::Karcher(w), &a, &cfg)?;
            solved(c, &m, report)
        }
        Command::Power { r, weights, inputs } => {
            let a = read_inputs(inputs)?;
            let w = weights_for(weights.as_deref(), a.len())?;
            let (m, report) = eval_multi(&MultiMeanSpec::Power { w, r: *r }, &a, &cfg)?;
            solved(c, &m, report)
        }
        Command::Multimean {
            spec,
            weights,
            inputs,
        } => {
            let a = read_inputs(inputs)?;
            multi(c, &cfg, spec, weights.as_deref(), &a)
        }
        Command::Check {
            dims,
            trials,
            properties,
            perturb,
            list,
        } => {
            if *list {
                return Ok((check::property_names().join("\n") + "\n", 0));
            }
            let seed = c.seed.ok_or_else(|| Failure::usage("check needs --seed"))?;
            let dims = dims
                .split(',')
                .map(|d| match d.trim().parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(Failure::usage(format!("bad dimension {d:?}"))),
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if *trials == 0 {
                return Err(Failure::usage("--trials must be positive"));
            }
            if !perturb.is_finite() || *perturb <= -1.0 {
                return Err(Failure::usage("--perturb must be a finite number above -1"));
            }
            let cfg = check::CheckConfig {
                seed,
                dims,
                trials: *trials,
                perturb: *perturb,
                tol: c.tol,
            };
            let report = check::run(&cfg, properties).map_err(Failure::usage)?;
            let text = match c.format.unwrap_or(Format::Text) {
                Format::Json => {
                    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
                }
                _ => check::render_text(&report),
            };
            Ok((text, if report.passed { 0 } else { 1 }))
        }
    }
}

fn multi(
    c: &Common,
    cfg: &MatrixSolveConfig,
    spec: &str,
    weights: Option<&str>,
    a: &[SpdMatrix],
) -> Outcome {
    let template = parse_multi(spec)?;
    let w = weights_for(weights, a.len())?;
    let spec = template.bind(&w)?;
    let (m, report) = eval_multi(&spec, a, cfg)?;
    solved(c, &m, report)
}

fn solved(c: &Common, m: &SpdMatrix, report: SolveReport) -> Outcome {
    let text = format::matrix(m, Some(&report), c.format.unwrap_or(Format::Json));
    if report.converged {
        Ok((text, 0))
    } else {
        // still emit the last iterate so the caller can inspect it
        eprintln!(
            "error: no convergence after {} iterations (residual {:e})",
            report.iterations, report.residual
        );
        Ok((text, 3))
    }
}

fn read_inputs(paths: &[PathBuf]) -> std::result::Result<Vec<SpdMatrix>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
        let ms = parse_matrix_list(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        out.extend(ms);
    }
    Ok(out)
}

/// Weights from a comma list or JSON array; uniform when absent.
pub fn weights_for(arg: Option<&str>, n: usize) -> std::result::Result<WeightVector, Failure> {
    let Some(arg) = arg else {
        return Ok(WeightVector::uniform(n)?);
    };
    let arg = arg.trim();
    let w: Vec<f64> = if arg.starts_with('[') {
        serde_json::from_str(arg).map_err(|e| Failure::usage(format!("weights: {e}")))?
    } else {
        parse_list(arg, "weights")?
    };
    if w.len() != n {
        return Err(Failure::usage(format!(
            "{} weights for {n} matrices",
            w.len()
        )));
    }
    Ok(WeightVector::new(w)?)
}

fn parse_list(s: &str, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::usage(format!("{what}: bad number {x:?}")))
        })
        .collect()
}

/// `lo:hi:n`, log-spaced and inclusive of both ends.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = || {
        Failure::usage(format!(
            "grid {s:?} must be lo:hi:n with 0 < lo <= hi and n >= 1"
        ))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !(lo > 0.0 && lo <= hi && hi.is_finite()) || (n == 1 && lo != hi) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}
