//! Textual mean specifications.
//!
//! Binary means:
//!
//! ```text
//! left | right
//! arith[:α] | geom[:α] | harm[:α]       (also ∇, #, !; α defaults to 0.5)
//! pow:s,r | pdiff:q
//! dyadic(BASE; k/2^n)
//! deform(TAU; SIGMA)
//! ```
//!
//! Multivariate means take their weights separately:
//!
//! ```text
//! arith | harm | karcher | powmean:r=R
//! deform(BASE; SIGMA)                   one σ for every variable
//! deform(BASE; SIGMA1; ...; SIGMAn)
//! adjoint(BASE)
//! ```
//!
//! `Display` on [`MeanSpec`] and [`MultiTemplate`] prints the canonical form
//! that these parsers read back.

use std::fmt;

use crate::error::{Error, Result};
use crate::multimean::{MultiMeanSpec, WeightVector};
use crate::repfun::MeanSpec;

fn err(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn number(s: &str) -> Result<f64> {
    let s = s.trim();
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(format!("expected a number, found {s:?}")))
}

/// Splits on `;` outside parentheses.
fn split_top(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(err("unbalanced parentheses"));
                }
            }
            ';' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(err("unbalanced parentheses"));
    }
    parts.push(s[start..].trim());
    Ok(parts)
}

/// `head(args)` → `(head, [args split on top-level ';'])`.
fn call(s: &str) -> Result<Option<(&str, Vec<&str>)>> {
    let Some(open) = s.find('(') else {
        return Ok(None);
    };
    if !s.ends_with(')') {
        return Err(err(format!("trailing text after ')' in {s:?}")));
    }
    let head = s[..open].trim();
    let args = split_top(&s[open + 1..s.len() - 1])?;
    if args.iter().any(|a| a.is_empty()) {
        return Err(err(format!("empty argument in {s:?}")));
    }
    Ok(Some((head, args)))
}

fn dyadic_fraction(s: &str) -> Result<(u64, u32)> {
    let (k, den) = s
        .split_once('/')
        .ok_or_else(|| err(format!("expected k/2^n, found {s:?}")))?;
    let k: u64 = k
        .trim()
        .parse()
        .map_err(|_| err(format!("bad numerator {k:?}")))?;
    let den = den.trim();
    let den: u64 = match den.strip_prefix("2^") {
        Some(p) => {
            let p: u32 = p.parse().map_err(|_| err(format!("bad exponent {p:?}")))?;
            if p > 20 {
                return Err(err("dyadic level exceeds 20"));
            }
            1 << p
        }
        None => den
            .parse()
            .map_err(|_| err(format!("bad denominator {den:?}")))?,
    };
    if den == 0 || !den.is_power_of_two() {
        return Err(err(format!("denominator {den} is not a power of two")));
    }
    Ok((k, den.trailing_zeros()))
}

/// Parses a binary mean specification.
pub fn parse_mean(s: &str) -> Result<MeanSpec> {
    let s = s.trim();
    if s.is_empty() {
        return Err(err("empty mean specification"));
    }
    if let Some((head, args)) = call(s)? {
        let spec = match (head, args.as_slice()) {
            ("deform", [tau, sigma]) => MeanSpec::deformed(parse_mean(tau)?, parse_mean(sigma)?),
            ("deform", _) => return Err(err("deform(TAU; SIGMA) takes two arguments")),
            ("dyadic", [base, frac]) => {
                let (k, level) = dyadic_fraction(frac)?;
                MeanSpec::Dyadic {
                    base: Box::new(parse_mean(base)?),
                    k,
                    level,
                }
            }
            ("dyadic", _) => return Err(err("dyadic(BASE; k/2^n) takes two arguments")),
            _ => return Err(err(format!("unknown mean {head:?}"))),
        };
        spec.validate()?;
        return Ok(spec);
    }
    let (name, params) = match s.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p.trim())),
        None => (s, None),
    };
    let weight = |p: Option<&str>| p.map(number).unwrap_or(Ok(0.5));
    let spec = match name {
        "left" if params.is_none() => MeanSpec::Left,
        "right" if params.is_none() => MeanSpec::Right,
        "arith" | "∇" => MeanSpec::Arithmetic(weight(params)?),
        "geom" | "#" => MeanSpec::Geometric(weight(params)?),
        "harm" | "!" => MeanSpec::Harmonic(weight(params)?),
        "pow" => {
            let p = params.ok_or_else(|| err("pow needs parameters s,r"))?;
            let (sv, rv) = p
                .split_once(',')
                .ok_or_else(|| err(format!("pow expects s,r, found {p:?}")))?;
            MeanSpec::power(number(sv)?, number(rv)?)
        }
        "pdiff" => MeanSpec::PowerDifference(number(
            params.ok_or_else(|| err("pdiff needs a parameter q"))?,
        )?),
        _ => return Err(err(format!("unknown mean {s:?}"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// A multivariate mean without its weights.
#[derive(Clone, Debug, PartialEq)]
pub enum MultiTemplate {
    Arithmetic,
    Harmonic,
    Karcher,
    Power(f64),
    /// A single σ applies to every variable.
    Deformed {
        base: Box<MultiTemplate>,
        sigmas: Vec<MeanSpec>,
    },
    Adjoint(Box<MultiTemplate>),
}

impl fmt::Display for MultiTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiTemplate::Arithmetic => write!(f, "arith"),
            MultiTemplate::Harmonic => write!(f, "harm"),
            MultiTemplate::Karcher => write!(f, "karcher"),
            MultiTemplate::Power(r) => write!(f, "powmean:r={r}"),
            MultiTemplate::Deformed { base, sigmas } => {
                write!(f, "deform({base}")?;
                for s in sigmas {
                    write!(f, "; {s}")?;
                }
                write!(f, ")")
            }
            MultiTemplate::Adjoint(b) => write!(f, "adjoint({b})"),
        }
    }
}

impl MultiTemplate {
    /// Attaches weights to every base mean.
    pub fn bind(&self, w: &WeightVector) -> Result<MultiMeanSpec> {
        let spec = match self {
            MultiTemplate::Arithmetic => MultiMeanSpec::Arithmetic(w.clone()),
            MultiTemplate::Harmonic => MultiMeanSpec::Harmonic(w.clone()),
            MultiTemplate::Karcher => MultiMeanSpec::Karcher(w.clone()),
            MultiTemplate::Power(r) => MultiMeanSpec::Power {
                w: w.clone(),
                r: *r,
            },
            MultiTemplate::Deformed { base, sigmas } => {
                let sigmas = match sigmas.as_slice() {
                    [one] => vec![one.clone(); w.len()],
                    many => many.to_vec(),
                };
                MultiMeanSpec::deformed(base.bind(w)?, sigmas)
            }
            MultiTemplate::Adjoint(b) => MultiMeanSpec::Adjoint(Box::new(b.bind(w)?)),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses a multivariate mean template.
pub fn parse_multi(s: &str) -> Result<MultiTemplate> {
    let s = s.trim();
    if s.is_empty() {
        return Err(err("empty mean specification"));
    }
    if let Some((head, args)) = call(s)? {
        return match (head, args.as_slice()) {
            ("adjoint", [base]) => Ok(MultiTemplate::Adjoint(Box::new(parse_multi(base)?))),
            ("deform", [base, rest @ ..]) if !rest.is_empty() => {
                let sigmas = rest
                    .iter()
                    .map(|r| parse_mean(r))
                    .collect::<Result<Vec<_>>>()?;
                if sigmas.iter().any(MeanSpec::is_left) {
                    return Err(err(
                        "a deforming mean must differ from the left trivial mean",
                    ));
                }
                Ok(MultiTemplate::Deformed {
                    base: Box::new(parse_multi(base)?),
                    sigmas,
                })
            }
            _ => Err(err(format!("unknown multivariate mean {s:?}"))),
        };
    }
    match s {
        "arith" => Ok(MultiTemplate::Arithmetic),
        "harm" => Ok(MultiTemplate::Harmonic),
        "karcher" => Ok(MultiTemplate::Karcher),
        _ => {
            let r = s
                .strip_prefix("powmean:")
                .and_then(|p| p.trim().strip_prefix("r="))
                .ok_or_else(|| err(format!("unknown multivariate mean {s:?}")))?;
            let r = number(r)?;
            if r == 0.0 || !(-1.0..=1.0).contains(&r) {
                return Err(Error::Parameter(format!(
                    "r = {r} must lie in [-1, 1] \\ {{0}}"
                )));
            }
            Ok(MultiTemplate::Power(r))
        }
    }
}
