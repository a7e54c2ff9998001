//! Output formatting.

use meanforge::io::{self, MatrixRecord};
use meanforge::{SolveReport, SpdMatrix};
use serde::Serialize;

/// `%.15g`: 15 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e15)`.
pub fn g15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.14e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mant), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Serialize)]
struct MatrixWithReport<'a> {
    #[serde(flatten)]
    matrix: MatrixRecord,
    report: &'a SolveReport,
}

/// Renders a matrix, with the solver report when one exists (JSON only).
pub fn matrix(m: &SpdMatrix, report: Option<&SolveReport>, format: Format) -> String {
    match format {
        Format::Json => match report {
            Some(report) => {
                let rec = MatrixWithReport {
                    matrix: MatrixRecord::from_spd(m),
                    report,
                };
                serde_json::to_string(&rec).expect("finite entries serialize") + "\n"
            }
            None => io::to_json(m) + "\n",
        },
        Format::Text => io::to_text(m),
        Format::Csv => {
            let d = m.dim();
            let data = m.to_row_major();
            data.chunks(d)
                .map(|row| {
                    let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                    cells.join(",") + "\n"
                })
                .collect()
        }
    }
}

/// CSV table with a header row.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| g15(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Same data as [`csv`] in JSON (array of objects) or aligned text.
pub fn table(header: &[&str], rows: &[Vec<f64>], format: Format) -> String {
    match format {
        Format::Csv => csv(header, rows),
        Format::Text => {
            let mut out = header.join("\t");
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| g15(*x)).collect();
                out.push_str(&cells.join("\t"));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| {
                    header
                        .iter()
                        .zip(row)
                        .map(|(h, v)| (h.to_string(), serde_json::json!(v)))
                        .collect()
                })
                .collect();
            serde_json::to_string(&objs).expect("finite entries serialize") + "\n"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g15_matches_printf() {
        assert_eq!(g15(1.0), "1");
        assert_eq!(g15(0.1 + 0.2), "0.3");
        assert_eq!(g15(2.25), "2.25");
        assert_eq!(g15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(g15(100.0), "100");
        assert_eq!(g15(1e-7), "1e-7");
        assert_eq!(g15(1.5e20), "1.5e20");
        assert_eq!(g15(-0.0001), "-0.0001");
        assert_eq!(g15(123456789012345.0), "123456789012345");
        assert_eq!(g15(std::f64::consts::PI * 1e-5), "3.14159265358979e-5");
    }

    #[test]
    fn csv_rows() {
        assert_eq!(csv(&["t", "f"], &[vec![1.0, 1.0]]), "t,f\n1,1\n");
    }
}
