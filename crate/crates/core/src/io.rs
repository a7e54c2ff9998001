//! Matrix file formats.
//!
//! JSON: `{"dim": d, "data": [d*d reals, row-major]}`; a list of matrices is
//! a JSON array of such objects. Plain text: `d` on the first line followed by
//! `d` whitespace-separated rows. Numbers are written in shortest round-trip
//! form, so write followed by read reproduces every entry exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixRecord {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_spd(m: &SpdMatrix) -> Self {
        MatrixRecord {
            dim: m.dim(),
            data: m.to_row_major(),
        }
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::from_row_slice(self.dim, &self.data)
    }
}

pub fn to_json(m: &SpdMatrix) -> String {
    serde_json::to_string(&MatrixRecord::from_spd(m)).expect("finite entries serialize")
}

pub fn list_to_json(ms: &[SpdMatrix]) -> String {
    let recs: Vec<MatrixRecord> = ms.iter().map(MatrixRecord::from_spd).collect();
    serde_json::to_string(&recs).expect("finite entries serialize")
}

pub fn to_text(m: &SpdMatrix) -> String {
    let d = m.dim();
    let data = m.to_row_major();
    let mut out = format!("{d}\n");
    for row in data.chunks(d) {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_text(s: &str) -> Result<SpdMatrix> {
    let mut tokens = s.split_whitespace();
    let dim: usize = tokens
        .next()
        .ok_or_else(|| Error::Format("missing dimension".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("bad dimension: {e}")))?;
    let data: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad entry {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if data.len() != dim * dim {
        return Err(Error::Format(format!(
            "expected {} entries, found {}",
            dim * dim,
            data.len()
        )));
    }
    SpdMatrix::from_row_slice(dim, &data)
}

/// Parses one matrix, JSON or plain text, chosen by the first character.
pub fn parse_matrix(s: &str) -> Result<SpdMatrix> {
    let trimmed = s.trim_start();
    if trimmed.starts_with('{') {
        let rec: MatrixRecord =
            serde_json::from_str(trimmed).map_err(|e| Error::Format(e.to_string()))?;
        rec.to_spd()
    } else {
        parse_text(trimmed)
    }
}

/// Parses a list of matrices. A single matrix is accepted as a list of one.
pub fn parse_matrix_list(s: &str) -> Result<Vec<SpdMatrix>> {
    let trimmed = s.trim_start();
    if trimmed.starts_with('[') {
        let recs: Vec<MatrixRecord> =
            serde_json::from_str(trimmed).map_err(|e| Error::Format(e.to_string()))?;
        recs.iter().map(MatrixRecord::to_spd).collect()
    } else {
        Ok(vec![parse_matrix(trimmed)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::random_spd;
    use proptest::prelude::*;

    #[test]
    fn parses_both_formats() {
        let j = parse_matrix(r#"{"dim": 2, "data": [2.0, 0.5, 0.5, 1.0]}"#).unwrap();
        let t = parse_matrix("2\n2 0.5\n0.5 1\n").unwrap();
        assert_eq!(j, t);
        let list = parse_matrix_list(r#"[{"dim":1,"data":[3]},{"dim":1,"data":[4]}]"#).unwrap();
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_matrix("2\n1 0\n0").is_err());
        assert!(parse_matrix(r#"{"dim": 2, "data": [1]}"#).is_err());
        assert!(parse_matrix("x").is_err());
        assert!(parse_matrix("2\n1 2\n2 1\n").is_err());
    }

    proptest! {
        #[test]
        fn write_read_is_exact(seed in 0u64..10_000, dim in 1usize..6) {
            let m = random_spd(dim, seed, 1e3);
            prop_assert_eq!(&parse_matrix(&to_json(&m)).unwrap(), &m);
            prop_assert_eq!(&parse_matrix(&to_text(&m)).unwrap(), &m);
        }
    }
}
