//! File formats: returns CSV, svmlight/LIBSVM sparse text, the JSON problem
//! container, and the JSON solve report.
//!
//! The problem container stores dense vectors inline and sparse matrices as
//! zero-based (row, col, value) triplet lists under the field names c, Q, C,
//! d, A, b, D, a_l, a_u. Infinite bounds serialize as null.

use crate::linalg::CscMatrix;
use crate::model::{LabeledDataset, ModelError, ReturnsDataset};
use crate::pmm::SolveReport;
use crate::problem::ProblemData;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Comma-separated returns, one scenario per row. A non-numeric first row is
/// treated as a header; a final column headed "index" is split off as the
/// benchmark series and its mean becomes the return floor.
pub fn parse_returns_csv(text: &str) -> Result<ReturnsDataset, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut index_col = false;
    let mut width = None;
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && !saw_header {
            let numeric = cells.iter().all(|c| c.parse::<f64>().is_ok());
            if !numeric {
                saw_header = true;
                width = Some(cells.len());
                index_col = cells
                    .last()
                    .map_or(false, |name| name.eq_ignore_ascii_case("index"));
                continue;
            }
        }
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(parse_err(
                lineno,
                format!("expected {expected} cells, found {}", cells.len()),
            ));
        }
        let mut row = Vec::with_capacity(cells.len());
        for cell in &cells {
            row.push(cell.parse::<f64>().map_err(|_| {
                parse_err(lineno, format!("cannot parse {cell:?} as a number"))
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    let benchmark = if index_col {
        let mut sum = 0.0;
        for row in rows.iter_mut() {
            sum += row.pop().expect("rows are non-empty");
        }
        Some(sum / rows.len() as f64)
    } else {
        None
    };
    Ok(ReturnsDataset::from_rows(rows, benchmark)?)
}

pub fn load_returns_csv(path: impl AsRef<Path>) -> Result<ReturnsDataset, IoError> {
    parse_returns_csv(&std::fs::read_to_string(path)?)
}

/// Lines of "label idx:val idx:val ..." with 1-based strictly ascending
/// indices. The feature dimension is the largest index in the file.
pub fn parse_svmlight(text: &str) -> Result<LabeledDataset, IoError> {
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut dim = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("non-empty line");
        let label: f64 = label
            .parse()
            .map_err(|_| parse_err(lineno, format!("cannot parse label {label:?}")))?;
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("malformed pair {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based"));
            }
            if idx <= prev {
                return Err(parse_err(
                    lineno,
                    format!("feature index {idx} not ascending after {prev}"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value {val:?}")))?;
            row.push((idx - 1, val));
            prev = idx;
            dim = dim.max(idx);
        }
        features.push(row);
        targets.push(label);
    }
    if targets.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    Ok(LabeledDataset::new(features, dim, targets)?)
}

pub fn load_svmlight(path: impl AsRef<Path>) -> Result<LabeledDataset, IoError> {
    parse_svmlight(&std::fs::read_to_string(path)?)
}

pub fn svmlight_to_string(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for (feats, y) in ds.features.iter().zip(&ds.targets) {
        out.push_str(&y.to_string());
        for &(j, v) in feats {
            out.push_str(&format!(" {}:{}", j + 1, v));
        }
        out.push('\n');
    }
    out
}

pub fn write_svmlight(path: impl AsRef<Path>, ds: &LabeledDataset) -> Result<(), IoError> {
    Ok(std::fs::write(path, svmlight_to_string(ds))?)
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    c: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<(usize, usize, f64)>,
    #[serde(rename = "C")]
    c_mat: Vec<(usize, usize, f64)>,
    d: Vec<f64>,
    #[serde(rename = "A")]
    a_mat: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    #[serde(rename = "D")]
    d_diag: Vec<f64>,
    a_l: Vec<Option<f64>>,
    a_u: Vec<Option<f64>>,
}

fn triplets(m: &CscMatrix) -> Vec<(usize, usize, f64)> {
    m.iter().collect()
}

pub fn problem_to_json(p: &ProblemData) -> String {
    let file = ProblemJson {
        c: p.c.clone(),
        q: triplets(&p.q),
        c_mat: triplets(&p.c_mat),
        d: p.d.clone(),
        a_mat: triplets(&p.a_mat),
        b: p.b.clone(),
        d_diag: p.d_diag.clone(),
        a_l: p.a_l.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        a_u: p.a_u.iter().map(|v| v.is_finite().then_some(*v)).collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

pub fn problem_from_json(text: &str) -> Result<ProblemData, IoError> {
    let file: ProblemJson = serde_json::from_str(text)?;
    let n = file.c.len();
    let l = file.d.len();
    let m = file.b.len();
    let mat = |r, c, t: &[(usize, usize, f64)], name: &str| {
        CscMatrix::from_triplets(r, c, t)
            .map_err(|e| IoError::Invalid(format!("{name}: {e}")))
    };
    let p = ProblemData::new(
        file.c,
        mat(n, n, &file.q, "Q")?,
        mat(l, n, &file.c_mat, "C")?,
        file.d,
        mat(m, n, &file.a_mat, "A")?,
        file.b,
        file.d_diag,
        file.a_l
            .iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect(),
        file.a_u.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
        0.0,
    );
    p.validate().map_err(|vs| {
        let msgs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        IoError::Invalid(msgs.join("; "))
    })?;
    Ok(p)
}

pub fn load_problem_json(path: impl AsRef<Path>) -> Result<ProblemData, IoError> {
    problem_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_problem_json(path: impl AsRef<Path>, p: &ProblemData) -> Result<(), IoError> {
    Ok(std::fs::write(path, problem_to_json(p))?)
}

pub fn report_to_json(report: &SolveReport) -> String {
    serde_json::to_string_pretty(report).expect("plain data serializes")
}
