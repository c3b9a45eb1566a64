//! Shared matrix text format: one row per line, comma-separated decimals,
//! no header. Vectors are single-column matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dsynth_core::DenseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Shape { path: PathBuf, msg: String },
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix, IoError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let f = field.trim();
            let v: f64 = f.parse().map_err(|_| IoError::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: format!("not a number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: format!("non-finite entry {f:?}"),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: format!("expected {} entries, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Shape { path: path.to_path_buf(), msg: "no rows".into() });
    }
    DenseMatrix::from_rows(&rows)
        .map_err(|e| IoError::Shape { path: path.to_path_buf(), msg: e.to_string() })
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, IoError> {
    let text = fs::read_to_string(path)
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    parse_matrix(&text, path)
}

/// Reads a vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, IoError> {
    let m = read_matrix(path)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0)),
        (1, _) => Ok(m.row(0).to_vec()),
        (r, c) => Err(IoError::Shape {
            path: path.to_path_buf(),
            msg: format!("expected a vector, found a {r}x{c} matrix"),
        }),
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("string write");
        }
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        writeln!(out, "{x:.16e}").expect("string write");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), IoError> {
    write_text(path, &format_matrix(m))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), IoError> {
    write_text(path, &format_vector(v))
}
