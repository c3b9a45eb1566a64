//! CSV reports for the table experiment.
//!
//! Layout: `#`-prefixed metadata lines, then the header
//! `perturbation,coherence,E_z_<s>,E_x_<s>,...` and one row per
//! perturbation. Failed-solve counts live in the metadata.

use std::fmt::Write as _;
use std::path::Path;

use dsynth_core::experiments::{Cell, ExperimentConfig, ReportRow, ReportTable};

use crate::config::{parse_config, render_config};
use crate::io::{write_text, IoError};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
}

/// Report as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub config: ExperimentConfig,
    pub generator: String,
    pub wall_time_s: Option<f64>,
    pub rows: Vec<ReportRow>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Everything except the wall-time line, which [`format_report`] prepends.
pub fn format_body(table: &ReportTable) -> String {
    let mut out = String::new();
    writeln!(out, "# generator = {}", table.generator).unwrap();
    for (k, v) in render_config(&table.config) {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    let failed: Vec<String> = table
        .rows
        .iter()
        .map(|r| r.cells.iter().map(|c| c.failed_solves.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    writeln!(out, "# failed_solves = {}", failed.join(";")).unwrap();
    out.push_str("perturbation,coherence");
    for s in &table.config.sparsity_levels {
        write!(out, ",E_z_{s},E_x_{s}").unwrap();
    }
    out.push('\n');
    for r in &table.rows {
        out.push_str(&num(r.perturbation));
        out.push(',');
        out.push_str(&num(r.coherence));
        for c in &r.cells {
            write!(out, ",{},{}", num(c.e_z), num(c.e_x)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn format_report(table: &ReportTable, wall_time_s: Option<f64>) -> String {
    let mut out = String::new();
    if let Some(t) = wall_time_s {
        writeln!(out, "# wall_time_s = {t:.3}").unwrap();
    }
    out.push_str(&format_body(table));
    out
}

pub fn write_report(table: &ReportTable, wall_time_s: Option<f64>, path: &Path) -> Result<(), IoError> {
    write_text(path, &format_report(table, wall_time_s))
}

pub fn parse_report(text: &str, path: &str) -> Result<ParsedReport, ReportError> {
    let err = |line: usize, msg: String| ReportError::Parse { path: path.to_string(), line, msg };
    let mut cfg_text = String::new();
    let mut generator = String::new();
    let mut wall = None;
    let mut failed: Vec<Vec<usize>> = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "generator" => generator = value.to_string(),
                "wall_time_s" => {
                    wall = Some(value.parse().map_err(|_| err(line_no, format!("bad wall time {value:?}")))?)
                }
                "failed_solves" => {
                    failed = value
                        .split(';')
                        .map(|r| r.split_whitespace().map(|x| x.parse().ok()).collect::<Option<Vec<usize>>>())
                        .collect::<Option<_>>()
                        .ok_or_else(|| err(line_no, format!("bad failed_solves {value:?}")))?;
                }
                _ => writeln!(cfg_text, "{key} = {value}").unwrap(),
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(h) = &header else {
            if fields.len() < 2 || fields[0] != "perturbation" || fields[1] != "coherence" || fields.len() % 2 != 0 {
                return Err(err(line_no, format!("unexpected header {line:?}")));
            }
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != h.len() {
            return Err(err(line_no, format!("expected {} fields, found {}", h.len(), fields.len())));
        }
        let vals: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| err(line_no, format!("not a number: {f:?}"))))
            .collect::<Result<_, _>>()?;
        let cells = vals[2..]
            .chunks(2)
            .map(|c| Cell { e_z: c[0], e_x: c[1], failed_solves: 0 })
            .collect();
        rows.push(ReportRow { perturbation: vals[0], coherence: vals[1], cells });
    }
    if header.is_none() {
        return Err(err(0, "missing header".into()));
    }
    let config = parse_config(&cfg_text, ExperimentConfig::default())
        .map_err(|e| err(0, format!("metadata: {e}")))?;
    for (r, counts) in rows.iter_mut().zip(&failed) {
        for (c, n) in r.cells.iter_mut().zip(counts) {
            c.failed_solves = *n;
        }
    }
    Ok(ParsedReport { config, generator, wall_time_s: wall, rows })
}

pub fn read_report(path: &Path) -> Result<ParsedReport, ReportError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    parse_report(&text, &path.display().to_string())
}
