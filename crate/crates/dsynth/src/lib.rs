//! File formats and timing around `dsynth-core`, shared by the `dsynth`
//! binary and its tests.

pub mod config;
pub mod io;
pub mod kv;
pub mod report;

use std::time::Instant;

use dsynth_core::experiments::{run_table_experiment, ExperimentConfig, ReportTable};

/// Runs the table experiment and returns it with its wall time in seconds.
pub fn run_experiment_timed(cfg: &ExperimentConfig) -> dsynth_core::Result<(ReportTable, f64)> {
    let start = Instant::now();
    let table = run_table_experiment(cfg)?;
    Ok((table, start.elapsed().as_secs_f64()))
}
