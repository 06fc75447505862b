//! Experiment runner for fractional Ginzburg–Landau energies: configuration,
//! the experiment drivers, line fits and reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::{LabError, Result};
pub use report::ExperimentReport;

use std::path::Path;
use std::time::Instant;

use report::Timing;

/// Runs one experiment on a pool of `threads` workers (0: rayon default),
/// writes its outputs under `out` and returns the report.
pub fn execute(cfg: &ExperimentConfig, out: &Path, threads: usize) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Experiment(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let rep = pool.install(|| experiments::run(cfg, out))?;
    let timing = Timing { wall_seconds: start.elapsed().as_secs_f64(), threads: pool.current_num_threads() };
    rep.write(out, &timing)?;
    Ok(rep)
}
