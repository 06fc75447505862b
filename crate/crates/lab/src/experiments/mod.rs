//! The experiment drivers. Each returns a finished [`ExperimentReport`].

mod barrier;
mod density;
mod growth;
mod iteration;
mod kernel_cache;
mod levelset;
mod suites;

pub use barrier::run_barrier;
pub use density::{doubling_constant, doubling_sigma, run_density, DensityRecord, DensityTrace};
pub use growth::run_energy_growth;
pub use iteration::{check_iteration_lemma, run_iterate, synthetic_samples, Conclusion, IterationReport};
pub use kernel_cache::run_kernel_cache;
pub use levelset::run_levelset_convergence;
pub use suites::{brute_force_l, run_gmt_suite, run_sobolev_suite};

use std::path::Path;

use fgl_core::lattice::Lattice;
use fgl_core::minimize::MinimizeConfig;
use fgl_core::nonlocal::{build_kernel, KernelTable};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::report::{ExperimentReport, Resolution};

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    match cfg.experiment {
        Experiment::EnergyGrowth => run_energy_growth(cfg),
        Experiment::Density => run_density(cfg),
        Experiment::Levelset => run_levelset_convergence(cfg),
        Experiment::Gmt => run_gmt_suite(cfg),
        Experiment::Sobolev => run_sobolev_suite(cfg),
        Experiment::Barrier => run_barrier(cfg),
        Experiment::Iterate => run_iterate(cfg),
        Experiment::KernelCache => run_kernel_cache(cfg, out),
    }
}

pub(crate) fn minimize_config(cfg: &ExperimentConfig) -> MinimizeConfig {
    MinimizeConfig {
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        energy_tol: cfg.energy_tol,
        ..MinimizeConfig::default()
    }
}

pub(crate) fn kernel(lattice: &Lattice, s: f64, cfg: &ExperimentConfig) -> Result<KernelTable> {
    Ok(build_kernel(lattice, s, cfg.near_radius, cfg.quad_tol)?)
}

pub(crate) fn resolution(kern: &KernelTable) -> Resolution {
    let l = kern.lattice();
    Resolution { dim: l.dim(), h: l.h(), cells: l.len(), near_radius: kern.near_radius(), quad_tol: kern.quad_tol() }
}

/// Exponent of `R` in the energy bound, after dividing by `log R` at `s = 1/2`.
pub(crate) fn regime_exponent(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    if s < 0.5 {
        n - 2.0 * s
    } else {
        n - 1.0
    }
}
