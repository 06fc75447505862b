use std::path::Path;

use fgl_core::lattice::Lattice;
use fgl_core::nonlocal::{cache_path, load_kernel, load_or_build_kernel};

use super::resolution;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{ExperimentReport, Series};

/// Builds (or reuses) the near-weight table under `out/kernel-cache` and
/// checks that reading it back reproduces it bit for bit.
pub fn run_kernel_cache(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    let dir = out.join("kernel-cache");
    let lat = Lattice::centered(cfg.dim, cfg.h, cfg.box_half)?;
    let built = load_or_build_kernel(&dir, &lat, cfg.s, cfg.near_radius, cfg.quad_tol)?;
    let path = cache_path(&dir, &lat, cfg.s, cfg.near_radius, cfg.quad_tol);
    let loaded = load_kernel(&path, &lat, cfg.s, cfg.near_radius, cfg.quad_tol)?;
    let mut series = Series::new(&["index", "weight"]);
    for (k, &w) in built.unit_near().iter().enumerate() {
        series.push(vec![k as f64, w]);
    }
    let mut rep = ExperimentReport::new(cfg, series);
    rep.resolution.push(resolution(&built));
    let same = built.unit_near().len() == loaded.unit_near().len()
        && built.unit_near().iter().zip(loaded.unit_near()).all(|(a, b)| a.to_bits() == b.to_bits());
    rep.criterion("round trip", same, format!("{} near weights", built.unit_near().len()));
    rep.detail("file", &path.file_name().map(|f| f.to_string_lossy().into_owned()))?;
    Ok(rep.finish())
}
