use fgl_core::lattice::{ball_mask, ExteriorData, Lattice, ScalarField};
use fgl_core::minimize::minimize_energy;

use super::{kernel, minimize_config, resolution};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Series};

/// Exterior data at lattice scale `x / eps`.
fn rescaled(ext: &ExteriorData, eps: f64) -> Result<ExteriorData> {
    match ext {
        ExteriorData::Constant(v) => Ok(ExteriorData::Constant(*v)),
        ExteriorData::HalfspaceSign { axis, threshold } => {
            Ok(ExteriorData::HalfspaceSign { axis: *axis, threshold: threshold / eps })
        }
        ExteriorData::Sampled(_) => Err(LabError::Config("level-set sweep needs halfspace or constant data".into())),
    }
}

/// Distance from a physical point to the limit interface; `None` when the
/// limit set has no boundary.
fn interface_distance(ext: &ExteriorData, p: [f64; 2]) -> Option<f64> {
    match ext {
        ExteriorData::HalfspaceSign { axis, threshold } => Some((p[*axis] - threshold).abs()),
        _ => None,
    }
}

/// Sup distance, in physical cells, from `{|u| ≤ θ} ∩ B_ρ` to the limit
/// interface. The physical cell size is fixed; each `ε` is realized by
/// minimizing `E` on a lattice of spacing `h / ε`. An empty level set has
/// distance 0, a nonempty one without a limit interface has distance `∞`.
pub fn run_levelset_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.eps.is_empty() {
        return Err(LabError::Config("level-set sweep needs eps values".into()));
    }
    let ext = cfg.exterior_data()?;
    let pot = cfg.double_well()?;
    let mcfg = minimize_config(cfg);
    let half = (cfg.domain_radius / cfg.h).ceil() as i64 + cfg.pad;
    let mut series =
        Series::new(&["eps", "lattice_h", "distance", "distance_cells", "level_cells", "converged", "iterations"]);
    let mut resolutions = Vec::new();
    for &eps in &cfg.eps {
        let lat = Lattice::centered(cfg.dim, cfg.h / eps, half)?;
        let kern = kernel(&lat, cfg.s, cfg)?;
        resolutions.push(resolution(&kern));
        let u0 = ScalarField::from_exterior(lat, rescaled(&ext, eps)?)?;
        let omega = ball_mask(&lat, [0.0, 0.0], cfg.domain_radius / eps)?;
        let res = minimize_energy(&kern, &pot, &u0, &omega, &mcfg)?;
        let mut dist = 0.0f64;
        let mut level = 0usize;
        for i in omega.iter() {
            let c = lat.center(i);
            let p = [c[0] * eps, c[1] * eps];
            if p[0].hypot(p[1]) >= cfg.measure_radius || res.field.values()[i].abs() > cfg.theta {
                continue;
            }
            level += 1;
            dist = dist.max(interface_distance(&ext, p).unwrap_or(f64::INFINITY));
        }
        series.push(vec![
            eps,
            lat.h(),
            dist,
            dist / cfg.h,
            level as f64,
            f64::from(u8::from(res.converged)),
            res.iterations as f64,
        ]);
    }
    let mut rep = ExperimentReport::new(cfg, series);
    rep.resolution = resolutions;
    let conv = rep.series.column("converged").unwrap_or_default();
    let cells = rep.series.column("distance_cells").unwrap_or_default();
    let eps = rep.series.column("eps").unwrap_or_default();
    let usable: Vec<usize> = (0..conv.len()).filter(|&k| conv[k] == 1.0).collect();
    rep.criterion(
        "usable eps",
        usable.len() >= 2.min(conv.len()) && usable.last() == conv.len().checked_sub(1).as_ref(),
        format!("{} of {} minimizations converged (the smallest eps must be among them)", usable.len(), conv.len()),
    );
    let d: Vec<f64> = usable.iter().map(|&k| cells[k]).collect();
    let bumps: Vec<String> = usable
        .windows(2)
        .filter(|w| cells[w[1]] > cells[w[0]] + 1.0)
        .map(|w| format!("eps {} -> {}", eps[w[0]], eps[w[1]]))
        .collect();
    rep.criterion(
        "distance nonincreasing",
        bumps.is_empty(),
        if bumps.is_empty() {
            format!("distances in cells {d:?} nonincreasing within one cell")
        } else {
            format!("distance grows by more than one cell at {}", bumps.join(", "))
        },
    );
    let last = d.last().copied().unwrap_or(f64::INFINITY);
    rep.constant("final_distance_cells", last);
    rep.criterion(
        "final distance",
        last <= cfg.delta_target,
        format!("final distance {last} cells, target {} cells", cfg.delta_target),
    );
    Ok(rep.finish())
}
