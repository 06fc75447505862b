use fgl_core::lattice::{ball_mask, psi_field, Lattice, ScalarField};
use fgl_core::minimize::minimize_energy;
use fgl_core::nonlocal::energy_e;

use super::{kernel, minimize_config, regime_exponent, resolution};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::fit::fit_loglog;
use crate::report::{ExperimentReport, Fit, Series};

/// Per radius: minimize on `B_{R+2}` and record `E(u; B_R)` next to the
/// comparison profile energy `E(ψ; B_{R+2})`.
pub fn run_energy_growth(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.radii.len() < 4 {
        return Err(LabError::Config("energy growth needs at least 4 radii".into()));
    }
    let r_max = *cfg.radii.last().unwrap_or(&1.0);
    let half = ((r_max + 2.0) / cfg.h).ceil() as i64 + cfg.pad;
    let lat = Lattice::centered(cfg.dim, cfg.h, half)?;
    let kern = kernel(&lat, cfg.s, cfg)?;
    let pot = cfg.double_well()?;
    let u0 = ScalarField::from_exterior(lat, cfg.exterior_data()?)?;
    let mcfg = minimize_config(cfg);
    let mut series = Series::new(&[
        "radius",
        "energy",
        "psi_energy",
        "domain_energy",
        "seed_energy",
        "converged",
        "iterations",
        "grad_norm",
    ]);
    for &r in &cfg.radii {
        let omega = ball_mask(&lat, [0.0, 0.0], r + 2.0)?;
        let res = minimize_energy(&kern, &pot, &u0, &omega, &mcfg)?;
        let inner = ball_mask(&lat, [0.0, 0.0], r)?;
        let e = energy_e(&kern, &pot, &res.field, &inner)?;
        let psi = psi_field(&lat, r)?;
        let e_psi = energy_e(&kern, &pot, &psi, &omega)?;
        let e_seed = energy_e(&kern, &pot, &u0, &omega)?;
        series.push(vec![
            r,
            e,
            e_psi,
            res.energy(),
            e_seed,
            f64::from(u8::from(res.converged)),
            res.iterations as f64,
            res.grad_norm,
        ]);
    }
    let mut rep = ExperimentReport::new(cfg, series);
    rep.resolution.push(resolution(&kern));
    let col = |n: &str| rep.series.column(n).unwrap_or_default();
    let (radii, energy, psi, dom, seed, conv) =
        (col("radius"), col("energy"), col("psi_energy"), col("domain_energy"), col("seed_energy"), col("converged"));

    let usable: Vec<usize> = (0..radii.len()).filter(|&k| conv[k] == 1.0).collect();
    rep.criterion(
        "usable radii",
        usable.len() >= 4,
        format!("{} of {} minimizations converged", usable.len(), radii.len()),
    );
    // The smallest radius is dropped from every fit.
    let fitted: Vec<usize> = usable.iter().copied().skip(1).collect();
    let expected = regime_exponent(cfg.dim, cfg.s);
    let adjusted = |e: f64, r: f64| if cfg.s == 0.5 { e / r.ln() } else { e };
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&k| adjusted(v[k], radii[k])).collect::<Vec<_>>();
    let xs: Vec<f64> = fitted.iter().map(|&k| radii[k]).collect();
    let label = if cfg.s == 0.5 { "E / log R" } else { "E" };

    let mut slopes = Vec::new();
    for (name, values) in [("minimizer", &energy), ("psi", &psi)] {
        match fit_loglog(&xs, &pick(values, &fitted)) {
            Some(fit) => {
                let ok = (fit.slope - expected).abs() <= cfg.slope_tol;
                rep.criterion(
                    &format!("{name} exponent"),
                    ok,
                    format!("log-log slope of {label} = {:.4}, regime exponent {expected} +/- {}", fit.slope, cfg.slope_tol),
                );
                if name == "minimizer" {
                    rep.criterion(
                        "below growth bound",
                        fit.slope <= expected + cfg.slope_tol,
                        format!("slope {:.4} <= {}", fit.slope, expected + cfg.slope_tol),
                    );
                    if cfg.s != 0.5 {
                        let worst = fit.max_abs_residual();
                        rep.criterion("log-log residuals", worst < 0.2, format!("max |residual| = {worst:.4}"));
                    }
                }
                slopes.push((name, fit.slope));
                rep.fits.push(Fit {
                    name: format!("{name}: log {label} vs log R"),
                    expected,
                    tolerance: cfg.slope_tol,
                    radii: xs.clone(),
                    fit,
                });
            }
            None => rep.criterion(&format!("{name} exponent"), false, "not enough points to fit"),
        }
    }
    for (name, v) in slopes {
        rep.constant(&format!("{name}_slope"), v);
    }

    if fitted.len() >= 2 {
        let (a, b) = (fitted[fitted.len() - 2], fitted[fitted.len() - 1]);
        if cfg.s == 0.5 {
            let (qa, qb) = (energy[a] / radii[a].ln(), energy[b] / radii[b].ln());
            let var = (qa - qb).abs() / qa.min(qb);
            rep.constant("log_variation", var);
            rep.criterion(
                "E / log R stable",
                var < 0.25,
                format!("E/log R = {qa:.5} at R = {}, {qb:.5} at R = {}: variation {var:.4}", radii[a], radii[b]),
            );
        } else if cfg.s > 0.5 {
            let first = fitted[0];
            let ratio = energy[b] / energy[first];
            rep.constant("energy_ratio", ratio);
            rep.criterion(
                "energy saturates",
                ratio <= 1.3,
                format!("E(B_{}) / E(B_{}) = {ratio:.4}", radii[b], radii[first]),
            );
        }
    }
    let psi_bound = (0..radii.len()).all(|k| psi[k] >= energy[k]);
    rep.criterion("psi bounds minimizer", psi_bound, "E(psi; B_{R+2}) >= E(u; B_R) at every radius");
    let minimal = (0..radii.len()).all(|k| dom[k] <= seed[k]);
    rep.criterion("minimality", minimal, "E(u; B_{R+2}) <= E(seed; B_{R+2}) at every radius");
    Ok(rep.finish())
}
