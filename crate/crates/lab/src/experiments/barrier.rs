use fgl_core::barrier::{estimate_c5, verify_al1, verify_al2, write_radial_profile, BarrierSpec, AL1_MIN_FRACTION};
use fgl_core::lattice::Lattice;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{ExperimentReport, Resolution, Series};

const PROFILE_SAMPLES: usize = 400;

/// Largest upper/lower ratio accepted for the two-sided profile bound.
pub const AL2_MAX_RATIO: f64 = 50.0;

fn profile_series(spec: &BarrierSpec) -> Result<Series> {
    let mut buf = Vec::new();
    write_radial_profile(spec, PROFILE_SAMPLES, spec.big_r * 0.05, &mut buf)?;
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut series = Series::new(&cols);
    for rec in rdr.records() {
        let rec = rec?;
        series.push(rec.iter().map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect());
    }
    Ok(series)
}

/// Calibrates `C5` at `r = barrier_r`, then checks the barrier inequality
/// and the two-sided profile bound at every lattice center in `B_R`.
pub fn run_barrier(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let spec = BarrierSpec::calibrate(cfg.dim, cfg.s, cfg.tau, cfg.barrier_r, cfg.c5_samples)?;
    let c5_fine = estimate_c5(cfg.dim, cfg.s, cfg.barrier_r, 2 * cfg.c5_samples)?;
    let half = ((spec.big_r + 4.0) / cfg.h).ceil() as i64 + cfg.pad;
    let lat = Lattice::centered(cfg.dim, cfg.h, half)?;
    let al1 = verify_al1(&spec, &lat)?;
    let al2 = verify_al2(&spec, &lat)?;

    let mut rep = ExperimentReport::new(cfg, profile_series(&spec)?);
    rep.resolution.push(Resolution {
        dim: lat.dim(),
        h: lat.h(),
        cells: lat.len(),
        near_radius: 0,
        quad_tol: 0.0,
    });
    for (k, v) in [
        ("c5", spec.c5),
        ("c5_doubled_samples", c5_fine),
        ("c_o", spec.c_o),
        ("R", spec.big_r),
        ("beta", spec.beta),
        ("al1_fraction", al1.fraction),
        ("al1_worst_ratio", al1.worst_ratio),
        ("al2_sup", al2.sup),
        ("al2_inf", al2.inf),
        ("al2_ratio", al2.ratio),
        ("al2_c", al2.c_fit),
    ] {
        rep.constant(k, v);
    }
    let drift = (c5_fine - spec.c5).abs() / spec.c5;
    rep.criterion(
        "C5 stable",
        drift < 0.1,
        format!("C5 = {:.6} with {} samples, {c5_fine:.6} with twice as many", spec.c5, cfg.c5_samples),
    );
    rep.criterion(
        "barrier inequality",
        al1.passes,
        format!(
            "holds within {}% slack at {} of {} centers ({:.4}, need {AL1_MIN_FRACTION}); worst ratio {:.4} at |x| = {:.1}",
            al1.slack * 100.0,
            al1.holding,
            al1.samples,
            al1.fraction,
            al1.worst_ratio,
            al1.worst_radius
        ),
    );
    rep.criterion(
        "profile bound",
        al2.c_fit.is_finite() && al2.ratio < AL2_MAX_RATIO,
        format!(
            "(1+w)(R+1-|x|)^2s in [{:.4}, {:.4}]: C = {:.4}, upper/lower ratio {:.2} (need < {AL2_MAX_RATIO})",
            al2.inf, al2.sup, al2.c_fit, al2.ratio
        ),
    );
    rep.criterion("w = 1 outside B_R", al1.outside_exact, "exact equality at every center outside B_R");
    rep.detail("spec", &spec)?;
    rep.detail("al1_histogram", &al1.histogram)?;
    Ok(rep.finish())
}
