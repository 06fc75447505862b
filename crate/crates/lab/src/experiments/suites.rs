use std::collections::{BTreeMap, HashMap};

use fgl_core::lattice::{ball_mask, measure, CellSet, Lattice};
use fgl_core::nonlocal::Region;
use fgl_core::setgeom::{
    check_gmt, generate_pairs, generate_sets, l_interaction, sobolev_set_bound, sobolev_set_bounds, CellTarget,
    CorpusParams, GmtRegime,
};
use rayon::prelude::*;

use super::{kernel, resolution};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Series};

/// Relative change of the small-`s` GMT ratios allowed under 2x refinement.
pub const REFINE_TOL: f64 = 0.05;
/// Relative mismatch allowed between `L` and the brute-force oracle.
pub const ORACLE_TOL: f64 = 0.02;
/// Relative tolerance of the one-dimensional Sobolev value.
pub const SOBOLEV_1D_TOL: f64 = 0.01;
/// The ball may exceed the corpus minimum by this factor.
pub const BALL_SLACK: f64 = 1.05;

/// Midpoint sum of `|x - y|^{-e}` over `m^n` sub-cells of the unit cell at
/// the origin and of the unit cell at integer offset `d`.
fn midpoint_pair(dim: usize, d: [i64; 2], e: f64, m: usize) -> f64 {
    let hs = 1.0 / m as f64;
    let sub: Vec<[f64; 2]> = if dim == 1 {
        (0..m).map(|a| [(a as f64 + 0.5) * hs, 0.0]).collect()
    } else {
        (0..m * m).map(|k| [((k / m) as f64 + 0.5) * hs, ((k % m) as f64 + 0.5) * hs]).collect()
    };
    let off = [d[0] as f64, d[1] as f64];
    let mut acc = 0.0;
    for x in &sub {
        for y in &sub {
            let dx = off[0] + y[0] - x[0];
            let dy = off[1] + y[1] - x[1];
            acc += (dx * dx + dy * dy).powf(-e / 2.0);
        }
    }
    acc * hs.powi(2 * dim as i32)
}

/// Brute-force `∫_{C_0} ∫_{C_d} |x - y|^{-n-2s}` for unit cells. Touching
/// pairs converge slowly under subdivision, with error of order
/// `m^{-(1-2s)}` across a shared face and `m^{-(n-2s)}` at a shared corner,
/// so those are extrapolated from `m` and `2m` with the known order.
fn unit_pair_oracle(dim: usize, d: [i64; 2], s: f64, m: usize) -> f64 {
    let e = dim as f64 + 2.0 * s;
    let cheb = d[0].abs().max(d[1].abs());
    if cheb <= 1 {
        let zeros = d[..dim].iter().filter(|&&c| c == 0).count();
        let p = if zeros == dim - 1 { 1.0 - 2.0 * s } else { dim as f64 - 2.0 * s };
        let coarse = midpoint_pair(dim, d, e, m);
        let fine = midpoint_pair(dim, d, e, 2 * m);
        let q = 2f64.powf(p);
        return (q * fine - coarse) / (q - 1.0);
    }
    let sub = match cheb {
        2..=3 => 16,
        4..=8 => 8,
        _ => 4,
    };
    midpoint_pair(dim, d, e, sub)
}

/// `L(A, D)` over the lattice box only, from brute-force sub-cell sums that
/// share nothing with the kernel tables. Needs `s < 1/2` (for larger `s` the
/// interaction of touching sets diverges). `m` is the base subdivision of
/// touching cell pairs.
pub fn brute_force_l(a: &CellSet, d: &CellSet, s: f64, m: usize) -> Result<f64> {
    if !(s > 0.0 && s < 0.5) {
        return Err(LabError::Experiment(format!("brute-force oracle needs s in (0, 1/2), got {s}")));
    }
    if m < 2 {
        return Err(LabError::Experiment("oracle subdivision must be at least 2".into()));
    }
    let lat = a.lattice();
    lat.check_same(d.lattice())?;
    if a.overlap_count(d)? > 0 {
        return Err(LabError::Experiment("A and D overlap".into()));
    }
    let dim = lat.dim();
    let mut counts: BTreeMap<[i64; 2], u64> = BTreeMap::new();
    let dg: Vec<[i64; 2]> = d.iter().map(|j| lat.global(j)).collect();
    for i in a.iter() {
        let gi = lat.global(i);
        for gj in &dg {
            let mut k = [(gj[0] - gi[0]).abs(), (gj[1] - gi[1]).abs()];
            if dim == 2 && k[1] > k[0] {
                k.swap(0, 1);
            }
            *counts.entry(k).or_insert(0) += 1;
        }
    }
    let keys: Vec<[i64; 2]> = counts.keys().copied().collect();
    let unit: HashMap<[i64; 2], f64> =
        keys.par_iter().map(|&k| (k, unit_pair_oracle(dim, k, s, m))).collect();
    let total: f64 = counts.iter().map(|(k, &c)| c as f64 * unit[k]).sum();
    Ok(total * lat.h().powf(dim as f64 - 2.0 * s))
}

fn corpus_params(cfg: &ExperimentConfig, target: CellTarget) -> CorpusParams {
    CorpusParams {
        seed: cfg.seed,
        cases: cfg.cases,
        max_side: cfg.max_side,
        margin: cfg.margin,
        target,
        b_fraction_max: cfg.b_fraction_max,
        ..CorpusParams::default()
    }
}

fn regime_code(r: GmtRegime) -> f64 {
    match r {
        GmtRegime::SmallB => 0.0,
        GmtRegime::LargeB => 1.0,
    }
}

/// GMT lower bounds over a random corpus of disjoint pairs, at every `s` in
/// `s_list` and every `c_probe`; refinement stability and the brute-force
/// oracle are checked at the smallest `s` below one half.
pub fn run_gmt_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let lat = Lattice::centered(cfg.dim, cfg.h, cfg.box_half)?;
    let (pairs, manifest) = generate_pairs(&lat, &corpus_params(cfg, CellTarget::Any))?;
    let mut series = Series::new(&[
        "s", "case", "c_probe", "measure_a", "measure_b", "l", "bound", "ratio", "regime", "b_floored",
    ]);
    let mut resolutions = Vec::new();
    let mut minima: BTreeMap<String, f64> = BTreeMap::new();
    let mut all_positive = true;
    for &s in &cfg.s_list {
        let kern = kernel(&lat, s, cfg)?;
        resolutions.push(resolution(&kern));
        for (case, (a, b)) in pairs.iter().enumerate() {
            for &c in &cfg.c_probe {
                let r = check_gmt(&kern, a, b, c)?;
                all_positive &= r.ratio > 0.0 && r.ratio.is_finite();
                let key = format!("min_ratio_s{s}_{:?}", r.regime);
                let e = minima.entry(key).or_insert(f64::INFINITY);
                *e = e.min(r.ratio);
                series.push(vec![
                    s,
                    case as f64,
                    c,
                    r.measure_a,
                    r.measure_b,
                    r.l,
                    r.bound,
                    r.ratio,
                    regime_code(r.regime),
                    f64::from(u8::from(r.b_floored)),
                ]);
            }
        }
    }
    let mut rep = ExperimentReport::new(cfg, series);
    rep.detail("corpus", &manifest)?;
    for (k, v) in &minima {
        rep.constant(k, *v);
    }
    rep.criterion(
        "ratios positive",
        all_positive,
        format!("{} pairs x {} c_probe x {} values of s", pairs.len(), cfg.c_probe.len(), cfg.s_list.len()),
    );

    let small_s = cfg.s_list.iter().copied().filter(|&s| s < 0.5).fold(f64::NAN, f64::min);
    if small_s.is_nan() {
        rep.resolution = resolutions;
        rep.detail("refinement", &"skipped: no s below one half")?;
        return Ok(rep.finish());
    }

    let kern = kernel(&lat, small_s, cfg)?;
    let fine_lat = lat.refined(2)?;
    let fine = kernel(&fine_lat, small_s, cfg)?;
    resolutions.push(resolution(&fine));
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (a, b) in pairs.iter().take(cfg.refine_cases) {
        let (fa, fb) = (a.refined(2)?, b.refined(2)?);
        for &c in &cfg.c_probe {
            let coarse = check_gmt(&kern, a, b, c)?;
            let refined = check_gmt(&fine, &fa, &fb, c)?;
            worst = worst.max((refined.ratio - coarse.ratio).abs() / coarse.ratio);
            checked += 1;
        }
    }
    rep.constant("refine_worst_change", worst);
    rep.criterion(
        "refinement stable",
        checked > 0 && worst < REFINE_TOL,
        format!("s = {small_s}: worst relative ratio change {worst:.5} over {checked} checks under 2x refinement"),
    );

    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (a, b) in pairs.iter().take(cfg.oracle_cases) {
        let d = a.union(b)?.complement();
        let l = l_interaction(&kern, a, Region::cells(&d))?;
        let oracle = brute_force_l(a, &d, small_s, cfg.oracle_subdivision)?;
        let rel = (l - oracle).abs() / oracle;
        worst = worst.max(rel);
        rows.push([l, oracle, rel]);
    }
    rep.constant("oracle_worst_mismatch", worst);
    rep.detail("oracle", &rows)?;
    rep.criterion(
        "brute-force oracle",
        !rows.is_empty() && worst < ORACLE_TOL,
        format!("s = {small_s}: worst relative mismatch {worst:.5} over {} cases (box part of L)", rows.len()),
    );
    rep.resolution = resolutions;
    Ok(rep.finish())
}

/// `(1/h) ∫_0^h ∫_{|y| > 1} |x - y|^{-1-2s} dy dx` in closed form.
pub fn unit_interval_value(h: f64, s: f64) -> f64 {
    let p = 1.0 - 2.0 * s;
    ((1.0 - (1.0 - h).powf(p)) + ((1.0 + h).powf(p) - 1.0)) / (h * 2.0 * s * p)
}

/// One-dimensional check at `E = (-1, 1)`, `x = 0`, plus the ball against
/// random sets of equal cell count at every `s` in `s_list`.
pub fn run_sobolev_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut series = Series::new(&["s", "case", "cells", "min_constant", "is_ball"]);
    let mut rows_1d = Vec::new();
    let mut resolutions = Vec::new();

    let h1 = 1.0 / 64.0;
    let lat1 = Lattice::centered(1, h1, (2.0 / h1) as i64)?;
    let kern1 = kernel(&lat1, 0.25, cfg)?;
    resolutions.push(resolution(&kern1));
    let e1 = ball_mask(&lat1, [0.0, 0.0], 1.0)?;
    let x0 = lat1.cell_of([0.0, 0.0]).ok_or_else(|| LabError::Experiment("origin outside the lattice".into()))?;
    let lhs = sobolev_set_bound(&kern1, &e1, x0)?.lhs;
    let exact = unit_interval_value(h1, 0.25);
    rows_1d.push([lhs, exact]);

    let lat = Lattice::centered(cfg.dim, cfg.h, cfg.box_half)?;
    let center = lat.center(lat.cell_of([0.0, 0.0]).ok_or_else(|| LabError::Experiment("origin outside".into()))?);
    let ball = ball_mask(&lat, center, cfg.ball_radius)?;
    let cells = ball.count();
    let (sets, manifest) = generate_sets(&lat, &corpus_params(cfg, CellTarget::Exactly(cells)))?;
    let mut ball_ok = Vec::new();
    let mut all_positive = true;
    for &s in &cfg.s_list {
        let kern = kernel(&lat, s, cfg)?;
        resolutions.push(resolution(&kern));
        let min_const = |e: &CellSet| -> Result<f64> {
            Ok(sobolev_set_bounds(&kern, e, e)?.iter().map(|p| p.1.constant).fold(f64::INFINITY, f64::min))
        };
        let ball_c = min_const(&ball)?;
        series.push(vec![s, -1.0, cells as f64, ball_c, 1.0]);
        let mut corpus_min = f64::INFINITY;
        for (k, e) in sets.iter().enumerate() {
            if measure(e) != measure(&ball) {
                return Err(LabError::Experiment(format!("corpus set {k} has {} cells, want {cells}", e.count())));
            }
            let c = min_const(e)?;
            all_positive &= c > 0.0 && c.is_finite();
            corpus_min = corpus_min.min(c);
            series.push(vec![s, k as f64, e.count() as f64, c, 0.0]);
        }
        ball_ok.push((s, ball_c, corpus_min));
    }

    let mut rep = ExperimentReport::new(cfg, series);
    rep.resolution = resolutions;
    rep.detail("corpus", &manifest)?;
    rep.detail("interval", &rows_1d)?;
    rep.constant("interval_lhs", lhs);
    rep.constant("interval_cell_average", exact);
    let (d4, dq) = ((lhs - 4.0).abs() / 4.0, (lhs - exact).abs() / exact);
    rep.criterion(
        "interval value",
        d4 < SOBOLEV_1D_TOL && dq < SOBOLEV_1D_TOL,
        format!("lhs = {lhs:.6}: {d4:.5} from 4, {dq:.5} from the cell-averaged integral {exact:.6}"),
    );
    rep.criterion("constants positive", all_positive, format!("{} sets x {} values of s", sets.len(), cfg.s_list.len()));
    for (s, b, m) in ball_ok {
        rep.constant(&format!("ball_constant_s{s}"), b);
        rep.constant(&format!("corpus_min_s{s}"), m);
        rep.criterion(
            &format!("ball extremal s={s}"),
            b <= BALL_SLACK * m,
            format!("ball {b:.6} vs corpus minimum {m:.6} ({cells} cells)"),
        );
    }
    Ok(rep.finish())
}
