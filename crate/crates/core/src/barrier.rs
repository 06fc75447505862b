//! Radial barrier profiles `g, h, v, w` and numerical checks of the two
//! inequalities they are built to satisfy.
//!
//! With `g(t) = t^{-2s}`, `h` is the tangent-line deficit of `g` at `r/2`,
//! capped at 1 and zero beyond `r/2`; `v(x) = h(r - |x|)` inside `B_r` and 1
//! outside; `w(x) = (2 - β) v(x / C_o) + β - 1` with `C_o = (C5/τ)^{1/(2s)}`
//! and `β = 32 r^{-2s}`. `C5` is estimated here by sampling the nonlocal
//! operator of `v`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_mask, norm, Lattice, Point};
use crate::quad::{integrate_with_breaks, QuadConfig};

/// Smallest inner radius accepted by the construction.
pub const R_MIN: f64 = 50.0;
/// Relative slack allowed when checking the operator bound.
pub const AL1_SLACK: f64 = 0.05;
/// Fraction of samples that must satisfy the operator bound.
pub const AL1_MIN_FRACTION: f64 = 0.99;

const QUAD_TOL: f64 = 1e-9;

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain { value: s, domain: "s in (0,1)" });
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= R_MIN) || !r.is_finite() {
        return Err(Error::Precondition(format!("barrier radius r = {r} is below r_min = {R_MIN}")));
    }
    Ok(())
}

pub fn eval_g(t: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain { value: t, domain: "t > 0" });
    }
    Ok(t.powf(-2.0 * s))
}

/// `h(t)` for `t >= 0`; `h(0) = 1` by continuity of the cap.
pub fn eval_h(t: f64, r: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    check_r(r)?;
    if !(t >= 0.0) || t.is_nan() {
        return Err(Error::Domain { value: t, domain: "t >= 0" });
    }
    Ok(Profile::new(r, s).h(t))
}

pub fn eval_v(x: Point, r: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    check_r(r)?;
    Ok(Profile::new(r, s).v(norm(x)))
}

pub fn eval_w(spec: &BarrierSpec, x: Point) -> f64 {
    spec.profile().w(spec, norm(x))
}

/// Unchecked evaluation of `h` and `v` for a fixed `(r, s)`.
#[derive(Debug, Clone, Copy)]
struct Profile {
    r: f64,
    s: f64,
    g_half: f64,
    dg_half: f64,
    /// Where the tangent deficit equals 1; `h = 1` on `[0, kink]`.
    kink: f64,
}

impl Profile {
    fn new(r: f64, s: f64) -> Self {
        let half = 0.5 * r;
        let g_half = half.powf(-2.0 * s);
        let dg_half = -2.0 * s * half.powf(-2.0 * s - 1.0);
        let deficit = |t: f64| t.powf(-2.0 * s) - g_half - dg_half * (t - half);
        let mut lo = half;
        while deficit(lo) <= 1.0 {
            lo *= 0.5;
        }
        let mut hi = half;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if deficit(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self { r, s, g_half, dg_half, kink: 0.5 * (lo + hi) }
    }

    fn h(&self, t: f64) -> f64 {
        let half = 0.5 * self.r;
        if t >= half {
            return 0.0;
        }
        if t <= 0.0 {
            return 1.0;
        }
        let d = t.powf(-2.0 * self.s) - self.g_half - self.dg_half * (t - half);
        d.clamp(0.0, 1.0)
    }

    fn v(&self, rad: f64) -> f64 {
        if rad >= self.r {
            1.0
        } else {
            self.h(self.r - rad)
        }
    }

    fn w(&self, spec: &BarrierSpec, rad: f64) -> f64 {
        if rad >= spec.big_r {
            return 1.0;
        }
        1.0 - (2.0 - spec.beta) * (1.0 - self.v(rad / spec.c_o))
    }

    /// Radii where `v` fails to be smooth.
    fn corners(&self) -> [f64; 2] {
        [0.5 * self.r, self.r - self.kink]
    }

    /// `∫ (v(y) - v(x)) |x - y|^{-n-2s} dy` at a point of radius `rad`.
    fn operator(&self, dim: usize, rad: f64) -> f64 {
        let s = self.s;
        let vx = self.v(rad);
        let corners = self.corners();
        // Beyond this distance every y has v(y) = 1.
        let far = rad + corners[1];
        let cfg = QuadConfig::rel(QUAD_TOL);
        let mut breaks = vec![0.0, far];
        for c in corners {
            for t in [c - rad, rad - c, c + rad] {
                if t > 0.0 && t < far {
                    breaks.push(t);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let (body, tail) = if dim == 1 {
            let f = |t: f64| (self.v((rad + t).abs()) + self.v((rad - t).abs()) - 2.0 * vx) * t.powf(-1.0 - 2.0 * s);
            (integrate_with_breaks(f, &breaks, cfg).value, 2.0 * (1.0 - vx))
        } else {
            let inner_cfg = QuadConfig::rel(QUAD_TOL * 1e-2);
            let f = |t: f64| {
                if rad == 0.0 {
                    return 2.0 * PI * (self.v(t) - vx) * t.powf(-1.0 - 2.0 * s);
                }
                // |x + t e_θ|² = rad² + t² + 2 rad t cos θ over θ ∈ [0, π], doubled.
                let mut th = vec![0.0, PI];
                for c in corners {
                    let cs = (c * c - rad * rad - t * t) / (2.0 * rad * t);
                    if cs > -1.0 && cs < 1.0 {
                        th.push(cs.acos());
                    }
                }
                th.sort_by(f64::total_cmp);
                let g = |a: f64| self.v((rad * rad + t * t + 2.0 * rad * t * a.cos()).max(0.0).sqrt()) - vx;
                2.0 * integrate_with_breaks(g, &th, inner_cfg).value * t.powf(-1.0 - 2.0 * s)
            };
            (integrate_with_breaks(f, &breaks, cfg).value, 2.0 * PI * (1.0 - vx))
        };
        body + tail * far.powf(-2.0 * s) / (2.0 * s)
    }
}

/// Parameters of the barrier `w`. `r` is the inner radius (in the units of
/// `v`) and `big_r = r C_o` the outer radius beyond which `w = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub dim: usize,
    pub s: f64,
    pub tau: f64,
    pub c5: f64,
    pub c_o: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub beta: f64,
}

impl BarrierSpec {
    pub fn new(dim: usize, s: f64, tau: f64, r: f64, c5: f64) -> Result<Self> {
        check_s(s)?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
        }
        if !(c5 > 0.0) || !c5.is_finite() {
            return Err(Error::Parameter(format!("C5 must be positive, got {c5}")));
        }
        let c_o = (c5 / tau).powf(1.0 / (2.0 * s));
        let spec = Self { dim, s, tau, c5, c_o, r, big_r: r * c_o, beta: 32.0 * r.powf(-2.0 * s) };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with a prescribed outer radius; `r = R / C_o`.
    pub fn with_outer_radius(dim: usize, s: f64, tau: f64, big_r: f64, c5: f64) -> Result<Self> {
        check_s(s)?;
        if !(tau > 0.0 && c5 > 0.0) {
            return Err(Error::Parameter("tau and C5 must be positive".into()));
        }
        let c_o = (c5 / tau).powf(1.0 / (2.0 * s));
        Self::new(dim, s, tau, big_r / c_o, c5)
    }

    /// Estimates `C5` at radius `r` and builds the barrier parameters from it.
    pub fn calibrate(dim: usize, s: f64, tau: f64, r: f64, sample_count: usize) -> Result<Self> {
        let c5 = estimate_c5(dim, s, r, sample_count)?;
        Self::new(dim, s, tau, r, c5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Parameter(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        check_s(self.s)?;
        check_r(self.r)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Precondition(format!(
                "beta = 32 r^(-2s) = {} must lie in (0,1); increase r",
                self.beta
            )));
        }
        Ok(())
    }

    fn profile(&self) -> Profile {
        Profile::new(self.r, self.s)
    }
}

/// `[∫(v(y)-v(x))|x-y|^{-n-2s} dy]^+ / (v(x) + 16 r^{-2s})` at one point.
pub fn c5_ratio(dim: usize, s: f64, r: f64, x: Point) -> Result<f64> {
    check_s(s)?;
    check_r(r)?;
    check_dim(dim)?;
    let p = Profile::new(r, s);
    Ok(ratio_at(&p, dim, norm(x)))
}

fn ratio_at(p: &Profile, dim: usize, rad: f64) -> f64 {
    let op = p.operator(dim, rad);
    op.max(0.0) / (p.v(rad) + 16.0 * p.r.powf(-2.0 * p.s))
}

fn check_dim(dim: usize) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
    }
    Ok(())
}

/// The operator of `v` at a point, unnormalized.
pub fn v_operator(dim: usize, s: f64, r: f64, x: Point) -> Result<f64> {
    check_s(s)?;
    check_r(r)?;
    check_dim(dim)?;
    Ok(Profile::new(r, s).operator(dim, norm(x)))
}

/// Supremum of [`c5_ratio`] over the radii `k r / N`, `k = 0..N`. The
/// profile is radial, so these radii cover `B_r` in any dimension.
pub fn estimate_c5(dim: usize, s: f64, r: f64, sample_count: usize) -> Result<f64> {
    check_s(s)?;
    check_r(r)?;
    check_dim(dim)?;
    if sample_count == 0 {
        return Err(Error::Parameter("sample_count must be positive".into()));
    }
    let p = Profile::new(r, s);
    let ratios: Vec<f64> = (0..sample_count)
        .into_par_iter()
        .map(|k| ratio_at(&p, dim, r * (k as f64 / sample_count as f64)))
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Operator bound at lattice centers inside `B_R`, as the ratio of the
/// operator of `w` to `τ (1 + w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Al1Report {
    pub spec: BarrierSpec,
    pub samples: usize,
    pub holding: usize,
    pub fraction: f64,
    pub slack: f64,
    pub worst_ratio: f64,
    pub worst_radius: f64,
    pub histogram: Vec<HistogramBin>,
    pub outside_exact: bool,
    pub passes: bool,
}

/// Two-sided profile bound: extremes of `(1 + w(x)) (R + 1 - |x|)^{2s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Al2Report {
    pub spec: BarrierSpec,
    pub samples: usize,
    pub sup: f64,
    pub sup_radius: f64,
    pub inf: f64,
    pub inf_radius: f64,
    pub ratio: f64,
    /// Smallest `C` with `1/C ≤ q ≤ C` on the samples.
    pub c_fit: f64,
}

fn sample_radii(spec: &BarrierSpec, lattice: &Lattice) -> Result<(Vec<f64>, bool)> {
    spec.validate()?;
    if lattice.dim() != spec.dim {
        return Err(Error::LatticeMismatch(format!(
            "barrier dimension {} vs lattice dimension {}",
            spec.dim,
            lattice.dim()
        )));
    }
    let inside = ball_mask(lattice, [0.0, 0.0], spec.big_r)?;
    if inside.is_empty() {
        return Err(Error::Precondition("no lattice center inside B_R".into()));
    }
    let radii = inside.iter().map(|i| norm(lattice.center(i))).collect();
    let outside_exact = inside.complement().iter().all(|i| eval_w(spec, lattice.center(i)) == 1.0);
    Ok((radii, outside_exact))
}

const HIST_EDGES: [f64; 9] = [f64::NEG_INFINITY, 0.0, 0.5, 0.9, 1.0, 1.05, 1.2, 2.0, f64::INFINITY];

pub fn verify_al1(spec: &BarrierSpec, lattice: &Lattice) -> Result<Al1Report> {
    let (radii, outside_exact) = sample_radii(spec, lattice)?;
    let p = spec.profile();
    let scale = (2.0 - spec.beta) * spec.c_o.powf(-2.0 * spec.s);
    let ratios: Vec<f64> = radii
        .par_iter()
        .map(|&rad| {
            let lhs = scale * p.operator(spec.dim, rad / spec.c_o);
            lhs / (spec.tau * (1.0 + p.w(spec, rad)))
        })
        .collect();
    let holding = ratios.iter().filter(|&&q| q <= 1.0 + AL1_SLACK).count();
    let (mut worst_ratio, mut worst_radius) = (f64::NEG_INFINITY, 0.0);
    for (&q, &rad) in ratios.iter().zip(&radii) {
        if q > worst_ratio {
            worst_ratio = q;
            worst_radius = rad;
        }
    }
    let histogram = HIST_EDGES
        .windows(2)
        .map(|e| HistogramBin { lo: e[0], hi: e[1], count: ratios.iter().filter(|&&q| q > e[0] && q <= e[1]).count() })
        .collect();
    let fraction = holding as f64 / ratios.len() as f64;
    Ok(Al1Report {
        spec: *spec,
        samples: ratios.len(),
        holding,
        fraction,
        slack: AL1_SLACK,
        worst_ratio,
        worst_radius,
        histogram,
        outside_exact,
        passes: fraction >= AL1_MIN_FRACTION,
    })
}

pub fn verify_al2(spec: &BarrierSpec, lattice: &Lattice) -> Result<Al2Report> {
    let (radii, _) = sample_radii(spec, lattice)?;
    let p = spec.profile();
    let (mut sup, mut sup_radius) = (f64::NEG_INFINITY, 0.0);
    let (mut inf, mut inf_radius) = (f64::INFINITY, 0.0);
    for &rad in &radii {
        let q = (1.0 + p.w(spec, rad)) * (spec.big_r + 1.0 - rad).powf(2.0 * spec.s);
        if q > sup {
            sup = q;
            sup_radius = rad;
        }
        if q < inf {
            inf = q;
            inf_radius = rad;
        }
    }
    Ok(Al2Report {
        spec: *spec,
        samples: radii.len(),
        sup,
        sup_radius,
        inf,
        inf_radius,
        ratio: sup / inf,
        c_fit: sup.max(1.0 / inf),
    })
}

/// Radial samples of `v(|x|/C_o)`, `w` and the profile-bound quantity on
/// `[0, R + margin]`.
pub fn write_radial_profile<W: Write>(spec: &BarrierSpec, samples: usize, margin: f64, out: W) -> Result<()> {
    spec.validate()?;
    let p = spec.profile();
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["radius", "v", "w", "profile_bound"])?;
    let top = spec.big_r + margin.max(0.0);
    for k in 0..=samples {
        let rad = top * (k as f64 / samples.max(1) as f64);
        let w = p.w(spec, rad);
        let q = if rad < spec.big_r { (1.0 + w) * (spec.big_r + 1.0 - rad).powf(2.0 * spec.s) } else { f64::NAN };
        wtr.write_record(&[rad.to_string(), p.v(rad / spec.c_o).to_string(), w.to_string(), q.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
