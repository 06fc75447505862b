//! Kernel mass between a lattice cell and (parts of) the complement of the box,
//! `T(x) = int_{R^n \ Box} |x - y|^-(n+2s) dy`, per unit cell volume.
//!
//! 1D tails are closed form. In 2D the radial integral is done analytically,
//! `T(x) = int_0^{2pi} rho_b(theta)^{-2s} / (2s) dtheta` with `rho_b` the distance
//! to the box boundary along the ray, and the angle is integrated adaptively.
//! Under the cell-pair rule the value is averaged over the cell (3x3
//! Gauss-Legendre in 2D), otherwise taken at the cell center.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::kernel::WeightRule;
use crate::lattice::{Lattice, Point};
use crate::quad::{integrate_with_breaks, QuadConfig};

const GL3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Interval `(a, b)` (either end may be infinite) lying entirely on one side of
/// the cell `[c0, c1]`.
fn interval_1d(c0: f64, c1: f64, a: f64, b: f64, s: f64, rule: WeightRule) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    if b <= c0 {
        return interval_1d(-c1, -c0, -b, -a, s, rule);
    }
    debug_assert!(a >= c1);
    match rule {
        WeightRule::CellPair => {
            let p = 1.0 - 2.0 * s;
            let mut v = (a - c0).powf(p) - (a - c1).powf(p);
            if b.is_finite() {
                v -= (b - c0).powf(p) - (b - c1).powf(p);
            }
            v / (2.0 * s * p * (c1 - c0))
        }
        WeightRule::Collocation => {
            let x = 0.5 * (c0 + c1);
            let mut v = (a - x).powf(-2.0 * s);
            if b.is_finite() {
                v -= (b - x).powf(-2.0 * s);
            }
            v / (2.0 * s)
        }
    }
}

fn cell_bounds(lattice: &Lattice, i: usize) -> (Point, Point) {
    let c = lattice.center(i);
    let hh = 0.5 * lattice.h();
    ([c[0] - hh, c[1] - hh], [c[0] + hh, c[1] + hh])
}

pub fn total(lattice: &Lattice, s: f64, rule: WeightRule, tol: f64) -> Vec<f64> {
    per_cell(lattice, s, rule, tol, None)
}

/// Tail against the part of the exterior where `y[axis] > threshold`.
pub fn plus_side(lattice: &Lattice, s: f64, rule: WeightRule, tol: f64, axis: usize, threshold: f64) -> Vec<f64> {
    per_cell(lattice, s, rule, tol, Some((axis, threshold)))
}

fn per_cell(lattice: &Lattice, s: f64, rule: WeightRule, tol: f64, split: Option<(usize, f64)>) -> Vec<f64> {
    let (lo, hi) = (lattice.box_lo(), lattice.box_hi());
    (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let (c0, c1) = cell_bounds(lattice, i);
            if lattice.dim() == 1 {
                let (x0, x1) = (lo[0], hi[0]);
                match split {
                    None => {
                        interval_1d(c0[0], c1[0], f64::NEG_INFINITY, x0, s, rule)
                            + interval_1d(c0[0], c1[0], x1, f64::INFINITY, s, rule)
                    }
                    Some((_, t)) => {
                        interval_1d(c0[0], c1[0], t, x0, s, rule)
                            + interval_1d(c0[0], c1[0], x1.max(t), f64::INFINITY, s, rule)
                    }
                }
            } else {
                let point = |x: Point| tail_point_2d(x, lo, hi, s, split, tol);
                match rule {
                    WeightRule::Collocation => point(lattice.center(i)),
                    WeightRule::CellPair => {
                        let (m, hh) = (lattice.center(i), 0.5 * lattice.h());
                        let mut acc = 0.0;
                        for &(u, wu) in &GL3 {
                            for &(v, wv) in &GL3 {
                                acc += wu * wv * point([m[0] + hh * u, m[1] + hh * v]);
                            }
                        }
                        acc / 4.0
                    }
                }
            }
        })
        .collect()
}

fn ray_to_boundary(x: Point, lo: Point, hi: Point, e: Point) -> f64 {
    let mut r = f64::INFINITY;
    for k in 0..2 {
        if e[k] > 0.0 {
            r = r.min((hi[k] - x[k]) / e[k]);
        } else if e[k] < 0.0 {
            r = r.min((lo[k] - x[k]) / e[k]);
        }
    }
    r
}

fn angle_to(x: Point, p: Point) -> Option<f64> {
    let (dx, dy) = (p[0] - x[0], p[1] - x[1]);
    if dx == 0.0 && dy == 0.0 {
        None
    } else {
        Some(dy.atan2(dx).rem_euclid(TAU))
    }
}

/// Pointwise tail at `x` strictly inside the box `[lo, hi]`.
pub fn tail_point_2d(x: Point, lo: Point, hi: Point, s: f64, split: Option<(usize, f64)>, tol: f64) -> f64 {
    let two_s = 2.0 * s;
    let mut breaks = vec![0.0, TAU];
    for p in [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]] {
        breaks.extend(angle_to(x, p));
    }
    let cfg = QuadConfig::rel(tol * 1e-2);
    match split {
        None => {
            breaks.sort_by(f64::total_cmp);
            let f = |th: f64| ray_to_boundary(x, lo, hi, [th.cos(), th.sin()]).powf(-two_s) / two_s;
            integrate_with_breaks(f, &breaks, cfg).value
        }
        Some((axis, t)) => {
            let other = 1 - axis;
            // Directions parallel to the dividing line.
            if axis == 0 {
                breaks.extend([0.25 * TAU, 0.75 * TAU]);
            } else {
                breaks.extend([0.0, 0.5 * TAU]);
            }
            // Where the dividing line meets the box boundary.
            if t >= lo[axis] && t <= hi[axis] {
                for q in [lo[other], hi[other]] {
                    let mut p = [0.0; 2];
                    p[axis] = t;
                    p[other] = q;
                    breaks.extend(angle_to(x, p));
                }
            }
            breaks.sort_by(f64::total_cmp);
            let xa = x[axis];
            let f = |th: f64| {
                let e = [th.cos(), th.sin()];
                let rb = ray_to_boundary(x, lo, hi, e);
                let ea = e[axis];
                if ea > 0.0 {
                    let rc = (t - xa) / ea;
                    rb.max(rc).powf(-two_s) / two_s
                } else if ea < 0.0 {
                    let rc = (t - xa) / ea;
                    if rc > rb {
                        (rb.powf(-two_s) - rc.powf(-two_s)) / two_s
                    } else {
                        0.0
                    }
                } else if xa > t {
                    rb.powf(-two_s) / two_s
                } else {
                    0.0
                }
            };
            integrate_with_breaks(f, &breaks, cfg).value
        }
    }
}
