use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use rayon::prelude::*;

use super::tails;
use crate::error::{Error, Result};
use crate::lattice::{ExteriorData, Lattice, TailProfile};
use crate::quad::{integrate, integrate_with_breaks, QuadConfig};

pub const DEFAULT_NEAR_RADIUS: usize = 4;
pub const DEFAULT_QUAD_TOL: f64 = 1e-6;

/// How near-range weights are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// Cell-pair double integral `int_{C_i} int_{C_j}` (finite for s < 1/2).
    CellPair,
    /// `h^n int_{C_j} |x_i - y|^-(n+2s) dy` with `x_i` the cell center. Used for
    /// s >= 1/2, where cell pairs sharing a face have a divergent double integral.
    Collocation,
}

impl WeightRule {
    pub fn for_exponent(s: f64) -> Self {
        if s < 0.5 {
            WeightRule::CellPair
        } else {
            WeightRule::Collocation
        }
    }
}

/// Per-cell exterior tail weights `T_i` for one value of the exterior data:
/// the tail energy of cell `i` is `h^n T_i (u_i - value)^2`.
#[derive(Debug, Clone)]
pub struct TailPart {
    pub value: f64,
    pub weights: Arc<Vec<f64>>,
}

/// Inner and outer tail masses for one split radius.
type SplitTails = (Arc<Vec<f64>>, Arc<Vec<f64>>);

/// Pairwise weights `w_ij` for the kernel `|x - y|^-(n+2s)` on a lattice,
/// tabulated by cell offset over the whole box, plus exterior tail weights.
#[derive(Debug)]
pub struct KernelTable {
    lattice: Lattice,
    s: f64,
    near_radius: usize,
    quad_tol: f64,
    rule: WeightRule,
    unit_near: Vec<f64>,
    table: Vec<f64>,
    span: [usize; 2],
    tail_total: Arc<Vec<f64>>,
    split_tails: RwLock<HashMap<(usize, u64), SplitTails>>,
}

pub fn check_exponent(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("s must lie in (0, 1), got {s}")))
    }
}

pub fn build_kernel(lattice: &Lattice, s: f64, near_radius: usize, quad_tol: f64) -> Result<KernelTable> {
    check_exponent(s)?;
    check_build_params(near_radius, quad_tol)?;
    let unit_near = unit_near_weights(lattice.dim(), s, near_radius, quad_tol);
    KernelTable::from_unit_near(lattice, s, near_radius, quad_tol, unit_near)
}

fn check_build_params(near_radius: usize, quad_tol: f64) -> Result<()> {
    if near_radius < 2 {
        return Err(Error::Parameter(format!("near_radius must be >= 2, got {near_radius}")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Parameter(format!("quad_tol must be positive, got {quad_tol}")));
    }
    Ok(())
}

/// Index into a `(nr+1) x (nr+1)` table of unit-spacing near weights by `(|d0|, |d1|)`.
fn near_slot(nr: usize, a: usize, b: usize) -> usize {
    a + (nr + 1) * b
}

/// Near weights at unit spacing for offsets `0 <= d0, d1 <= nr` (1D: `d1 = 0` only).
pub fn unit_near_weights(dim: usize, s: f64, nr: usize, tol: f64) -> Vec<f64> {
    let rule = WeightRule::for_exponent(s);
    let rows = if dim == 1 { 1 } else { nr + 1 };
    let mut out = vec![0.0; (nr + 1) * (nr + 1)];
    let jobs: Vec<(usize, usize)> =
        (0..rows).flat_map(|b| (0..=nr).map(move |a| (a, b))).filter(|&(a, b)| b <= a || dim == 1).collect();
    let vals: Vec<f64> = jobs
        .par_iter()
        .map(|&(a, b)| {
            if a == 0 && b == 0 {
                0.0
            } else if dim == 1 {
                unit_weight_1d(a as f64, s, rule)
            } else {
                unit_weight_2d([a as i64, b as i64], s, rule, tol)
            }
        })
        .collect();
    for (&(a, b), v) in jobs.iter().zip(vals) {
        out[near_slot(nr, a, b)] = v;
        if dim == 2 {
            out[near_slot(nr, b, a)] = v;
        }
    }
    out
}

fn unit_weight_1d(d: f64, s: f64, rule: WeightRule) -> f64 {
    match rule {
        WeightRule::CellPair => {
            // Second antiderivative of z^-(1+2s), vanishing at 0.
            let p = 1.0 - 2.0 * s;
            let g = |z: f64| if z == 0.0 { 0.0 } else { z.powf(p) / (-2.0 * s * p) };
            g(d + 1.0) - 2.0 * g(d) + g(d - 1.0)
        }
        WeightRule::Collocation => ((d - 0.5).powf(-2.0 * s) - (d + 0.5).powf(-2.0 * s)) / (2.0 * s),
    }
}

fn nested(f: impl Fn(f64, f64) -> f64 + Sync, x: [f64; 2], y: [f64; 2], tol: f64) -> f64 {
    let cfg = QuadConfig::rel(tol * 1e-2);
    integrate(|z1| integrate(|z0| f(z0, z1), x[0], x[1], cfg).value, y[0], y[1], cfg).value
}

fn unit_weight_2d(d: [i64; 2], s: f64, rule: WeightRule, tol: f64) -> f64 {
    let e = 1.0 + s;
    match rule {
        WeightRule::Collocation => {
            let (d0, d1) = (d[0] as f64, d[1] as f64);
            nested(|z0, z1| (z0 * z0 + z1 * z1).powf(-e), [d0 - 0.5, d0 + 0.5], [d1 - 0.5, d1 + 0.5], tol)
        }
        WeightRule::CellPair => {
            // int Lambda(z0 - d0) Lambda(z1 - d1) |z|^-(2+2s) dz with the tent
            // Lambda(t) = (1 - |t|)^+, split into the four unit squares where
            // the tent product is bilinear.
            let mut total = 0.0;
            for q0 in [-1i64, 0] {
                for q1 in [-1i64, 0] {
                    total += tent_square(d, [d[0] + q0, d[1] + q1], s, tol);
                }
            }
            total
        }
    }
}

fn tent_square(d: [i64; 2], lo: [i64; 2], s: f64, tol: f64) -> f64 {
    let e = 1.0 + s;
    let origin_corner = (lo[0] == 0 || lo[0] == -1) && (lo[1] == 0 || lo[1] == -1);
    if !origin_corner {
        let tent = |z: f64, k: usize| 1.0 - (z - d[k] as f64).abs();
        let (x0, y0) = (lo[0] as f64, lo[1] as f64);
        return nested(
            |z0, z1| tent(z0, 0) * tent(z1, 1) * (z0 * z0 + z1 * z1).powf(-e),
            [x0, x0 + 1.0],
            [y0, y0 + 1.0],
            tol,
        );
    }
    // Reflect onto [0,1]^2 with z_k = sigma_k zeta_k; the tent factors become
    // a_k + b_k zeta_k and vanish together at the origin.
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    for k in 0..2 {
        let sigma = if lo[k] == 0 { 1.0 } else { -1.0 };
        let t0 = 1.0 - (0.0 - d[k] as f64).abs();
        let t1 = 1.0 - (sigma - d[k] as f64).abs();
        a[k] = t0;
        b[k] = t1 - t0;
    }
    let (bc, cc, dc) = (b[0] * a[1], a[0] * b[1], b[0] * b[1]);
    let p1 = 1.0 - 2.0 * s;
    let p2 = 2.0 - 2.0 * s;
    let radial = |th: f64| {
        let (c, sn) = (th.cos(), th.sin());
        let ro = 1.0 / c.max(sn);
        (bc * c + cc * sn) * ro.powf(p1) / p1 + dc * c * sn * ro.powf(p2) / p2
    };
    let q = std::f64::consts::FRAC_PI_4;
    integrate_with_breaks(radial, &[0.0, q, 2.0 * q], QuadConfig::rel(tol * 1e-2)).value
}

impl KernelTable {
    pub(crate) fn from_unit_near(
        lattice: &Lattice,
        s: f64,
        near_radius: usize,
        quad_tol: f64,
        unit_near: Vec<f64>,
    ) -> Result<Self> {
        check_exponent(s)?;
        check_build_params(near_radius, quad_tol)?;
        if unit_near.len() != (near_radius + 1) * (near_radius + 1) {
            return Err(Error::Cache("near table size does not match near_radius".into()));
        }
        let dim = lattice.dim();
        let [n0, n1] = lattice.shape();
        let span = [2 * n0 - 1, 2 * n1 - 1];
        let h = lattice.h();
        let scale = h.powf(dim as f64 - 2.0 * s);
        let e = (dim as f64 + 2.0 * s) / 2.0;
        let nr = near_radius as i64;
        let mut table = vec![0.0; span[0] * span[1]];
        for (k, w) in table.iter_mut().enumerate() {
            let d0 = (k % span[0]) as i64 - (n0 as i64 - 1);
            let d1 = (k / span[0]) as i64 - (n1 as i64 - 1);
            let (a, b) = (d0.abs(), d1.abs());
            *w = if a <= nr && b <= nr {
                scale * unit_near[near_slot(near_radius, a as usize, b as usize)]
            } else {
                scale * ((a * a + b * b) as f64).powf(-e)
            };
        }
        let rule = WeightRule::for_exponent(s);
        let tail_total = Arc::new(tails::total(lattice, s, rule, quad_tol));
        Ok(Self {
            lattice: *lattice,
            s,
            near_radius,
            quad_tol,
            rule,
            unit_near,
            table,
            span,
            tail_total,
            split_tails: RwLock::new(HashMap::new()),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn near_radius(&self) -> usize {
        self.near_radius
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn rule(&self) -> WeightRule {
        self.rule
    }

    pub fn unit_near(&self) -> &[f64] {
        &self.unit_near
    }

    /// Weight for a global index offset `d = j - i`.
    pub fn weight_offset(&self, d: [i64; 2]) -> f64 {
        let [n0, n1] = self.lattice.shape();
        let k0 = d[0] + n0 as i64 - 1;
        let k1 = d[1] + n1 as i64 - 1;
        assert!(
            k0 >= 0 && (k0 as usize) < self.span[0] && k1 >= 0 && (k1 as usize) < self.span[1],
            "offset {d:?} outside the box"
        );
        self.table[k0 as usize + self.span[0] * k1 as usize]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.lattice.local(i), self.lattice.local(j));
        self.weight_offset([b[0] as i64 - a[0] as i64, b[1] as i64 - a[1] as i64])
    }

    /// Weights from cell `i` to every cell of local row `row`, in column order.
    #[inline]
    pub fn row_weights(&self, i: usize, row: usize) -> &[f64] {
        let [n0, n1] = self.lattice.shape();
        let a = self.lattice.local(i);
        let k1 = row + n1 - 1 - a[1];
        let start = (n0 - 1 - a[0]) + self.span[0] * k1;
        &self.table[start..start + n0]
    }

    /// Tail weights against all of `R^n` outside the box.
    pub fn tail_total(&self) -> &[f64] {
        &self.tail_total
    }

    /// Exterior data resolved into tail parts of constant value.
    pub fn tail_parts(&self, exterior: &ExteriorData) -> Result<Vec<TailPart>> {
        exterior.validate(self.lattice.dim())?;
        match exterior.tail_profile(&self.lattice)? {
            TailProfile::Uniform(value) => Ok(vec![TailPart { value, weights: self.tail_total.clone() }]),
            TailProfile::Split { axis, threshold } => {
                let (plus, minus) = self.split(axis, threshold);
                Ok(vec![TailPart { value: 1.0, weights: plus }, TailPart { value: -1.0, weights: minus }])
            }
        }
    }

    fn split(&self, axis: usize, threshold: f64) -> (Arc<Vec<f64>>, Arc<Vec<f64>>) {
        let key = (axis, threshold.to_bits());
        if let Some(v) = self.split_tails.read().get(&key) {
            return v.clone();
        }
        let plus = tails::plus_side(&self.lattice, self.s, self.rule, self.quad_tol, axis, threshold);
        let minus: Vec<f64> = self.tail_total.iter().zip(&plus).map(|(t, p)| (t - p).max(0.0)).collect();
        let v = (Arc::new(plus), Arc::new(minus));
        self.split_tails.write().entry(key).or_insert(v).clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_switches_at_half() {
        assert_eq!(WeightRule::for_exponent(0.49), WeightRule::CellPair);
        assert_eq!(WeightRule::for_exponent(0.5), WeightRule::Collocation);
    }

    #[test]
    fn one_d_cell_pair_closed_form() {
        // int_0^1 int_1^2 |x - y|^{-3/2} dy dx = 8 - 4 sqrt 2
        let w = unit_weight_1d(1.0, 0.25, WeightRule::CellPair);
        assert!((w - (8.0 - 4.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn one_d_collocation_closed_form() {
        // int_{1/2}^{3/2} y^{-2} dy = 4/3
        let w = unit_weight_1d(1.0, 0.5, WeightRule::Collocation);
        assert!((w - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn two_d_near_weights_symmetric_positive() {
        for &s in &[0.25, 0.75] {
            let w = unit_near_weights(2, s, 3, 1e-8);
            for a in 0..=3 {
                for b in 0..=3 {
                    let v = w[near_slot(3, a, b)];
                    assert_eq!(v, w[near_slot(3, b, a)]);
                    if a + b > 0 {
                        assert!(v > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let l = Lattice::centered(1, 1.0, 8).unwrap();
        assert!(build_kernel(&l, 0.0, 4, 1e-6).is_err());
        assert!(build_kernel(&l, 1.0, 4, 1e-6).is_err());
        assert!(build_kernel(&l, 0.3, 1, 1e-6).is_err());
        assert!(build_kernel(&l, 0.3, 4, 0.0).is_err());
    }
}
