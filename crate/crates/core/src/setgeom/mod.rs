//! Measure-theoretic functionals of voxel sets: the interaction `L(A, D)`,
//! axis shadows and the Loomis–Whitney inequality, the two-regime lower
//! bounds for `L(A, complement of A ∪ B)`, the localized bound inside a cube,
//! the pointwise Sobolev-type bound for sets, and the scale `ℓ`.

mod corpus;

pub use corpus::{generate_pairs, generate_sets, CellTarget, CorpusCase, CorpusManifest, CorpusParams};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{measure, CellSet};
use crate::nonlocal::{row_runs_mass, KernelTable, Region};
use crate::sum::csum;

fn check_disjoint(a: &CellSet, d: &CellSet) -> Result<()> {
    let count = a.overlap_count(d)?;
    if count > 0 {
        return Err(Error::Overlap { count });
    }
    Ok(())
}

/// `L(A, D) = ∫_A ∫_D |x - y|^{-n-2s}`; when `d.exterior` is set, `D` also
/// contains everything outside the lattice box.
pub fn l_interaction(kern: &KernelTable, a: &CellSet, d: Region) -> Result<f64> {
    let lat = kern.lattice();
    lat.check_same(a.lattice())?;
    lat.check_same(d.cells.lattice())?;
    check_disjoint(a, d.cells)?;
    let runs = d.cells.runs();
    let vol = lat.cell_volume();
    let tails = kern.tail_total();
    let per: Vec<f64> = a
        .indices()
        .into_par_iter()
        .map(|i| {
            let inner = row_runs_mass(kern, i, &runs);
            if d.exterior {
                inner + vol * tails[i]
            } else {
                inner
            }
        })
        .collect();
    Ok(csum(per))
}

/// Measure of the shadow of `set` along `axis`: occupied lines parallel to
/// that axis, times `h^{n-1}`.
pub fn project_measure(set: &CellSet, axis: usize) -> Result<f64> {
    let lat = set.lattice();
    Ok(shadow_count(set, axis)? as f64 * lat.h().powi(lat.dim() as i32 - 1))
}

fn shadow_count(set: &CellSet, axis: usize) -> Result<u64> {
    let lat = set.lattice();
    if axis >= lat.dim() {
        return Err(Error::Parameter(format!("axis {axis} out of range for dimension {}", lat.dim())));
    }
    if lat.dim() == 1 {
        return Ok(u64::from(!set.is_empty()));
    }
    let [n0, n1] = lat.shape();
    let other = if axis == 0 { n1 } else { n0 };
    let mut seen = vec![false; other];
    for i in set.iter() {
        let l = lat.local(i);
        seen[if axis == 0 { l[1] } else { l[0] }] = true;
    }
    Ok(seen.iter().filter(|&&b| b).count() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoomisWhitneyReport {
    pub dim: usize,
    pub cells: u64,
    pub shadows: Vec<u64>,
    /// `cells^{n-1}`; the `h` powers on both sides agree and cancel.
    pub lhs: u128,
    pub rhs: u128,
    pub holds: bool,
    pub equality: bool,
    /// Axis with the largest shadow, and whether `shadow^n ≥ cells^{n-1}` there.
    pub best_axis: usize,
    pub best_holds: bool,
}

pub fn check_loomis_whitney(set: &CellSet) -> Result<LoomisWhitneyReport> {
    if set.is_empty() {
        return Err(Error::Precondition("Loomis-Whitney check needs a nonempty set".into()));
    }
    let n = set.lattice().dim();
    let cells = set.count() as u64;
    let shadows = (0..n).map(|k| shadow_count(set, k)).collect::<Result<Vec<_>>>()?;
    let lhs = u128::from(cells).pow(n as u32 - 1);
    let rhs: u128 = shadows.iter().map(|&p| u128::from(p)).product();
    let mut best_axis = 0;
    for (k, &p) in shadows.iter().enumerate() {
        if p > shadows[best_axis] {
            best_axis = k;
        }
    }
    let best_holds = u128::from(shadows[best_axis]).pow(n as u32) >= lhs;
    Ok(LoomisWhitneyReport { dim: n, cells, shadows, lhs, rhs, holds: lhs <= rhs, equality: lhs == rhs, best_axis, best_holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmtRegime {
    /// `|B| ≤ c |A|`
    SmallB,
    /// `|B| > c |A|`
    LargeB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmtReport {
    pub s: f64,
    pub c_probe: f64,
    pub measure_a: f64,
    pub measure_b: f64,
    /// `|B|` used in the bound, floored at one cell when a logarithm or
    /// negative power of it would otherwise blow up.
    pub measure_b_used: f64,
    pub b_floored: bool,
    pub regime: GmtRegime,
    pub l: f64,
    pub bound: f64,
    pub ratio: f64,
}

fn floor_b(mb: f64, cell: f64) -> (f64, bool) {
    if mb < cell {
        (cell, true)
    } else {
        (mb, false)
    }
}

/// Classifies `(A, B)` by `c_probe` and compares `L(A, ∁(A ∪ B))` with the
/// regime's lower-bound expression (constant omitted).
pub fn check_gmt(kern: &KernelTable, a: &CellSet, b: &CellSet, c_probe: f64) -> Result<GmtReport> {
    let lat = kern.lattice();
    lat.check_same(a.lattice())?;
    lat.check_same(b.lattice())?;
    check_disjoint(a, b)?;
    if a.is_empty() {
        return Err(Error::Precondition("|A| must be positive".into()));
    }
    if !(c_probe > 0.0) || !c_probe.is_finite() {
        return Err(Error::Parameter(format!("c_probe must be positive, got {c_probe}")));
    }
    let (s, n) = (kern.s(), lat.dim() as f64);
    let d = a.union(b)?.complement();
    let l = l_interaction(kern, a, Region::with_exterior(&d))?;
    let (ma, mb) = (measure(a), measure(b));
    let base = ma.powf((n - 2.0 * s) / n);
    let (regime, mb_used, b_floored, bound) = if mb <= c_probe * ma {
        if s < 0.5 {
            (GmtRegime::SmallB, mb, false, base)
        } else {
            let (m, fl) = floor_b(mb, lat.cell_volume());
            let bound = if s == 0.5 {
                ma.powf((n - 1.0) / n) * (ma / m).ln()
            } else {
                base * (m / ma).powf(1.0 - 2.0 * s)
            };
            (GmtRegime::SmallB, m, fl, bound)
        }
    } else {
        (GmtRegime::LargeB, mb, false, base * (mb / ma).powf(-2.0 * s / n))
    };
    Ok(GmtReport {
        s,
        c_probe,
        measure_a: ma,
        measure_b: mb,
        measure_b_used: mb_used,
        b_floored,
        regime,
        l,
        bound,
        ratio: l / bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmtLocalReport {
    pub s: f64,
    pub sigma: f64,
    pub measure_q: f64,
    pub measure_a: f64,
    pub measure_d: f64,
    pub measure_b: f64,
    pub measure_b_used: f64,
    pub b_floored: bool,
    pub l: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `L(A, D)` for disjoint `A, D` inside a cube `Q`, against the localized
/// bound with `B = Q \ (A ∪ D)`.
pub fn check_gmt_local(kern: &KernelTable, a: &CellSet, d: &CellSet, q: &CellSet, sigma: f64) -> Result<GmtLocalReport> {
    let lat = kern.lattice();
    for set in [a, d, q] {
        lat.check_same(set.lattice())?;
    }
    let s = kern.s();
    if s < 0.5 {
        return Err(Error::Precondition(format!("localized bound needs s >= 1/2, got {s}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    check_disjoint(a, d)?;
    if !a.is_subset(q)? || !d.is_subset(q)? {
        return Err(Error::Precondition("A and D must lie inside Q".into()));
    }
    let (mq, ma, md) = (measure(q), measure(a), measure(d));
    for (name, m) in [("A", ma), ("D", md)] {
        if m < sigma * mq {
            return Err(Error::Precondition(format!("|{name}| = {m} is below sigma |Q| = {}", sigma * mq)));
        }
    }
    let mb = measure(&q.difference(&a.union(d)?)?);
    let (mb_used, b_floored) = floor_b(mb, lat.cell_volume());
    let n = lat.dim() as f64;
    let bound = if s == 0.5 {
        mq.powf((n - 1.0) / n) * (mq / mb_used).ln()
    } else {
        mq.powf((n - 2.0 * s) / n) * (mq / mb_used).powf(2.0 * s - 1.0)
    };
    let l = l_interaction(kern, a, Region::cells(d))?;
    Ok(GmtLocalReport {
        s,
        sigma,
        measure_q: mq,
        measure_a: ma,
        measure_d: md,
        measure_b: mb,
        measure_b_used: mb_used,
        b_floored,
        l,
        bound,
        ratio: l / bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevPoint {
    /// Cell-averaged `∫_{∁E} |x - y|^{-n-2s} dy`.
    pub lhs: f64,
    /// `lhs · |E|^{2s/n}`.
    pub constant: f64,
}

fn complement_mass(kern: &KernelTable, runs: &[crate::lattice::Run], x: usize) -> f64 {
    let vol = kern.lattice().cell_volume();
    (row_runs_mass(kern, x, runs) + vol * kern.tail_total()[x]) / vol
}

pub fn sobolev_set_bound(kern: &KernelTable, e: &CellSet, x: usize) -> Result<SobolevPoint> {
    let lat = kern.lattice();
    lat.check_same(e.lattice())?;
    if e.is_empty() {
        return Err(Error::Precondition("|E| must be positive".into()));
    }
    if x >= lat.len() {
        return Err(Error::Parameter(format!("cell {x} outside a lattice of {} cells", lat.len())));
    }
    let lhs = complement_mass(kern, &e.complement().runs(), x);
    let n = lat.dim() as f64;
    Ok(SobolevPoint { lhs, constant: lhs * measure(e).powf(2.0 * kern.s() / n) })
}

/// Point bounds at every cell of `xs`, in index order.
pub fn sobolev_set_bounds(kern: &KernelTable, e: &CellSet, xs: &CellSet) -> Result<Vec<(usize, SobolevPoint)>> {
    let lat = kern.lattice();
    lat.check_same(e.lattice())?;
    lat.check_same(xs.lattice())?;
    if e.is_empty() {
        return Err(Error::Precondition("|E| must be positive".into()));
    }
    let runs = e.complement().runs();
    let scale = measure(e).powf(2.0 * kern.s() / lat.dim() as f64);
    Ok(xs
        .indices()
        .into_par_iter()
        .map(|x| {
            let lhs = complement_mass(kern, &runs, x);
            (x, SobolevPoint { lhs, constant: lhs * scale })
        })
        .collect())
}

/// `∫_F ∫_{∁E} |x - y|^{-n-2s}` together with its ratio to `|F| |E|^{-2s/n}`.
pub fn sobolev_integrated(kern: &KernelTable, e: &CellSet, f: &CellSet) -> Result<(f64, f64)> {
    if f.is_empty() {
        return Err(Error::Precondition("|F| must be positive".into()));
    }
    let pts = sobolev_set_bounds(kern, e, f)?;
    let vol = kern.lattice().cell_volume();
    let total = csum(pts.iter().map(|(_, p)| p.lhs * vol));
    let n = kern.lattice().dim() as f64;
    Ok((total, total * measure(e).powf(2.0 * kern.s() / n) / measure(f)))
}

/// `ℓ(A)`: `|A|^{(1-2s)/n}` for `s < 1/2`, `log |A|` at `s = 1/2`, 1 above.
pub fn ell_scale(measure_a: f64, s: f64, dim: usize) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain { value: s, domain: "s in (0,1)" });
    }
    if dim != 1 && dim != 2 {
        return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
    }
    if !(measure_a > 0.0) || !measure_a.is_finite() {
        return Err(Error::Domain { value: measure_a, domain: "|A| > 0" });
    }
    if s < 0.5 {
        Ok(measure_a.powf((1.0 - 2.0 * s) / dim as f64))
    } else if s == 0.5 {
        if measure_a <= 1.0 {
            return Err(Error::Domain { value: measure_a, domain: "|A| > 1 when s = 1/2" });
        }
        Ok(measure_a.ln())
    } else {
        Ok(1.0)
    }
}
