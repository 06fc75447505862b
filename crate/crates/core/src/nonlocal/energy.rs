use rayon::prelude::*;

use super::kernel::{KernelTable, TailPart};
use crate::error::{Error, Result};
use crate::lattice::{CellSet, Run, ScalarField};
use crate::potential::DoubleWell;
use crate::sum::{csum, Neumaier};

/// A set of lattice cells, optionally together with all of `R^n` outside the box.
#[derive(Debug, Clone, Copy)]
pub struct Region<'a> {
    pub cells: &'a CellSet,
    pub exterior: bool,
}

impl<'a> Region<'a> {
    pub fn cells(cells: &'a CellSet) -> Self {
        Self { cells, exterior: false }
    }

    pub fn with_exterior(cells: &'a CellSet) -> Self {
        Self { cells, exterior: true }
    }
}

#[inline]
pub(crate) fn dot_sq(ui: f64, w: &[f64], uj: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (wc, uc) = (w.chunks_exact(4), uj.chunks_exact(4));
    let (wr, ur) = (wc.remainder(), uc.remainder());
    for (a, b) in wc.zip(uc) {
        for k in 0..4 {
            let d = ui - b[k];
            acc[k] += a[k] * d * d;
        }
    }
    let mut tail = 0.0;
    for (a, b) in wr.iter().zip(ur) {
        let d = ui - b;
        tail += a * d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn dot_lin(ui: f64, w: &[f64], uj: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (wc, uc) = (w.chunks_exact(4), uj.chunks_exact(4));
    let (wr, ur) = (wc.remainder(), uc.remainder());
    for (a, b) in wc.zip(uc) {
        for k in 0..4 {
            acc[k] += a[k] * (ui - b[k]);
        }
    }
    let mut tail = 0.0;
    for (a, b) in wr.iter().zip(ur) {
        tail += a * (ui - b);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn plain_sum(w: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let wc = w.chunks_exact(4);
    let wr = wc.remainder();
    for a in wc {
        for k in 0..4 {
            acc[k] += a[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + wr.iter().sum::<f64>()
}

/// `sum_{j in runs} w_ij (u_i - u_j)^2`, rows combined with compensation.
pub(crate) fn row_runs_sq(kern: &KernelTable, i: usize, ui: f64, u: &[f64], runs: &[Run]) -> f64 {
    let n0 = kern.lattice().shape()[0];
    let mut acc = Neumaier::new();
    for r in runs {
        let w = &kern.row_weights(i, r.row)[r.start..r.end];
        let base = r.row * n0;
        acc.add(dot_sq(ui, w, &u[base + r.start..base + r.end]));
    }
    acc.value()
}

pub(crate) fn row_runs_lin(kern: &KernelTable, i: usize, ui: f64, u: &[f64], runs: &[Run]) -> f64 {
    let n0 = kern.lattice().shape()[0];
    let mut acc = Neumaier::new();
    for r in runs {
        let w = &kern.row_weights(i, r.row)[r.start..r.end];
        let base = r.row * n0;
        acc.add(dot_lin(ui, w, &u[base + r.start..base + r.end]));
    }
    acc.value()
}

pub(crate) fn row_runs_mass(kern: &KernelTable, i: usize, runs: &[Run]) -> f64 {
    let mut acc = Neumaier::new();
    for r in runs {
        acc.add(plain_sum(&kern.row_weights(i, r.row)[r.start..r.end]));
    }
    acc.value()
}

/// `sum_parts T_i (u_i - value)^2` (without the `h^n` factor).
pub(crate) fn tail_sq(parts: &[TailPart], i: usize, ui: f64) -> f64 {
    parts.iter().map(|p| p.weights[i] * (ui - p.value) * (ui - p.value)).sum()
}

pub(crate) fn tail_lin(parts: &[TailPart], i: usize, ui: f64) -> f64 {
    parts.iter().map(|p| p.weights[i] * (ui - p.value)).sum()
}

fn check_field(kern: &KernelTable, u: &ScalarField) -> Result<()> {
    kern.lattice().check_same(u.lattice())
}

fn check_set(kern: &KernelTable, set: &CellSet) -> Result<()> {
    kern.lattice().check_same(set.lattice())
}

/// `K(u; Omega) = 1/2 sum_{Omega x Omega} + sum_{Omega x (Box \ Omega)} + exterior tails`.
pub fn gagliardo_k(kern: &KernelTable, u: &ScalarField, omega: &CellSet) -> Result<f64> {
    check_field(kern, u)?;
    check_set(kern, omega)?;
    let parts = kern.tail_parts(u.exterior())?;
    let vol = kern.lattice().cell_volume();
    let (inside, outside) = (omega.runs(), omega.complement().runs());
    let vals = u.values();
    let per: Vec<f64> = omega
        .indices()
        .into_par_iter()
        .map(|i| {
            let ui = vals[i];
            let mut acc = Neumaier::new();
            acc.add(0.5 * row_runs_sq(kern, i, ui, vals, &inside));
            acc.add(row_runs_sq(kern, i, ui, vals, &outside));
            acc.add(vol * tail_sq(&parts, i, ui));
            acc.value()
        })
        .collect();
    Ok(csum(per))
}

/// `h^n sum_{i in Omega} W(u_i)`.
pub fn potential_term(pot: &DoubleWell, u: &ScalarField, omega: &CellSet) -> Result<f64> {
    u.lattice().check_same(omega.lattice())?;
    let vol = u.lattice().cell_volume();
    Ok(vol * csum(omega.iter().map(|i| pot.value(u.values()[i]))))
}

pub fn energy_e(kern: &KernelTable, pot: &DoubleWell, u: &ScalarField, omega: &CellSet) -> Result<f64> {
    Ok(gagliardo_k(kern, u, omega)? + potential_term(pot, u, omega)?)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("eps must be positive, got {eps}")))
    }
}

pub fn energy_j_eps(kern: &KernelTable, pot: &DoubleWell, u: &ScalarField, omega: &CellSet, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let k = gagliardo_k(kern, u, omega)?;
    Ok(eps.powf(2.0 * kern.s()) * k + potential_term(pot, u, omega)?)
}

/// Rescaling factor turning `J_eps` into `F_eps`: `eps^-2s` for s < 1/2,
/// `1/|eps ln eps|` for s = 1/2 exactly, `1/eps` for s > 1/2.
pub fn f_eps_factor(s: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if s < 0.5 {
        Ok(eps.powf(-2.0 * s))
    } else if s == 0.5 {
        let l = (eps * eps.ln()).abs();
        if l == 0.0 {
            return Err(Error::Parameter("eps = 1 makes the s = 1/2 scaling degenerate".into()));
        }
        Ok(1.0 / l)
    } else {
        Ok(1.0 / eps)
    }
}

pub fn energy_f_eps(kern: &KernelTable, pot: &DoubleWell, u: &ScalarField, omega: &CellSet, eps: f64) -> Result<f64> {
    let factor = f_eps_factor(kern.s(), eps)?;
    Ok(factor * energy_j_eps(kern, pot, u, omega, eps)?)
}

/// `u(A, B) = sum_{i in A, j in B} w_ij (u_i - u_j)^2`, with the exterior of the
/// box handled by tails. At most one region may include the exterior.
pub fn interaction_u(kern: &KernelTable, u: &ScalarField, a: Region<'_>, b: Region<'_>) -> Result<f64> {
    check_field(kern, u)?;
    check_set(kern, a.cells)?;
    check_set(kern, b.cells)?;
    if a.exterior && b.exterior {
        return Err(Error::Parameter("the exterior cannot interact with itself".into()));
    }
    let (a, b) = if a.exterior { (b, a) } else { (a, b) };
    let parts = if b.exterior { kern.tail_parts(u.exterior())? } else { Vec::new() };
    let vol = kern.lattice().cell_volume();
    let runs = b.cells.runs();
    let vals = u.values();
    let per: Vec<f64> = a
        .cells
        .indices()
        .into_par_iter()
        .map(|i| {
            let ui = vals[i];
            let mut acc = Neumaier::new();
            acc.add(row_runs_sq(kern, i, ui, vals, &runs));
            acc.add(vol * tail_sq(&parts, i, ui));
            acc.value()
        })
        .collect();
    Ok(csum(per))
}

/// Discrete fractional Laplacian in the gradient convention:
/// `sum_j w_ij (u_i - u_j) + h^n sum_parts T_i (u_i - value)`, which is half
/// the partial derivative of `K` in `u_i`. Dividing by `h^n` gives the
/// pointwise operator value.
pub fn frac_laplacian(kern: &KernelTable, u: &ScalarField, cells: &[usize]) -> Result<Vec<f64>> {
    check_field(kern, u)?;
    let n = kern.lattice().len();
    if let Some(&bad) = cells.iter().find(|&&i| i >= n) {
        return Err(Error::Parameter(format!("cell {bad} outside the lattice")));
    }
    let parts = kern.tail_parts(u.exterior())?;
    let vol = kern.lattice().cell_volume();
    let runs = CellSet::full(kern.lattice()).runs();
    let vals = u.values();
    Ok(cells
        .par_iter()
        .map(|&i| {
            let ui = vals[i];
            row_runs_lin(kern, i, ui, vals, &runs) + vol * tail_lin(&parts, i, ui)
        })
        .collect())
}
