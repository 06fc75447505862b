//! Projected spectral-gradient minimization of `J_eps(u; Omega) = eps^2s K + int_Omega W(u)`
//! over fields fixed outside `Omega` and constrained to `[-1, 1]`.
//!
//! Results are stationary points of the box-constrained discrete energy; they
//! are not certified global minimizers. [`subdomain_check`] probes local
//! minimality on subdomains.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CellSet, ExteriorData, Lattice, Run, ScalarField};
use crate::nonlocal::{energy_e, KernelTable, TailPart};
use crate::potential::DoubleWell;
use crate::sum::{csum, Neumaier};

pub const ACTIVE_TOL: f64 = 1e-9;

/// Initial field for a minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Seed {
    /// The exterior descriptor evaluated at cell centers.
    Exterior,
    Constant(f64),
}

impl Seed {
    pub fn field(&self, lattice: Lattice, exterior: ExteriorData) -> Result<ScalarField> {
        match self {
            Seed::Exterior => ScalarField::from_exterior(lattice, exterior),
            Seed::Constant(v) => {
                let f = ScalarField::from_exterior(lattice, exterior)?;
                f.with_values(vec![*v; lattice.len()])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Sup-norm tolerance on the projected gradient step `P(u - g) - u`.
    pub grad_tol: f64,
    /// Relative energy decrease over a 10-iteration window.
    pub energy_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Scales the interaction term by `eps^2s`; 1 minimizes `E`.
    pub eps: f64,
    pub seed: Seed,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-7,
            energy_tol: 1e-13,
            armijo: 1e-4,
            max_backtracks: 40,
            eps: 1.0,
            seed: Seed::Exterior,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be >= 1".into()));
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("energy_tol", self.energy_tol), ("eps", self.eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Parameter(format!("armijo constant must lie in (0, 1), got {}", self.armijo)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradTol,
    EnergyWindow,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: ScalarField,
    pub omega: CellSet,
    pub trace: Vec<TraceRow>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
}

impl MinimizeResult {
    pub fn energy(&self) -> f64 {
        self.trace.last().map(|t| t.energy).unwrap_or(f64::NAN)
    }

    pub fn energy_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.energy).collect()
    }

    /// CSV with columns `iteration,energy,grad_norm,step`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.trace {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// The energy restricted to the cells of `Omega`, with the coupling to fixed
/// cells and to the exterior folded into per-cell quadratics
/// `A_i x^2 - 2 B_i x + C_i`.
pub struct Reduced<'a> {
    kern: &'a KernelTable,
    pot: &'a DoubleWell,
    scale: f64,
    vol: f64,
    free: Vec<usize>,
    free_runs: Vec<Run>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    template: Vec<f64>,
}

#[inline]
fn dot_both(ui: f64, w: &[f64], uj: &[f64]) -> (f64, f64) {
    let mut sq = [0.0f64; 4];
    let mut li = [0.0f64; 4];
    let (wc, uc) = (w.chunks_exact(4), uj.chunks_exact(4));
    let (wr, ur) = (wc.remainder(), uc.remainder());
    for (a, b) in wc.zip(uc) {
        for k in 0..4 {
            let d = ui - b[k];
            let wd = a[k] * d;
            li[k] += wd;
            sq[k] += wd * d;
        }
    }
    let (mut ts, mut tl) = (0.0, 0.0);
    for (a, b) in wr.iter().zip(ur) {
        let d = ui - b;
        tl += a * d;
        ts += a * d * d;
    }
    ((sq[0] + sq[1]) + (sq[2] + sq[3]) + ts, (li[0] + li[1]) + (li[2] + li[3]) + tl)
}

fn fixed_moments(kern: &KernelTable, i: usize, u: &[f64], runs: &[Run]) -> (f64, f64, f64) {
    let n0 = kern.lattice().shape()[0];
    let (mut m0, mut m1, mut m2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for r in runs {
        let w = &kern.row_weights(i, r.row)[r.start..r.end];
        let uj = &u[r.row * n0 + r.start..r.row * n0 + r.end];
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (wk, uk) in w.iter().zip(uj) {
            a += wk;
            b += wk * uk;
            c += wk * uk * uk;
        }
        m0.add(a);
        m1.add(b);
        m2.add(c);
    }
    (m0.value(), m1.value(), m2.value())
}

impl<'a> Reduced<'a> {
    pub fn new(kern: &'a KernelTable, pot: &'a DoubleWell, u: &ScalarField, omega: &CellSet, eps: f64) -> Result<Self> {
        kern.lattice().check_same(u.lattice())?;
        kern.lattice().check_same(omega.lattice())?;
        let parts: Vec<TailPart> = kern.tail_parts(u.exterior())?;
        let vol = kern.lattice().cell_volume();
        let free = omega.indices();
        let fixed_runs = omega.complement().runs();
        let vals = u.values();
        let moments: Vec<(f64, f64, f64)> = free
            .par_iter()
            .map(|&i| {
                let (m0, m1, m2) = fixed_moments(kern, i, vals, &fixed_runs);
                let t0: f64 = parts.iter().map(|p| p.weights[i]).sum();
                let t1: f64 = parts.iter().map(|p| p.weights[i] * p.value).sum();
                let t2: f64 = parts.iter().map(|p| p.weights[i] * p.value * p.value).sum();
                (m0 + vol * t0, m1 + vol * t1, m2 + vol * t2)
            })
            .collect();
        Ok(Self {
            kern,
            pot,
            scale: eps.powf(2.0 * kern.s()),
            vol,
            free,
            free_runs: omega.runs(),
            a: moments.iter().map(|m| m.0).collect(),
            b: moments.iter().map(|m| m.1).collect(),
            c: moments.iter().map(|m| m.2).collect(),
            template: vals.to_vec(),
        })
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn initial(&self) -> Vec<f64> {
        self.free.iter().map(|&i| self.template[i]).collect()
    }

    /// Full-lattice values with the free cells replaced by `x`.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.template.clone();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        full
    }

    /// Energy and its gradient with respect to the free values.
    pub fn energy_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let full = self.expand(x);
        let per: Vec<(f64, f64)> = self
            .free
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let xi = x[k];
                let n0 = self.kern.lattice().shape()[0];
                let (mut sq, mut li) = (Neumaier::new(), Neumaier::new());
                for r in &self.free_runs {
                    let w = &self.kern.row_weights(i, r.row)[r.start..r.end];
                    let (a, b) = dot_both(xi, w, &full[r.row * n0 + r.start..r.row * n0 + r.end]);
                    sq.add(a);
                    li.add(b);
                }
                let quad = self.a[k] * xi * xi - 2.0 * self.b[k] * xi + self.c[k];
                let e = self.scale * (0.5 * sq.value() + quad) + self.vol * self.pot.value(xi);
                let g = self.scale * 2.0 * (li.value() + self.a[k] * xi - self.b[k]) + self.vol * self.pot.deriv(xi);
                (e, g)
            })
            .collect();
        let e = csum(per.iter().map(|p| p.0));
        (e, per.into_iter().map(|p| p.1).collect())
    }
}

fn project(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

fn projected_step_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(&xi, &gi)| (project(xi - gi) - xi).abs()).fold(0.0, f64::max)
}

pub fn minimize_energy(
    kern: &KernelTable,
    pot: &DoubleWell,
    u0: &ScalarField,
    omega: &CellSet,
    cfg: &MinimizeConfig,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    let red = Reduced::new(kern, pot, u0, omega, cfg.eps)?;
    let mut x = red.initial();
    let (mut f, mut g) = red.energy_and_grad(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("energy at the initial field".into()));
    }
    let mut pg = projected_step_norm(&x, &g);
    let mut trace = vec![TraceRow { iteration: 0, energy: f, grad_norm: pg, step: 0.0 }];
    let ginf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = if ginf > 0.0 { (1.0 / ginf).clamp(1e-10, 1.0) } else { 1.0 };
    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        if pg < cfg.grad_tol {
            stop = StopReason::GradTol;
            break;
        }
        let mut accepted = None;
        let mut step = alpha;
        for _ in 0..=cfg.max_backtracks {
            let xn: Vec<f64> = x.iter().zip(&g).map(|(&xi, &gi)| project(xi - step * gi)).collect();
            let gd = csum(xn.iter().zip(&x).zip(&g).map(|((a, b), gi)| gi * (a - b)));
            let (fn_, gn) = red.energy_and_grad(&xn);
            if fn_.is_finite() && fn_ <= f + cfg.armijo * gd && fn_ <= f {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };
        // Barzilai-Borwein step for the next iteration.
        let mut ss = Neumaier::new();
        let mut sy = Neumaier::new();
        for k in 0..x.len() {
            let sk = xn[k] - x[k];
            ss.add(sk * sk);
            sy.add(sk * (gn[k] - g[k]));
        }
        alpha = if sy.value() > 0.0 { (ss.value() / sy.value()).clamp(1e-10, 1e10) } else { 1e10_f64.min(step * 4.0) };
        x = xn;
        f = fn_;
        g = gn;
        pg = projected_step_norm(&x, &g);
        iterations = it;
        trace.push(TraceRow { iteration: it, energy: f, grad_norm: pg, step });
        if it >= 10 {
            let old = trace[it - 10].energy;
            if old - f <= cfg.energy_tol * f.abs() {
                stop = if pg < cfg.grad_tol { StopReason::GradTol } else { StopReason::EnergyWindow };
                break;
            }
        }
        if pg < cfg.grad_tol {
            stop = StopReason::GradTol;
            break;
        }
    }
    let converged = matches!(stop, StopReason::GradTol | StopReason::EnergyWindow);
    let field = u0.with_values(red.expand(&x))?;
    Ok(MinimizeResult { field, omega: omega.clone(), trace, grad_norm: pg, iterations, converged, stop })
}

/// Energy `E(u; Omega)` and its gradient over the cells of `Omega` (in index order).
pub fn energy_and_gradient(
    kern: &KernelTable,
    pot: &DoubleWell,
    u: &ScalarField,
    omega: &CellSet,
) -> Result<(f64, Vec<f64>)> {
    let red = Reduced::new(kern, pot, u, omega, 1.0)?;
    Ok(red.energy_and_grad(&red.initial()))
}

/// Discrete Euler-Lagrange residual `dE/du_i = 2 FL_i + h^n W'(u_i)` on the
/// cells of `interior` where the constraint is inactive (`|u_i| < 1 - active_tol`).
pub fn el_residual(
    kern: &KernelTable,
    pot: &DoubleWell,
    u: &ScalarField,
    interior: &CellSet,
) -> Result<Vec<(usize, f64)>> {
    let (_, g) = energy_and_gradient(kern, pot, u, interior)?;
    Ok(interior
        .iter()
        .zip(g)
        .filter(|&(i, _)| u.values()[i].abs() < 1.0 - ACTIVE_TOL)
        .collect())
}

pub fn sup_residual(res: &[(usize, f64)]) -> f64 {
    res.iter().fold(0.0, |m, r| m.max(r.1.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainReport {
    pub trials: usize,
    pub amplitude: f64,
    /// `min (E(u + phi) - E(u) + grad_tol |phi|_inf)` over the trials.
    pub worst_margin: f64,
    pub worst_trial: usize,
    pub passes: bool,
}

/// Energy change on `omega_sub` under admissible perturbations supported
/// there. Trial 0 is the projected steepest-descent sign pattern, the rest are
/// uniform random with sup-norm `amplitude`.
#[allow(clippy::too_many_arguments)]
pub fn subdomain_check(
    kern: &KernelTable,
    pot: &DoubleWell,
    result: &MinimizeResult,
    omega_sub: &CellSet,
    trials: usize,
    amplitude: f64,
    grad_tol: f64,
    seed: u64,
) -> Result<SubdomainReport> {
    if !omega_sub.is_subset(&result.omega)? {
        return Err(Error::Precondition("omega_sub is not contained in the minimization domain".into()));
    }
    let u = &result.field;
    let red = Reduced::new(kern, pot, u, omega_sub, 1.0)?;
    let x0 = red.initial();
    let (e0, g0) = red.energy_and_grad(&x0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (f64::INFINITY, 0usize);
    for t in 0..trials.max(1) {
        let x: Vec<f64> = if t == 0 {
            x0.iter().zip(&g0).map(|(&xi, &gi)| project(xi - amplitude * gi.signum())).collect()
        } else {
            x0.iter().map(|&xi| project(xi + rng.gen_range(-amplitude..=amplitude))).collect()
        };
        let norm = x.iter().zip(&x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let margin = if norm == 0.0 { 0.0 } else { red.energy_and_grad(&x).0 - e0 + grad_tol * norm };
        if margin < worst.0 {
            worst = (margin, t);
        }
    }
    Ok(SubdomainReport {
        trials: trials.max(1),
        amplitude,
        worst_margin: worst.0,
        worst_trial: worst.1,
        passes: worst.0 >= -1e-6,
    })
}

/// Energy of `u` on `omega` recomputed from scratch (pairwise sums).
pub fn recompute_energy(kern: &KernelTable, pot: &DoubleWell, u: &ScalarField, omega: &CellSet) -> Result<f64> {
    energy_e(kern, pot, u, omega)
}
