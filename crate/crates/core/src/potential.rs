//! Double-well potentials `W : [-1, 1] -> [0, inf)` vanishing at the pure phases.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DoubleWell {
    /// `W(t) = a (1 - t^2)^2`.
    Quartic { a: f64 },
    Tabulated(Spline),
}

impl Default for DoubleWell {
    fn default() -> Self {
        DoubleWell::Quartic { a: 0.25 }
    }
}

fn check_domain(t: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain { value: t, domain: "[-1, 1]" })
    }
}

impl DoubleWell {
    pub fn quartic(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Parameter(format!("quartic amplitude must be positive, got {a}")));
        }
        Ok(DoubleWell::Quartic { a })
    }

    pub fn tabulated(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        Ok(DoubleWell::Tabulated(Spline::clamped(t, w, 0.0, 0.0)?))
    }

    /// Two-column CSV `t,W`; a non-numeric first row is taken as a header.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
        let (mut ts, mut ws) = (Vec::new(), Vec::new());
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("row {k}: expected two columns")));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(t), Ok(w)) => {
                    ts.push(t);
                    ws.push(w);
                }
                _ if k == 0 => continue,
                _ => return Err(Error::Parse(format!("row {k}: non-numeric entry"))),
            }
        }
        Self::tabulated(ts, ws)
    }

    pub fn w_eval(&self, t: f64) -> Result<f64> {
        check_domain(t)?;
        Ok(self.value(t))
    }

    pub fn w_deriv(&self, t: f64) -> Result<f64> {
        check_domain(t)?;
        Ok(self.deriv(t))
    }

    pub fn w_second(&self, t: f64) -> Result<f64> {
        check_domain(t)?;
        Ok(self.second(t))
    }

    /// `W(t)` without the domain check; callers guarantee `t` in `[-1, 1]`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DoubleWell::Quartic { a } => {
                let q = 1.0 - t * t;
                a * q * q
            }
            DoubleWell::Tabulated(s) => s.eval(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            DoubleWell::Quartic { a } => -4.0 * a * t * (1.0 - t * t),
            DoubleWell::Tabulated(s) => s.deriv(t),
        }
    }

    pub fn second(&self, t: f64) -> f64 {
        match self {
            DoubleWell::Quartic { a } => 4.0 * a * (3.0 * t * t - 1.0),
            DoubleWell::Tabulated(s) => s.second(t),
        }
    }
}

/// Cubic spline with prescribed end slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn clamped(t: Vec<f64>, y: Vec<f64>, slope_lo: f64, slope_hi: f64) -> Result<Self> {
        let n = t.len();
        if n < 2 || y.len() != n {
            return Err(Error::Parameter("spline needs at least two (t, W) pairs of equal length".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("spline nodes must be strictly increasing".into()));
        }
        if t[0] != -1.0 || t[n - 1] != 1.0 {
            return Err(Error::Parameter("tabulated potential must span exactly [-1, 1]".into()));
        }
        if y.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tabulated potential".into()));
        }
        // Tridiagonal system for the second derivatives m_i (Thomas algorithm).
        let hs: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = hs[0] / 3.0;
        upper[0] = hs[0] / 6.0;
        rhs[0] = (y[1] - y[0]) / hs[0] - slope_lo;
        for i in 1..n - 1 {
            lower[i] = hs[i - 1] / 6.0;
            diag[i] = (hs[i - 1] + hs[i]) / 3.0;
            upper[i] = hs[i] / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / hs[i] - (y[i] - y[i - 1]) / hs[i - 1];
        }
        lower[n - 1] = hs[n - 2] / 6.0;
        diag[n - 1] = hs[n - 2] / 3.0;
        rhs[n - 1] = slope_hi - (y[n - 1] - y[n - 2]) / hs[n - 2];
        for i in 1..n {
            let f = lower[i] / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { t, y, m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.t.len();
        match self.t.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn parts(&self, x: f64) -> (usize, f64, f64, f64) {
        let k = self.segment(x);
        let h = self.t[k + 1] - self.t[k];
        let a = (self.t[k + 1] - x) / h;
        let b = (x - self.t[k]) / h;
        (k, h, a, b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (k, h, a, b) = self.parts(x);
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (k, h, a, b) = self.parts(x);
        (self.y[k + 1] - self.y[k]) / h
            + (-(3.0 * a * a - 1.0) * self.m[k] + (3.0 * b * b - 1.0) * self.m[k + 1]) * h / 6.0
    }

    pub fn second(&self, x: f64) -> f64 {
        let (k, _, a, b) = self.parts(x);
        a * self.m[k] + b * self.m[k + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcondReport {
    pub w_at_minus_one: f64,
    pub w_at_plus_one: f64,
    pub min_interior: f64,
    pub dw_at_ends: [f64; 2],
    pub d2w_at_ends: [f64; 2],
    pub passes: bool,
}

/// Samples `W` at `samples` interior points and checks the end conditions.
pub fn check_wcond(pot: &DoubleWell, samples: usize) -> WcondReport {
    let n = samples.max(2);
    let min_interior = (1..n)
        .map(|k| -1.0 + 2.0 * k as f64 / n as f64)
        .map(|t| pot.value(t))
        .fold(f64::INFINITY, f64::min);
    let (wm, wp) = (pot.value(-1.0), pot.value(1.0));
    let dw = [pot.deriv(-1.0), pot.deriv(1.0)];
    let d2w = [pot.second(-1.0), pot.second(1.0)];
    let tiny = 1e-12;
    let passes = wm.abs() <= tiny
        && wp.abs() <= tiny
        && min_interior > 0.0
        && dw.iter().all(|d| d.abs() <= tiny)
        && d2w.iter().all(|&d| d > 0.0);
    WcondReport { w_at_minus_one: wm, w_at_plus_one: wp, min_interior, dw_at_ends: dw, d2w_at_ends: d2w, passes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowReport {
    pub c: f64,
    /// Smallest slack over both conditions; negative means a violation.
    pub margin: f64,
    pub worst_pair: (f64, f64),
    pub pairs_checked: usize,
    pub passes: bool,
}

/// Checks on a grid of pairs `r <= t`:
/// `W(t) >= W(r) + c(1+r)(t-r) + c(t-r)^2` for `t <= -1 + c`, and
/// `W(r) - W(t) <= (1+r)/c` on all of `[-1, 1]`.
/// `samples` is the number of grid points per variable for each condition.
pub fn check_grow(pot: &DoubleWell, c: f64, samples: usize) -> GrowReport {
    let n = samples.max(2);
    let mut margin = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut pairs = 0;
    let hi1 = (-1.0 + c).min(1.0);
    for (top, first) in [(hi1, true), (1.0, false)] {
        let grid: Vec<f64> = (0..n).map(|k| -1.0 + (top + 1.0) * k as f64 / (n - 1) as f64).collect();
        for (i, &r) in grid.iter().enumerate() {
            let wr = pot.value(r);
            for &t in &grid[i..] {
                let wt = pot.value(t);
                let m = if first {
                    wt - (wr + c * (1.0 + r) * (t - r) + c * (t - r) * (t - r))
                } else {
                    (1.0 + r) / c - (wr - wt)
                };
                pairs += 1;
                if m < margin {
                    margin = m;
                    worst = (r, t);
                }
            }
        }
    }
    GrowReport { c, margin, worst_pair: worst, pairs_checked: pairs, passes: margin >= -1e-12 }
}

/// Largest `c` in `(0, c_max]` accepted by [`check_grow`], by bisection.
/// `None` when even `c_min` fails.
pub fn find_grow_constant(pot: &DoubleWell, c_min: f64, c_max: f64, samples: usize) -> Option<f64> {
    if !check_grow(pot, c_min, samples).passes {
        return None;
    }
    if check_grow(pot, c_max, samples).passes {
        return Some(c_max);
    }
    let (mut lo, mut hi) = (c_min, c_max);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if check_grow(pot, mid, samples).passes {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
