//! Least-squares line fits with a Student-t confidence interval on the slope.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: Option<f64>,
    pub ci95: Option<[f64; 2]>,
    pub residuals: Vec<f64>,
}

impl LineFit {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Ordinary least squares of `y` on `x`; `None` with fewer than two points
/// or a degenerate abscissa.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let (slope_se, ci95) = if n > 2 {
        let dof = nf - 2.0;
        let se = (residuals.iter().map(|r| r * r).sum::<f64>() / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof).ok().map(|d| d.inverse_cdf(0.975));
        (Some(se), t.map(|t| [slope - t * se, slope + t * se]))
    } else {
        (None, None)
    };
    Some(LineFit { slope, intercept, slope_se, ci95, residuals })
}

/// Fit of `ln y` on `ln x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}
