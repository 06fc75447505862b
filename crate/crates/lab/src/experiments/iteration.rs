use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Series};

/// Two sample radii are the same point when they agree to this relative precision.
const RADIUS_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Conclusion {
    Holds { checked: usize },
    Fails { first_r: f64, value: f64, bound: f64 },
    /// No sample at or beyond `R⋆`.
    Untested,
    /// A hypothesis failed, so the conclusion was not evaluated.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub sigma: f64,
    pub nu: f64,
    pub gamma: f64,
    pub c_const: f64,
    pub r_o: f64,
    pub mu: f64,
    pub ind1_holds: bool,
    pub ind2_holds: bool,
    /// Sample pairs `(r, γr)` with `r ≥ R_o` on which the doubling hypothesis was checked.
    pub pairs_checked: usize,
    /// First radius at which a hypothesis fails.
    pub first_violation: Option<f64>,
    pub c: f64,
    pub j1: u32,
    pub j2: u32,
    pub r_star: f64,
    pub conclusion: Conclusion,
}

impl IterationReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.ind1_holds && self.ind2_holds
    }

    /// Hypotheses hold and the conclusion is not contradicted by a sample.
    pub fn passes(&self) -> bool {
        self.hypotheses_hold() && !matches!(self.conclusion, Conclusion::Fails { .. })
    }
}

fn alpha(v: f64, r: f64) -> f64 {
    (v.ln() / r.ln()).min(1.0)
}

fn find_sample(samples: &[(f64, f64)], r: f64) -> Option<f64> {
    samples.iter().find(|(x, _)| (x - r).abs() <= RADIUS_MATCH * r.abs()).map(|p| p.1)
}

/// Checks the doubling iteration on sampled `V`: the start condition
/// `V(R_o) ≥ μ`, the doubling hypothesis
/// `r^σ α(r) V(r)^{(ν−σ)/ν} ≤ C V(γr)` on sample pairs, and then
/// `V(r) ≥ c r^ν` for samples beyond `R⋆` with the constructive `c`.
///
/// `samples` are `(r, V(r))` with strictly increasing `r`; `V(R_o)` must be
/// one of them.
pub fn check_iteration_lemma(
    samples: &[(f64, f64)],
    sigma: f64,
    nu: f64,
    gamma: f64,
    c_const: f64,
    r_o: f64,
    mu: f64,
) -> Result<IterationReport> {
    let bad = |m: String| Err(LabError::Experiment(m));
    if !(nu > sigma && sigma > 0.0) {
        return bad(format!("need nu > sigma > 0, got nu = {nu}, sigma = {sigma}"));
    }
    if !(gamma > 1.0) || !(c_const > 1.0) || !(r_o > 1.0) || !(mu > 0.0) {
        return bad(format!("need gamma > 1, C > 1, R_o > 1, mu > 0; got {gamma}, {c_const}, {r_o}, {mu}"));
    }
    if samples.is_empty() {
        return bad("no samples".into());
    }
    if samples.iter().any(|&(r, v)| !(r > 0.0) || !(v > 0.0) || !r.is_finite() || !v.is_finite()) {
        return bad("samples must be positive and finite".into());
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return bad("sample radii must be strictly increasing".into());
    }
    if let Some(w) = samples.windows(2).find(|w| w[1].1 < w[0].1) {
        return bad(format!("V decreases between r = {} and r = {}", w[0].0, w[1].0));
    }
    let v_ro = find_sample(samples, r_o).ok_or_else(|| LabError::Experiment(format!("no sample at R_o = {r_o}")))?;

    let mut first_violation = None;
    let ind1_holds = v_ro >= mu;
    if !ind1_holds {
        first_violation = Some(r_o);
    }
    let mut ind2_holds = true;
    let mut pairs_checked = 0;
    for &(r, v) in samples.iter().filter(|p| p.0 >= r_o * (1.0 - RADIUS_MATCH)) {
        let Some(v_next) = find_sample(samples, gamma * r) else { continue };
        pairs_checked += 1;
        let lhs = r.powf(sigma) * alpha(v, r) * v.powf((nu - sigma) / nu);
        if lhs > c_const * v_next {
            ind2_holds = false;
            first_violation.get_or_insert(r);
            break;
        }
    }

    let mut j1 = 0u32;
    while gamma.powi(j1 as i32) < r_o {
        j1 += 1;
    }
    let gn = gamma.powf(nu);
    let c = (mu / gamma.powf(nu * j1 as f64))
        .min((1.0 / (c_const * gn)).powf(nu / sigma))
        .min((nu / (2.0 * c_const * gn)).powf(nu / sigma));
    // Smallest j2 >= 1 with |log c| / (j2 log γ) <= ν/2; the relative slack
    // absorbs rounding when the quotient is an exact integer.
    let q = 2.0 * c.ln().abs() / (nu * gamma.ln());
    let j2 = ((q * (1.0 - 1e-12)).ceil() as u32).max(1);
    let r_star = gamma.powi((j1 + j2) as i32);

    let beyond: Vec<&(f64, f64)> = samples.iter().filter(|p| p.0 >= r_star * (1.0 - RADIUS_MATCH)).collect();
    let conclusion = if !(ind1_holds && ind2_holds) {
        Conclusion::Skipped
    } else if beyond.is_empty() {
        Conclusion::Untested
    } else {
        match beyond.iter().find(|(r, v)| *v < c * r.powf(nu)) {
            Some(&&(r, v)) => Conclusion::Fails { first_r: r, value: v, bound: c * r.powf(nu) },
            None => Conclusion::Holds { checked: beyond.len() },
        }
    };
    Ok(IterationReport {
        sigma,
        nu,
        gamma,
        c_const,
        r_o,
        mu,
        ind1_holds,
        ind2_holds,
        pairs_checked,
        first_violation,
        c,
        j1,
        j2,
        r_star,
        conclusion,
    })
}

/// Synthetic samples at `r = R_o γ^k`, `k = 0..samples`.
pub fn synthetic_samples(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let radii = (0..cfg.samples).map(|k| cfg.r_o * cfg.gamma.powi(k as i32));
    match cfg.model.as_str() {
        "power" => Ok(radii.map(|r| (r, cfg.mu * (r / cfg.r_o).powf(cfg.nu))).collect()),
        "constant" => Ok(radii.map(|r| (r, cfg.mu)).collect()),
        m => Err(LabError::Config(format!("unknown model '{m}', expected power or constant"))),
    }
}

pub fn run_iterate(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let samples = synthetic_samples(cfg)?;
    let rep_lemma = check_iteration_lemma(&samples, cfg.sigma, cfg.nu, cfg.gamma, cfg.c_const, cfg.r_o, cfg.mu)?;
    let mut series = Series::new(&["radius", "v", "bound"]);
    for &(r, v) in &samples {
        series.push(vec![r, v, rep_lemma.c * r.powf(cfg.nu)]);
    }
    let mut rep = ExperimentReport::new(cfg, series);
    rep.constant("c", rep_lemma.c);
    rep.constant("r_star", rep_lemma.r_star);
    let where_ = rep_lemma.first_violation.map_or(String::new(), |r| format!(", first violation at r = {r}"));
    rep.criterion(
        "hypotheses",
        rep_lemma.hypotheses_hold(),
        format!(
            "V(R_o) >= mu: {}; doubling on {} pairs: {}{where_}",
            rep_lemma.ind1_holds, rep_lemma.pairs_checked, rep_lemma.ind2_holds
        ),
    );
    let detail = match &rep_lemma.conclusion {
        Conclusion::Holds { checked } => format!("V(r) >= c r^nu at {checked} samples beyond R* = {}", rep_lemma.r_star),
        Conclusion::Fails { first_r, value, bound } => format!("V({first_r}) = {value} < {bound}"),
        Conclusion::Untested => format!("untested: no sample beyond R* = {}", rep_lemma.r_star),
        Conclusion::Skipped => "not evaluated: a hypothesis fails".into(),
    };
    rep.criterion("conclusion", !matches!(rep_lemma.conclusion, Conclusion::Fails { .. }), detail);
    rep.detail("lemma", &rep_lemma)?;
    Ok(rep.finish())
}
