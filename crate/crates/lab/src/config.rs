//! Flat `key = value` experiment configuration.
//!
//! Each experiment starts from its preset; a config file and then command
//! line `key=value` overrides are layered on top. Lists are comma separated.
//! Lines starting with `#` are comments.

use std::fmt;
use std::path::Path;

use fgl_core::lattice::ExteriorData;
use fgl_core::potential::DoubleWell;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EnergyGrowth,
    Density,
    Levelset,
    Gmt,
    Sobolev,
    Barrier,
    Iterate,
    KernelCache,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub s: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub eps: Vec<f64>,
    /// Cell size; for `levelset` the physical cell size.
    pub h: f64,
    /// Extra cells between the largest domain and the lattice box.
    pub pad: i64,
    /// Half-width of the lattice box in cells (set experiments, density).
    pub box_half: i64,
    pub near_radius: usize,
    pub quad_tol: f64,
    /// `quartic`, `quartic:<a>` or `table:<csv path>`.
    pub potential: String,
    /// `halfspace`, `halfspace:<axis>:<threshold>` or `constant:<value>`.
    pub exterior: String,
    #[serde(deserialize_with = "one_or_many")]
    pub radii: Vec<f64>,
    pub theta1: f64,
    pub theta2: f64,
    pub theta_star: Option<f64>,
    pub domain_radius: f64,
    pub density_floor: f64,
    pub theta: f64,
    pub measure_radius: f64,
    /// Final level-set distance allowed, in cells.
    pub delta_target: f64,
    pub slope_tol: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub energy_tol: f64,
    pub seed: u64,
    pub tau: f64,
    pub barrier_r: f64,
    pub c5_samples: usize,
    pub cases: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub s_list: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub c_probe: Vec<f64>,
    pub b_fraction_max: f64,
    pub margin: i64,
    pub max_side: i64,
    pub refine_cases: usize,
    pub oracle_cases: usize,
    pub oracle_subdivision: usize,
    pub ball_radius: f64,
    pub sigma: f64,
    pub nu: f64,
    pub gamma: f64,
    pub c_const: f64,
    pub r_o: f64,
    pub mu: f64,
    /// Synthetic series for `iterate`: `power` (`mu (r/r_o)^nu`) or `constant`.
    pub model: String,
    pub samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::EnergyGrowth,
            dim: 1,
            s: 0.25,
            eps: vec![1.0],
            h: 0.5,
            pad: 8,
            box_half: 16,
            near_radius: 4,
            quad_tol: 1e-6,
            potential: "quartic:0.25".into(),
            exterior: "halfspace".into(),
            radii: vec![16.0, 32.0, 64.0, 128.0],
            theta1: 0.0,
            theta2: 0.0,
            theta_star: None,
            domain_radius: 56.0,
            density_floor: 0.25 * std::f64::consts::FRAC_PI_2,
            theta: 0.9,
            measure_radius: 1.0,
            delta_target: 4.0,
            slope_tol: 0.15,
            max_iters: 20_000,
            grad_tol: 1e-7,
            energy_tol: 1e-13,
            seed: 1,
            tau: 0.1,
            barrier_r: 400.0,
            c5_samples: 400,
            cases: 50,
            s_list: vec![0.25, 0.5, 0.75],
            c_probe: vec![0.01, 0.05, 0.1],
            b_fraction_max: 0.2,
            margin: 3,
            max_side: 8,
            refine_cases: 10,
            oracle_cases: 5,
            oracle_subdivision: 8,
            ball_radius: 5.0,
            sigma: 1.0,
            nu: 2.0,
            gamma: 2.0,
            c_const: 2.0,
            r_o: 2.0,
            mu: 4.0,
            model: "power".into(),
            samples: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self { experiment, ..Self::default() };
        match experiment {
            Experiment::EnergyGrowth => base,
            Experiment::Density => Self {
                dim: 2,
                h: 1.0,
                box_half: 64,
                radii: vec![8.0, 16.0, 32.0],
                domain_radius: 56.0,
                max_iters: 5000,
                grad_tol: 1e-6,
                ..base
            },
            Experiment::Levelset => Self {
                s: 0.75,
                h: 1.0 / 32.0,
                eps: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
                domain_radius: 2.0,
                ..base
            },
            Experiment::Gmt => Self { dim: 2, h: 1.0, box_half: 16, cases: 50, ..base },
            Experiment::Sobolev => Self { dim: 2, h: 1.0, box_half: 16, cases: 100, ..base },
            Experiment::Barrier => Self { s: 0.5, h: 1.0, ..base },
            Experiment::Iterate => base,
            Experiment::KernelCache => Self { h: 1.0, ..base },
        }
    }

    /// Preset for `experiment` with `overrides` (already split into pairs)
    /// applied in order.
    pub fn build(experiment: Experiment, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = match serde_json::to_value(Self::preset(experiment))? {
            Value::Object(m) => m,
            _ => unreachable!("config serializes to an object"),
        };
        for (k, v) in overrides {
            if k == "experiment" && v != &experiment.to_string() {
                return Err(LabError::Config(format!("config is for experiment '{v}', not '{experiment}'")));
            }
            if !map.contains_key(k) {
                return Err(LabError::Config(format!("unknown key '{k}'")));
            }
            map.insert(k.clone(), guess_value(v));
        }
        let cfg: Self = serde_json::from_value(Value::Object(map))
            .map_err(|e| LabError::Config(format!("invalid value: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(experiment: Experiment, path: &Path, extra: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = parse_key_values(&text)?;
        pairs.extend_from_slice(extra);
        Self::build(experiment, &pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.dim != 1 && self.dim != 2 {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0,1), got {}", self.s));
        }
        if !(self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        for t in [self.theta1, self.theta2] {
            if !(t > -1.0 && t < 1.0) {
                return bad(format!("theta1 and theta2 must lie in (-1,1), got {t}"));
            }
        }
        if let Some(ts) = self.theta_star {
            if ts > self.theta1.min(self.theta2) {
                return bad(format!("theta_star = {ts} exceeds min(theta1, theta2)"));
            }
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) || self.radii.iter().any(|&r| !(r > 0.0)) {
            return bad("radii must be positive and strictly increasing".into());
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            return bad("eps values must be positive".into());
        }
        if self.experiment == Experiment::Levelset && self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps sweep must be strictly decreasing".into());
        }
        if self.s_list.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return bad("s_list entries must lie in (0,1)".into());
        }
        if self.near_radius < 2 || !(self.quad_tol > 0.0) {
            return bad("near_radius must be >= 2 and quad_tol > 0".into());
        }
        self.exterior_data()?;
        self.double_well()?;
        Ok(())
    }

    /// `theta_star`, defaulting to `min(theta1, theta2)`.
    pub fn theta_star(&self) -> f64 {
        self.theta_star.unwrap_or(self.theta1.min(self.theta2))
    }

    pub fn exterior_data(&self) -> Result<ExteriorData> {
        parse_exterior(&self.exterior, self.dim)
    }

    pub fn double_well(&self) -> Result<DoubleWell> {
        parse_potential(&self.potential)
    }
}

fn guess_scalar(v: &str) -> Value {
    if let Ok(i) = v.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = v.parse::<f64>() {
        return Value::from(x);
    }
    match v {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "none" | "null" => Value::Null,
        _ => Value::String(v.to_string()),
    }
}

fn guess_value(v: &str) -> Value {
    if v.contains(',') {
        Value::Array(v.split(',').map(|p| guess_scalar(p.trim())).collect())
    } else {
        guess_scalar(v)
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("line {}: expected key = value, got '{line}'", no + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(LabError::Config(format!("line {}: empty key", no + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let pairs = parse_key_values(arg)?;
    match pairs.as_slice() {
        [one] => Ok(one.clone()),
        _ => Err(LabError::Config(format!("expected one key=value override, got '{arg}'"))),
    }
}

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| LabError::Config(format!("bad {what} '{s}'")))
}

pub fn parse_exterior(spec: &str, dim: usize) -> Result<ExteriorData> {
    let parts: Vec<&str> = spec.split(':').collect();
    let ext = match parts.as_slice() {
        ["halfspace"] => ExteriorData::HalfspaceSign { axis: 0, threshold: 0.0 },
        ["halfspace", axis, t] => {
            let axis = axis.trim().parse::<usize>().map_err(|_| LabError::Config(format!("bad axis '{axis}'")))?;
            ExteriorData::HalfspaceSign { axis, threshold: num(t, "threshold")? }
        }
        ["constant", v] => ExteriorData::Constant(num(v, "exterior value")?),
        _ => return Err(LabError::Config(format!("unknown exterior '{spec}'"))),
    };
    ext.validate(dim)?;
    Ok(ext)
}

pub fn parse_potential(spec: &str) -> Result<DoubleWell> {
    match spec.split_once(':') {
        None if spec == "quartic" => Ok(DoubleWell::default()),
        Some(("quartic", a)) => Ok(DoubleWell::quartic(num(a, "quartic coefficient")?)?),
        Some(("table", path)) => Ok(DoubleWell::from_csv(std::fs::File::open(path)?)?),
        _ => Err(LabError::Config(format!("unknown potential '{spec}'"))),
    }
}
