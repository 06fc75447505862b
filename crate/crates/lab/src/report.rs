//! Experiment reports: `report.json` (deterministic), `series.csv` and
//! `timing.json` (wall clock, kept apart so reports stay reproducible).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::fit::LineFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "series row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.columns)?;
        for r in &self.rows {
            wtr.write_record(r.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub name: String,
    pub expected: f64,
    pub tolerance: f64,
    pub radii: Vec<f64>,
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub dim: usize,
    pub h: f64,
    pub cells: usize,
    pub near_radius: usize,
    pub quad_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub status: Status,
    pub config: ExperimentConfig,
    pub resolution: Vec<Resolution>,
    pub series: Series,
    pub fits: Vec<Fit>,
    pub constants: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub details: BTreeMap<String, Value>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig, series: Series) -> Self {
        Self {
            experiment: cfg.experiment,
            status: Status::Completed,
            config: cfg.clone(),
            resolution: Vec::new(),
            series,
            fits: Vec::new(),
            constants: BTreeMap::new(),
            criteria: Vec::new(),
            details: BTreeMap::new(),
            passed: false,
        }
    }

    pub fn criterion(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.criteria.push(Criterion { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn detail<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.details.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    /// Sets `passed`: completed and every criterion passed.
    pub fn finish(mut self) -> Self {
        self.passed = self.status == Status::Completed && self.criteria.iter().all(|c| c.passed);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, dir: &Path, timing: &Timing) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.series.write_csv(std::fs::File::create(dir.join("series.csv"))?)?;
        std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(timing)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}
