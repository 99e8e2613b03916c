use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::StudyConfig;
use crate::error::Result;

/// What kind of number a quantity is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Closed form or exact computation.
    Exact,
    /// A valid upper bound on the named distance (up to MC error where a
    /// standard error is attached).
    UpperBound,
    /// Monte Carlo estimate.
    McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The bound does not exist for this configuration (e.g. an unbounded
    /// support set); not counted as a failure.
    NotBoundable,
}

/// `lhs <= rhs + slack`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `lhs / rhs`, when `rhs > 0`.
    pub ratio: Option<f64>,
    pub status: CheckStatus,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ok = lhs <= rhs + slack;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    /// `|lhs - rhs| <= slack`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let mut c = Self::new(name, lhs, rhs, slack);
        c.status = if (lhs - rhs).abs() <= slack { CheckStatus::Pass } else { CheckStatus::Fail };
        c
    }

    pub fn not_boundable(name: impl Into<String>, lhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs: f64::INFINITY, slack: 0.0, ratio: None, status: CheckStatus::NotBoundable }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// One coupled sample of a perturbation or truncation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRow {
    pub sample: u64,
    pub qoi_p: f64,
    pub qoi_q: f64,
    pub input_distance: f64,
    pub output_distance: f64,
    /// Truncation level; empty outside truncation studies.
    pub level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub version: String,
    pub config: StudyConfig,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
    /// Fraction of coupled draws rejected by the bounded-support filter.
    pub rejection_rate: Option<f64>,
    pub pass: bool,
    #[serde(skip)]
    pub samples: Vec<SampleRow>,
}

impl StudyReport {
    pub fn new(config: StudyConfig) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            config,
            quantities: Vec::new(),
            checks: Vec::new(),
            rejection_rate: None,
            pass: true,
            samples: Vec::new(),
        }
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: f64, std_error: Option<f64>, label: Label) {
        self.quantities.push(Quantity { name: name.into(), value, std_error, label });
    }

    pub fn check(&mut self, check: Check) {
        if !check.passed() {
            log::warn!("check {} failed: {} > {} + {}", check.name, check.lhs, check.rhs, check.slack);
        }
        self.pass &= check.passed();
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Columns `sample,qoi_p,qoi_q,input_distance,output_distance,level`.
    pub fn write_samples_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        if self.samples.is_empty() {
            out.write_record(["sample", "qoi_p", "qoi_q", "input_distance", "output_distance", "level"])?;
        }
        for row in &self.samples {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `report.json` and `samples.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_samples_csv(std::fs::File::create(dir.join("samples.csv"))?)?;
        Ok(())
    }
}
