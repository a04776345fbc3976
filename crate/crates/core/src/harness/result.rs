use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::format_float;
use crate::error::{Error, Result};

/// One `(n, replicate)` outcome. Quantities an experiment does not measure
/// are `None` and written as empty CSV fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub k: usize,
    pub p0_hat: Option<f64>,
    pub p1_hat: Option<f64>,
    pub max_hat: Option<f64>,
    pub min_hat: Option<f64>,
    pub threshold: Option<f64>,
    /// `|f_hat(x) - f(x)|` at the fixed probe.
    pub err_fixed_probe: Option<f64>,
    /// `|f_hat(X_j) - f(X_j)|` at the data-point probe.
    pub err_data_probe: Option<f64>,
    /// Marginal measure of the ball reaching the k-th neighbour of the fixed
    /// probe, and of the data-point probe.
    pub ball_fixed: Option<f64>,
    pub ball_data: Option<f64>,
    pub excess_robust: Option<f64>,
    pub excess_standard: Option<f64>,
    pub excess_oracle: Option<f64>,
    /// Excess risks measured against the corrupted regression function.
    pub corrupted_excess_robust: Option<f64>,
    pub corrupted_excess_standard: Option<f64>,
    pub corrupted_excess_oracle: Option<f64>,
}

pub const RECORD_COLUMNS: [&str; 19] = [
    "n",
    "replicate",
    "seed",
    "k",
    "p0_hat",
    "p1_hat",
    "max_hat",
    "min_hat",
    "threshold",
    "err_fixed_probe",
    "err_data_probe",
    "ball_fixed",
    "ball_data",
    "excess_robust",
    "excess_standard",
    "excess_oracle",
    "corrupted_excess_robust",
    "corrupted_excess_standard",
    "corrupted_excess_oracle",
];

impl Record {
    fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        vec![
            self.n.to_string(),
            self.replicate.to_string(),
            self.seed.to_string(),
            self.k.to_string(),
            opt(self.p0_hat),
            opt(self.p1_hat),
            opt(self.max_hat),
            opt(self.min_hat),
            opt(self.threshold),
            opt(self.err_fixed_probe),
            opt(self.err_data_probe),
            opt(self.ball_fixed),
            opt(self.ball_data),
            opt(self.excess_robust),
            opt(self.excess_standard),
            opt(self.excess_oracle),
            opt(self.corrupted_excess_robust),
            opt(self.corrupted_excess_standard),
            opt(self.corrupted_excess_oracle),
        ]
    }
}

/// A named pass/fail comparison of a measured value against a limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: "<=".into(), passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: ">=".into(), passed: value >= limit }
    }

    /// A check on a condition with no natural scalar; `value` is 1 when it
    /// holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, limit: 1.0, relation: ">=".into(), passed: ok }
    }
}

/// Per-sample-size aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub per_n: Vec<GridSummary>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Records in `(n, replicate)` order plus the summary. Wall-clock time is
/// kept out of both so that reruns are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(RECORD_COLUMNS).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.records {
            w.write_record(r.csv_fields()).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.summary)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes the records to `csv_path` and the summary to
    /// [`summary_path`]`(csv_path)`; returns the summary path.
    pub fn save(&self, csv_path: &Path) -> Result<PathBuf> {
        let file = std::fs::File::create(csv_path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let summary = summary_path(csv_path);
        std::fs::write(&summary, self.summary_json()?)?;
        Ok(summary)
    }
}

/// `results.csv` -> `results.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}
