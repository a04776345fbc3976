use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{invalid, Result};
use crate::knn::NoiseRates;
use crate::synthetic::{Distribution, DistributionSpec, Margin, Smoothness};

/// How `k` is chosen at each sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum KPolicy {
    Fixed { k: usize },
    /// `optimal_k(n, delta, lambda, omega)` with the distribution's
    /// smoothness constants.
    Optimal,
    /// Grid cross-validation on each replicate's corrupted sample.
    CrossValidated { grid: Vec<usize>, folds: usize },
}

/// One Monte Carlo experiment, as read from JSON. Missing fields take the
/// defaults of [`ExperimentConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    /// True flip rates of the label channel.
    pub rates: NoiseRates,
    pub n_grid: Vec<usize>,
    pub k_policy: KPolicy,
    pub replicates: usize,
    pub delta: f64,
    pub seed: u64,
    /// Overrides the distribution's declared smoothness (required for
    /// sampling-only distributions under the `optimal` policy).
    pub smoothness: Option<Smoothness>,
    /// Overrides the distribution's declared margin constants.
    pub margin: Option<Margin>,
    /// Ball-measure slack `zeta`.
    pub zeta: f64,
    /// Fixed probe point for the pointwise and ball experiments.
    pub probe: f64,
    /// Index `j` of the training point used as the data-dependent probe.
    pub probe_index: usize,
    /// Level `theta` of the disagreement set in the inconsistency demo.
    pub theta: f64,
    pub quad_tol: f64,
    /// Accepted range of the fitted log-log slope in the rate experiment.
    pub slope_window: [f64; 2],
    /// Held-out points for distributions without exact risk.
    pub test_points: usize,
    /// Worker threads; never affects results.
    pub workers: Option<usize>,
    /// Path of the CSV record file; the summary goes next to it.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            distribution: DistributionSpec::ThreePieceExample { p0: 0.1, p1: 0.3 },
            rates: NoiseRates { p0: 0.1, p1: 0.3 },
            n_grid: vec![2_000, 5_000, 10_000, 20_000, 50_000],
            k_policy: KPolicy::Optimal,
            replicates: 20,
            delta: 0.1,
            seed: 0,
            smoothness: None,
            margin: None,
            zeta: 0.2,
            probe: 0.5,
            probe_index: 0,
            theta: 0.04,
            quad_tol: 1e-6,
            slope_window: [-0.60, -0.15],
            test_points: 100_000,
            workers: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(invalid("n_grid", "must be non-empty with positive sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid", "must be strictly increasing"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        self.rates.validate_channel()?;
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(invalid("zeta", "must be finite and non-negative"));
        }
        if !(self.theta >= 0.0 && self.theta < 0.5) {
            return Err(invalid("theta", "must lie in [0, 1/2)"));
        }
        if !(self.quad_tol > 0.0) {
            return Err(invalid("quad_tol", "must be positive"));
        }
        if !(self.slope_window[0] <= self.slope_window[1]) {
            return Err(invalid("slope_window", "lower end above upper end"));
        }
        if self.test_points == 0 {
            return Err(invalid("test_points", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let n_min = self.n_grid[0];
        if self.probe_index >= n_min {
            return Err(invalid("probe_index", format!("must be below the smallest n = {n_min}")));
        }
        match &self.k_policy {
            KPolicy::Fixed { k } => {
                if *k == 0 || *k > n_min {
                    return Err(invalid("k_policy", format!("fixed k = {k} is outside [1, {n_min}]")));
                }
            }
            KPolicy::Optimal => {
                self.smoothness()?;
            }
            KPolicy::CrossValidated { grid, folds } => {
                if grid.is_empty() || grid.contains(&0) {
                    return Err(invalid("k_policy", "cross-validation grid must hold positive values"));
                }
                if *folds < 2 {
                    return Err(invalid("k_policy", "need at least two folds"));
                }
            }
        }
        self.distribution.build()?;
        Ok(())
    }

    pub fn build_distribution(&self) -> Result<Distribution> {
        self.distribution.build()
    }

    /// The override if present, otherwise the distribution's declared
    /// constants.
    pub fn smoothness(&self) -> Result<Smoothness> {
        if let Some(s) = self.smoothness {
            return Ok(s);
        }
        match self.distribution.build()? {
            Distribution::Exact(d) => Ok(d.smoothness),
            Distribution::SamplingOnly(_) => {
                Err(invalid("smoothness", "sampling-only distributions need explicit smoothness constants"))
            }
        }
    }

    pub fn margin(&self) -> Result<Margin> {
        if let Some(m) = self.margin {
            return Ok(m);
        }
        match self.distribution.build()? {
            Distribution::Exact(d) => Ok(d.margin),
            Distribution::SamplingOnly(_) => Ok(Margin { alpha: 0.0, c_alpha: 1.0 }),
        }
    }

    /// `k` for sample size `n` under the fixed or optimal policy; `None`
    /// under cross-validation, where it depends on the sample.
    pub fn static_k(&self, n: usize) -> Result<Option<usize>> {
        match &self.k_policy {
            KPolicy::Fixed { k } => Ok(Some(*k)),
            KPolicy::Optimal => {
                let s = self.smoothness()?;
                Ok(Some(bounds::optimal_k(n, self.delta, s.lambda, s.omega)?))
            }
            KPolicy::CrossValidated { .. } => Ok(None),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}
