//! Closed-form finite-sample bounds for kNN regression, extrema estimation
//! and the robust classifier's excess risk.
//!
//! Logarithms are natural. Bounds larger than one are returned unchanged.
//! Parameters outside a bound's validity window (the range of `k`, the
//! minimum sample size for the optimal `k`) only produce a `log` warning, once per call site.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::knn::NoiseRates;

/// Everything the bound formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    /// Smoothness exponent.
    pub lambda: f64,
    /// Smoothness constant.
    pub omega: f64,
    /// Margin exponent.
    #[serde(default)]
    pub alpha: f64,
    /// Margin constant.
    #[serde(default = "one")]
    pub c_alpha: f64,
    #[serde(default)]
    pub p0: f64,
    #[serde(default)]
    pub p1: f64,
}

fn one() -> f64 {
    1.0
}

impl BoundParams {
    /// Margin `(alpha, c_alpha) = (0, 1)` and zero noise.
    pub fn new(n: usize, k: usize, delta: f64, lambda: f64, omega: f64) -> Self {
        BoundParams { n, k, delta, lambda, omega, alpha: 0.0, c_alpha: 1.0, p0: 0.0, p1: 0.0 }
    }

    pub fn with_margin(mut self, alpha: f64, c_alpha: f64) -> Self {
        self.alpha = alpha;
        self.c_alpha = c_alpha;
        self
    }

    pub fn with_rates(mut self, rates: NoiseRates) -> Self {
        self.p0 = rates.p0;
        self.p1 = rates.p1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_common(self.n, self.delta, self.lambda, self.omega)?;
        if self.k == 0 || self.k > self.n {
            return Err(invalid("k", format!("{} is outside [1, {}]", self.k, self.n)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must be finite and non-negative"));
        }
        if !(self.c_alpha >= 1.0 && self.c_alpha.is_finite()) {
            return Err(invalid("c_alpha", "must be finite and at least 1"));
        }
        Ok(())
    }

    fn rates(&self) -> NoiseRates {
        NoiseRates { p0: self.p0, p1: self.p1 }
    }
}

fn check_common(n: usize, delta: f64, lambda: f64, omega: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is outside (0, 1)")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be finite and positive"));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(invalid("omega", "must be finite and non-negative"));
    }
    Ok(())
}

/// `omega * (2k/n)^lambda`.
fn bias_term(n: usize, k: usize, lambda: f64, omega: f64) -> f64 {
    omega * (2.0 * k as f64 / n as f64).powf(lambda)
}

static POINTWISE_WARNED: AtomicBool = AtomicBool::new(false);
static MAX_WARNED: AtomicBool = AtomicBool::new(false);
static RISK_WARNED: AtomicBool = AtomicBool::new(false);
static SAMPLE_SIZE_WARNED: AtomicBool = AtomicBool::new(false);

/// Logs a warning the first time a given call site fires.
fn warn_once(flag: &AtomicBool, message: impl FnOnce() -> String) {
    if !flag.swap(true, Ordering::Relaxed) {
        log::warn!("{}", message());
    }
}

fn warn_k_window(flag: &AtomicBool, what: &str, k: usize, n: usize, log_arg: f64) {
    let lo = 4.0 * log_arg.ln() + 1.0;
    let hi = n as f64 / 2.0;
    if (k as f64) < lo || (k as f64) > hi {
        warn_once(flag, || format!("{what}: k = {k} is outside the validity window [{lo:.2}, {hi:.1}]"));
    }
}

/// `exp(-k (zeta - ln(1 + zeta)))`: tail of the marginal measure of the
/// ball reaching a fixed centre's k-th neighbour.
pub fn ball_measure_tail(k: usize, zeta: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    tail_with_exponent(k as f64, zeta)
}

/// Same tail when the centre is itself a data point: exponent uses `k - 1`.
pub fn ball_measure_tail_data_centre(k: usize, zeta: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    tail_with_exponent((k - 1) as f64, zeta)
}

fn tail_with_exponent(m: f64, zeta: f64) -> Result<f64> {
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(invalid("zeta", "must be finite and non-negative"));
    }
    Ok((-m * (zeta - zeta.ln_1p())).exp())
}

/// Pointwise kNN regression bound:
/// `sqrt(ln(3/delta) / (2k)) + omega (2k/n)^lambda`.
pub fn pointwise_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    warn_k_window(&POINTWISE_WARNED, "pointwise bound", p.k, p.n, 3.0 / p.delta);
    Ok(((3.0 / p.delta).ln() / (2.0 * p.k as f64)).sqrt() + bias_term(p.n, p.k, p.lambda, p.omega))
}

/// Bound on the error of the empirical maximum of the kNN estimate:
/// `sqrt(ln(6n/delta) / (2k)) + 2 omega (2k/n)^lambda`.
pub fn max_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    warn_k_window(&MAX_WARNED, "max bound", p.k, p.n, 2.0 / p.delta);
    let variance = ((6.0 * p.n as f64 / p.delta).ln() / (2.0 * p.k as f64)).sqrt();
    Ok(variance + 2.0 * bias_term(p.n, p.k, p.lambda, p.omega))
}

/// `sqrt(ln(18n/delta) / k) + 2 omega (2k/n)^lambda`, the common upper bound
/// on the pointwise and rate-estimation errors used by the risk bound.
pub fn xi_error_term(n: usize, k: usize, delta: f64, lambda: f64, omega: f64) -> Result<f64> {
    BoundParams::new(n, k, delta, lambda, omega).validate()?;
    let variance = ((18.0 * n as f64 / delta).ln() / k as f64).sqrt();
    Ok(variance + 2.0 * bias_term(n, k, lambda, omega))
}

/// `4^(lambda+1) omega^(1/(2 lambda+1)) (ln(18n/delta)/n)^(lambda/(2 lambda+1))`,
/// an upper bound on [`xi_error_term`] at `k = optimal_k`.
pub fn xi_closed_form(n: usize, delta: f64, lambda: f64, omega: f64) -> Result<f64> {
    check_common(n, delta, lambda, omega)?;
    let e = 2.0 * lambda + 1.0;
    let l = (18.0 * n as f64 / delta).ln();
    Ok(4f64.powf(lambda + 1.0) * omega.powf(1.0 / e) * (l / n as f64).powf(lambda / e))
}

/// Excess-risk bound of the robust classifier (the `+ delta` included):
/// `C (8/(1-p0-p1))^(alpha+1) [xi]^(alpha+1) + delta`.
pub fn risk_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    p.rates().validate_channel()?;
    warn_k_window(&RISK_WARNED, "risk bound", p.k, p.n, 3.0 / p.delta);
    let xi = xi_error_term(p.n, p.k, p.delta, p.lambda, p.omega)?;
    let a1 = p.alpha + 1.0;
    Ok(p.c_alpha * (8.0 / p.rates().denominator()).powf(a1) * xi.powf(a1) + p.delta)
}

/// The rate `(ln(18n/delta)/n)^(lambda (alpha+1) / (2 lambda + 1))`.
pub fn risk_rate(n: usize, delta: f64, lambda: f64, alpha: f64) -> Result<f64> {
    check_common(n, delta, lambda, 0.0)?;
    let l = (18.0 * n as f64 / delta).ln();
    Ok((l / n as f64).powf(lambda * (alpha + 1.0) / (2.0 * lambda + 1.0)))
}

/// Smallest `n` side of the optimal-k guarantee:
/// `n >= 5 (10 omega^2)^(1/(2 lambda)) ln(18n/delta)`.
pub fn optimal_k_sample_size_ok(n: usize, delta: f64, lambda: f64, omega: f64) -> bool {
    let rhs = 5.0 * (10.0 * omega * omega).powf(1.0 / (2.0 * lambda)) * (18.0 * n as f64 / delta).ln();
    n as f64 >= rhs
}

/// `ceil((ln(18n/delta) / (2 omega^2))^(1/(2 lambda+1)) n^(2 lambda/(2 lambda+1)))`,
/// clipped to `[1, n]`.
pub fn optimal_k(n: usize, delta: f64, lambda: f64, omega: f64) -> Result<usize> {
    check_common(n, delta, lambda, omega)?;
    if omega <= 0.0 {
        return Err(invalid("omega", "must be positive for the optimal k"));
    }
    if !optimal_k_sample_size_ok(n, delta, lambda, omega) {
        warn_once(&SAMPLE_SIZE_WARNED, || format!("optimal k: n = {n} is below the sample size the guarantee needs"));
    }
    let e = 2.0 * lambda + 1.0;
    let l = (18.0 * n as f64 / delta).ln();
    let k = ((l / (2.0 * omega * omega)).powf(1.0 / e) * (n as f64).powf(2.0 * lambda / e)).ceil();
    Ok((k as usize).clamp(1, n))
}

/// `8 max(eta_err, p0_err, p1_err) / (1 - p0 - p1)`, valid when both rate
/// errors are at most `(1 - p0 - p1) / 4`.
pub fn plugin_error_bound(eta_err: f64, p0_err: f64, p1_err: f64, p0: f64, p1: f64) -> Result<f64> {
    let rates = NoiseRates::channel(p0, p1)?;
    let b = rates.denominator();
    for (name, e) in [("eta_err", eta_err), ("p0_err", p0_err), ("p1_err", p1_err)] {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(invalid(name, "must be finite and non-negative"));
        }
    }
    if p0_err.max(p1_err) > b / 4.0 {
        return Err(invalid("rate error", format!("exceeds (1 - p0 - p1)/4 = {}", b / 4.0)));
    }
    Ok(8.0 * eta_err.max(p0_err).max(p1_err) / b)
}
