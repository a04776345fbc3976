//! kNN regression, extrema and noise-rate estimation, and the standard and
//! label-noise-robust kNN classifiers.
//!
//! Training points are their own first neighbour when the regressor is
//! evaluated at them (distance zero, and no leave-one-out).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::nn_index::{cmp_candidate, euclidean, Index, Metric, PointSet};

/// Guard on `1 - p0 - p1` below which the ratio correction is refused.
pub const DENOMINATOR_GUARD: f64 = 1e-9;

/// A pair of class-conditional flip probabilities: `p0` for true class 0,
/// `p1` for true class 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRates {
    pub p0: f64,
    pub p1: f64,
}

impl NoiseRates {
    /// Rates in `[0, 1]`. Estimates may sum to one or more; see
    /// [`NoiseRates::is_degenerate`].
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        for p in [p0, p1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidRates { p0, p1, reason: "each rate must lie in [0, 1]" });
            }
        }
        Ok(NoiseRates { p0, p1 })
    }

    /// Rates of a real noise channel: each in `[0, 1)` and `p0 + p1 < 1`.
    pub fn channel(p0: f64, p1: f64) -> Result<Self> {
        let rates = NoiseRates::new(p0, p1)?;
        rates.validate_channel()?;
        Ok(rates)
    }

    pub fn noiseless() -> Self {
        NoiseRates { p0: 0.0, p1: 0.0 }
    }

    pub fn validate_channel(&self) -> Result<()> {
        let (p0, p1) = (self.p0, self.p1);
        if !(0.0..1.0).contains(&p0) || !(0.0..1.0).contains(&p1) {
            return Err(Error::InvalidRates { p0, p1, reason: "each rate must lie in [0, 1)" });
        }
        if p0 + p1 >= 1.0 {
            return Err(Error::InvalidRates { p0, p1, reason: "p0 + p1 must be below 1" });
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.p0 + self.p1 >= 1.0
    }

    /// `1 - p0 - p1`.
    pub fn denominator(&self) -> f64 {
        1.0 - self.p0 - self.p1
    }

    /// `(1 + p0 - p1) / 2`, written so that equal rates give exactly 1/2.
    pub fn threshold(&self) -> f64 {
        0.5 + (self.p0 - self.p1) / 2.0
    }

    pub fn max_abs_diff(&self, other: &NoiseRates) -> f64 {
        (self.p0 - other.p0).abs().max((self.p1 - other.p1).abs())
    }
}

/// Points paired with responses in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub points: PointSet,
    pub responses: Vec<f64>,
}

impl RegressionSample {
    pub fn new(points: PointSet, responses: Vec<f64>) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                responses: responses.len(),
            });
        }
        if let Some((index, &value)) = responses
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::InvalidResponse { index, value });
        }
        Ok(RegressionSample { points, responses })
    }

    /// Binary labels as responses.
    pub fn from_labels(points: PointSet, labels: &[u8]) -> Result<Self> {
        if let Some((index, &l)) = labels.iter().enumerate().find(|(_, l)| **l > 1) {
            return Err(Error::NonBinaryLabel { index, value: l as f64 });
        }
        RegressionSample::new(points, labels.iter().map(|&l| l as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn check_binary(&self) -> Result<()> {
        match self.responses.iter().position(|&r| r != 0.0 && r != 1.0) {
            Some(index) => Err(Error::NonBinaryLabel { index, value: self.responses[index] }),
            None => Ok(()),
        }
    }

    /// The sample with every response `z` replaced by `1 - z`.
    pub fn complemented(&self) -> Self {
        RegressionSample {
            points: self.points.clone(),
            responses: self.responses.iter().map(|z| 1.0 - z).collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(RegressionSample {
            points: self.points.subset(indices)?,
            responses: indices.iter().map(|&i| self.responses[i]).collect(),
        })
    }
}

/// Average of the responses of the `k` nearest training points.
#[derive(Debug, Clone)]
pub struct KnnRegressor {
    index: Index,
    responses: Vec<f64>,
    k: usize,
}

impl KnnRegressor {
    pub fn fit(sample: RegressionSample, k: usize, metric: Metric) -> Result<Self> {
        let n = sample.len();
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let index = Index::build(sample.points, metric);
        Ok(KnnRegressor { index, responses: sample.responses, k })
    }

    /// Same as [`KnnRegressor::fit`] on top of a prebuilt index.
    pub fn from_index(index: Index, responses: Vec<f64>, k: usize) -> Result<Self> {
        if index.len() != responses.len() {
            return Err(Error::LengthMismatch { points: index.len(), responses: responses.len() });
        }
        if k == 0 || k > index.len() {
            return Err(Error::KOutOfRange { k, n: index.len() });
        }
        Ok(KnnRegressor { index, responses, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let nl = self.index.knn_query(x, self.k)?;
        let sum: f64 = nl.indices.iter().map(|&i| self.responses[i]).sum();
        Ok(sum / self.k as f64)
    }

    pub fn classify_standard(&self, x: &[f64]) -> Result<u8> {
        Ok((self.predict(x)? >= 0.5) as u8)
    }

    /// Predictions at every training point, in dataset order.
    pub fn fitted_values(&self) -> Vec<f64> {
        if let Some(values) = self.line_fitted_values() {
            return values;
        }
        self.index
            .points()
            .iter()
            .map(|p| self.predict(p).expect("training points match the index"))
            .collect()
    }

    /// Sorted order of one-dimensional Euclidean training points, or `None`.
    fn line_order(&self) -> Option<Vec<usize>> {
        if self.index.dim() != 1 || !self.index.metric().is_euclidean() {
            return None;
        }
        let xs = self.index.points().coords();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_unstable_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        Some(order)
    }

    fn has_integral_responses(&self) -> bool {
        self.responses.iter().all(|r| r.fract() == 0.0)
    }

    /// Sliding-window fitted values for distinct 1-D points with 0/1
    /// responses. Neighbour sets are then contiguous runs of the sorted
    /// points and window sums are exact integers, so the result equals the
    /// query-by-query path bit for bit.
    fn line_fitted_values(&self) -> Option<Vec<f64>> {
        if !self.has_integral_responses() {
            return None;
        }
        let order = self.line_order()?;
        let xs = self.index.points().coords();
        if order.windows(2).any(|w| xs[w[0]] == xs[w[1]]) {
            return None;
        }
        let (n, k) = (order.len(), self.k);
        let mut prefix = vec![0.0; n + 1];
        for (j, &i) in order.iter().enumerate() {
            prefix[j + 1] = prefix[j] + self.responses[i];
        }
        let mut out = vec![0.0; n];
        let mut l = 0;
        for (j, &i) in order.iter().enumerate() {
            let q = [xs[i]];
            while l + k < n && l < j {
                let (a, b) = (order[l], order[l + k]);
                let left = (euclidean(&q, &[xs[a]]), a);
                let right = (euclidean(&q, &[xs[b]]), b);
                if cmp_candidate(right, left).is_lt() {
                    l += 1;
                } else {
                    break;
                }
            }
            out[i] = (prefix[l + k] - prefix[l]) / k as f64;
        }
        Some(out)
    }

    pub fn max_fitted(&self) -> f64 {
        self.fitted_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_fitted(&self) -> f64 {
        self.fitted_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `(p0_hat, p1_hat) = (min_i f(X_i), 1 - max_i f(X_i))` from one pass
    /// over the training points.
    pub fn noise_rate_estimates(&self) -> NoiseRates {
        let (lo, hi) = self
            .fitted_values()
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        NoiseRates { p0: lo, p1: 1.0 - hi }
    }

    /// For one-dimensional Euclidean data, the regression estimate as a
    /// step function of the query. `None` for other inputs.
    pub fn line_partition(&self) -> Option<LinePartition> {
        if self.index.dim() != 1 || !self.index.metric().is_euclidean() {
            return None;
        }
        let order = self.line_order()?;
        let xs = self.index.points().coords();
        let (n, k) = (xs.len(), self.k);
        let sorted: Vec<f64> = order.iter().map(|&i| self.responses[i]).collect();
        let exact = self.has_integral_responses();
        let window = |start: usize| sorted[start..start + k].iter().sum::<f64>();
        let mut sum = window(0);
        let mut breaks = Vec::with_capacity(n - k);
        let mut values = Vec::with_capacity(n - k + 1);
        values.push(sum / k as f64);
        for start in 0..n - k {
            // the window slides right once the query is nearer the point
            // entering on the right than the one leaving on the left
            breaks.push(0.5 * (xs[order[start]] + xs[order[start + k]]));
            sum = if exact { sum - sorted[start] + sorted[start + k] } else { window(start + 1) };
            values.push(sum / k as f64);
        }
        Some(LinePartition { breaks, values })
    }
}

/// A step function on the real line: `values[0]` left of `breaks[0]`,
/// `values[i]` on `(breaks[i-1], breaks[i])`, and `values[len]` after the
/// last break. Breaks are non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePartition {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl LinePartition {
    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b < x)]
    }
}

pub fn fit_regressor(sample: RegressionSample, k: usize, metric: Metric) -> Result<KnnRegressor> {
    KnnRegressor::fit(sample, k, metric)
}

/// `max_i f_hat(X_i)`.
pub fn estimate_max(sample: RegressionSample, k: usize, metric: Metric) -> Result<f64> {
    Ok(KnnRegressor::fit(sample, k, metric)?.max_fitted())
}

/// `min_i f_hat(X_i)`.
pub fn estimate_min(sample: RegressionSample, k: usize, metric: Metric) -> Result<f64> {
    Ok(KnnRegressor::fit(sample, k, metric)?.min_fitted())
}

pub fn estimate_noise_rates(sample: RegressionSample, k: usize, metric: Metric) -> Result<NoiseRates> {
    sample.check_binary()?;
    Ok(KnnRegressor::fit(sample, k, metric)?.noise_rate_estimates())
}

/// A kNN regressor on corrupted labels with a shifted decision threshold.
#[derive(Debug, Clone)]
pub struct RobustKnnModel {
    regressor: KnnRegressor,
    rates: NoiseRates,
    threshold: f64,
}

/// Serializable view of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub k: usize,
    pub n: usize,
    pub p0_hat: f64,
    pub p1_hat: f64,
    pub threshold: f64,
    pub degenerate: bool,
}

impl RobustKnnModel {
    /// Estimates the flip rates from the extrema of the fitted values and
    /// sets the threshold from them.
    pub fn fit(sample: RegressionSample, k: usize, metric: Metric) -> Result<Self> {
        sample.check_binary()?;
        let regressor = KnnRegressor::fit(sample, k, metric)?;
        let rates = regressor.noise_rate_estimates();
        if rates.is_degenerate() {
            log::warn!(
                "degenerate noise-rate estimates p0_hat={} p1_hat={}; classification still uses the threshold",
                rates.p0,
                rates.p1
            );
        }
        Ok(RobustKnnModel::with_rates(regressor, rates))
    }

    /// Uses the given rates instead of estimating them.
    pub fn with_rates(regressor: KnnRegressor, rates: NoiseRates) -> Self {
        RobustKnnModel { threshold: rates.threshold(), regressor, rates }
    }

    /// Plain kNN: threshold 1/2.
    pub fn standard(regressor: KnnRegressor) -> Self {
        RobustKnnModel::with_rates(regressor, NoiseRates::noiseless())
    }

    pub fn regressor(&self) -> &KnnRegressor {
        &self.regressor
    }

    pub fn rates(&self) -> NoiseRates {
        self.rates
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.regressor.predict(x)
    }

    /// 1 iff the corrupted-regression estimate reaches the threshold.
    pub fn classify(&self, x: &[f64]) -> Result<u8> {
        Ok((self.regressor.predict(x)? >= self.threshold) as u8)
    }

    /// `(f_hat(x) - p0_hat) / (1 - p0_hat - p1_hat)`, unclamped.
    pub fn raw_corrected_regression(&self, x: &[f64]) -> Result<f64> {
        let denominator = self.rates.denominator();
        if denominator <= DENOMINATOR_GUARD {
            return Err(Error::DegenerateRates { denominator });
        }
        Ok((self.regressor.predict(x)? - self.rates.p0) / denominator)
    }

    /// The corrected estimate of the clean regression function, clamped to
    /// `[0, 1]`.
    pub fn corrected_regression(&self, x: &[f64]) -> Result<f64> {
        Ok(self.raw_corrected_regression(x)?.clamp(0.0, 1.0))
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            k: self.regressor.k(),
            n: self.regressor.len(),
            p0_hat: self.rates.p0,
            p1_hat: self.rates.p1,
            threshold: self.threshold,
            degenerate: self.rates.is_degenerate(),
        }
    }
}

pub fn fit_robust_classifier(sample: RegressionSample, k: usize, metric: Metric) -> Result<RobustKnnModel> {
    RobustKnnModel::fit(sample, k, metric)
}

/// Checks a candidate `k` against a sample size.
pub fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(invalid("k", format!("{k} is outside [1, {n}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_sample(xs: &[f64], zs: &[f64]) -> RegressionSample {
        RegressionSample::new(PointSet::from_line(xs).unwrap(), zs.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        let pts = PointSet::from_line(&[0.0, 1.0]).unwrap();
        assert_eq!(
            RegressionSample::new(pts.clone(), vec![0.0]),
            Err(Error::LengthMismatch { points: 2, responses: 1 })
        );
        assert_eq!(
            RegressionSample::new(pts.clone(), vec![0.0, 1.5]),
            Err(Error::InvalidResponse { index: 1, value: 1.5 })
        );
        assert!(RegressionSample::from_labels(pts, &[0, 2]).is_err());
    }

    #[test]
    fn constant_responses_predict_the_constant() {
        let s = line_sample(&[0.1, 0.4, 0.9, 0.3], &[1.0; 4]);
        let r = KnnRegressor::fit(s, 2, Metric::Euclidean).unwrap();
        for x in [-3.0, 0.2, 0.5, 7.0] {
            assert_eq!(r.predict(&[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn k_equal_n_is_the_global_mean() {
        let s = line_sample(&[0.0, 0.2, 0.7, 1.0], &[0.0, 1.0, 1.0, 0.5]);
        let r = KnnRegressor::fit(s.clone(), 4, Metric::Euclidean).unwrap();
        for x in [-1.0, 0.5, 2.0] {
            assert_eq!(r.predict(&[x]).unwrap(), 0.625);
        }
        assert_eq!(estimate_max(s.clone(), 4, Metric::Euclidean).unwrap(), 0.625);
        assert_eq!(estimate_min(s, 4, Metric::Euclidean).unwrap(), 0.625);
    }

    #[test]
    fn hand_checked_predictions() {
        let s = line_sample(&[0.0, 0.5, 1.0], &[0.0, 1.0, 1.0]);
        let r2 = KnnRegressor::fit(s.clone(), 2, Metric::Euclidean).unwrap();
        assert_eq!(r2.predict(&[0.45]).unwrap(), 0.5);
        let r1 = KnnRegressor::fit(s, 1, Metric::Euclidean).unwrap();
        assert_eq!(r1.predict(&[0.45]).unwrap(), 1.0);
        assert_eq!(r1.predict(&[0.0]).unwrap(), 0.0);
        assert_eq!(r1.predict(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn fit_rejects_bad_k() {
        let s = line_sample(&[0.0, 0.5], &[0.0, 1.0]);
        assert_eq!(KnnRegressor::fit(s.clone(), 0, Metric::Euclidean).unwrap_err(), Error::KOutOfRange { k: 0, n: 2 });
        assert_eq!(KnnRegressor::fit(s, 3, Metric::Euclidean).unwrap_err(), Error::KOutOfRange { k: 3, n: 2 });
    }

    #[test]
    fn extrema_of_constant_and_binary_responses() {
        let s = line_sample(&[0.0, 0.3, 0.6], &[0.25; 3]);
        assert_eq!(estimate_max(s.clone(), 2, Metric::Euclidean).unwrap(), 0.25);
        assert_eq!(estimate_min(s, 2, Metric::Euclidean).unwrap(), 0.25);
        let s = line_sample(&[0.0, 0.3, 0.6], &[1.0, 0.0, 1.0]);
        assert_eq!(estimate_min(s, 1, Metric::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn clean_separable_data_gives_zero_rates() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let zs: Vec<f64> = xs.iter().map(|&x| if x < 0.5 { 0.0 } else { 1.0 }).collect();
        let rates = estimate_noise_rates(line_sample(&xs, &zs), 3, Metric::Euclidean).unwrap();
        assert_eq!(rates, NoiseRates { p0: 0.0, p1: 0.0 });
    }

    #[test]
    fn all_ones_with_k_equal_n_is_degenerate() {
        let s = line_sample(&[0.0, 0.1, 0.2], &[1.0; 3]);
        let rates = estimate_noise_rates(s.clone(), 3, Metric::Euclidean).unwrap();
        assert_eq!(rates, NoiseRates { p0: 1.0, p1: 0.0 });
        assert!(rates.is_degenerate());
        let model = RobustKnnModel::fit(s, 3, Metric::Euclidean).unwrap();
        assert_eq!(model.threshold(), 1.0);
        assert_eq!(model.classify(&[0.05]).unwrap(), 1);
        assert!(matches!(model.corrected_regression(&[0.05]), Err(Error::DegenerateRates { .. })));
        assert!(model.summary().degenerate);
    }

    #[test]
    fn noise_rates_reject_non_binary_labels() {
        let s = line_sample(&[0.0, 0.1], &[0.5, 1.0]);
        assert!(matches!(
            estimate_noise_rates(s, 1, Metric::Euclidean),
            Err(Error::NonBinaryLabel { index: 0, .. })
        ));
    }

    #[test]
    fn thresholds_from_rates() {
        for p in [0.0, 0.1, 0.37, 0.49] {
            assert_eq!(NoiseRates { p0: p, p1: p }.threshold(), 0.5);
        }
        let t = NoiseRates { p0: 0.1, p1: 0.3 }.threshold();
        assert!((t - 0.4).abs() < 1e-15);
    }

    fn model_with(rates: NoiseRates) -> RobustKnnModel {
        // responses chosen so that predict at x=0 with k=20 is 0.45
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let zs: Vec<f64> = (0..20).map(|i| if i < 9 { 1.0 } else { 0.0 }).collect();
        let r = KnnRegressor::fit(line_sample(&xs, &zs), 20, Metric::Euclidean).unwrap();
        RobustKnnModel::with_rates(r, rates)
    }

    #[test]
    fn classification_boundaries() {
        let robust = model_with(NoiseRates { p0: 0.1, p1: 0.3 });
        assert_eq!(robust.predict(&[0.0]).unwrap(), 0.45);
        assert_eq!(robust.classify(&[0.0]).unwrap(), 1);
        let standard = model_with(NoiseRates::noiseless());
        assert_eq!(standard.classify(&[0.0]).unwrap(), 0);
        assert_eq!(standard.regressor().classify_standard(&[0.0]).unwrap(), 0);
        // threshold reached exactly
        let exact = model_with(NoiseRates { p0: 0.0, p1: 0.1 });
        assert_eq!(exact.threshold(), 0.45);
        assert_eq!(exact.classify(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn standard_rule_is_inclusive_at_one_half() {
        let s = line_sample(&[0.0, 1.0], &[0.0, 1.0]);
        let r = KnnRegressor::fit(s, 2, Metric::Euclidean).unwrap();
        assert_eq!(r.predict(&[0.3]).unwrap(), 0.5);
        assert_eq!(r.classify_standard(&[0.3]).unwrap(), 1);
    }

    #[test]
    fn corrected_regression_arithmetic() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let zs: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 0.0 }).collect();
        let r = KnnRegressor::fit(line_sample(&xs, &zs), 10, Metric::Euclidean).unwrap();
        let m = RobustKnnModel::with_rates(r.clone(), NoiseRates { p0: 0.1, p1: 0.3 });
        assert!((m.corrected_regression(&[0.0]).unwrap() - 0.5).abs() < 1e-12);
        let id = RobustKnnModel::with_rates(r.clone(), NoiseRates::noiseless());
        assert_eq!(id.corrected_regression(&[3.0]).unwrap(), 0.4);
        let low = RobustKnnModel::with_rates(r, NoiseRates { p0: 0.5, p1: 0.1 });
        assert!(low.raw_corrected_regression(&[0.0]).unwrap() < 0.0);
        assert_eq!(low.corrected_regression(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn line_partition_matches_pointwise_prediction() {
        let xs = [0.05, 0.9, 0.33, 0.5, 0.61, 0.12, 0.77];
        let zs = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        for k in 1..=xs.len() {
            let r = KnnRegressor::fit(line_sample(&xs, &zs), k, Metric::Euclidean).unwrap();
            let part = r.line_partition().unwrap();
            assert_eq!(part.values.len(), part.breaks.len() + 1);
            for i in 0..=200 {
                let x = -0.1 + 1.2 * i as f64 / 200.0;
                if part.breaks.iter().any(|b| (b - x).abs() < 1e-12) {
                    continue;
                }
                assert_eq!(part.value_at(x), r.predict(&[x]).unwrap(), "k={k} x={x}");
            }
        }
    }
}
