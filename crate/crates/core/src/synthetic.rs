//! Synthetic distributions with a uniform marginal on `[0, 1]` and a
//! continuous piecewise-linear regression function.
//!
//! Every quantity the bounds talk about (ball measures, margin sets, Bayes
//! and excess risks, disagreement sets) is computed analytically by cutting
//! `[0, 1]` at the knots and at level crossings, so each piece is linear.

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{invalid, Result};
use crate::knn::{LinePartition, NoiseRates};
use crate::nn_index::PointSet;
use crate::noise::corrupt_regression;
use crate::rng::{rng_from_seed, Rng as StreamRng};

/// Continuous piecewise-linear function through `(knots[i], values[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(invalid("knots", "need at least two knots and one value per knot"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("knots", "must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("knots", "non-finite knot or value"));
        }
        Ok(PiecewiseLinear { knots, values })
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Linear interpolation, constant beyond the end knots.
    pub fn eval(&self, x: f64) -> f64 {
        let ks = &self.knots;
        if x <= ks[0] {
            return self.values[0];
        }
        if x >= self.hi() {
            return *self.values.last().unwrap();
        }
        let j = ks.partition_point(|&k| k <= x) - 1;
        let t = (x - ks[j]) / (ks[j + 1] - ks[j]);
        self.values[j] + t * (self.values[j + 1] - self.values[j])
    }

    /// `a * f + b`, knot by knot.
    pub fn affine(&self, a: f64, b: f64) -> PiecewiseLinear {
        PiecewiseLinear {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| a * v + b).collect(),
        }
    }

    /// Points strictly inside `(lo, hi)` where the function equals `level`
    /// on a non-constant piece.
    pub fn level_crossings(&self, level: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..self.knots.len() - 1 {
            let (v0, v1) = (self.values[j], self.values[j + 1]);
            if v0 == v1 {
                continue;
            }
            let t = (level - v0) / (v1 - v0);
            if t > 0.0 && t < 1.0 {
                out.push(self.knots[j] + t * (self.knots[j + 1] - self.knots[j]));
            }
        }
        out
    }

    pub fn integral(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| 0.5 * (v[0] + v[1]) * (k[1] - k[0]))
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub lambda: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub alpha: f64,
    pub c_alpha: f64,
}

/// Uniform marginal on `[0, 1]` with a piecewise-linear regression function
/// and its declared smoothness and margin constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDistribution {
    pub regression: PiecewiseLinear,
    pub smoothness: Smoothness,
    pub margin: Margin,
}

impl SyntheticDistribution {
    pub fn new(regression: PiecewiseLinear, smoothness: Smoothness, margin: Margin) -> Result<Self> {
        if regression.lo() != 0.0 || regression.hi() != 1.0 {
            return Err(invalid("regression", "knots must span exactly [0, 1]"));
        }
        if regression.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("regression", "values must lie in [0, 1]"));
        }
        if !(smoothness.lambda > 0.0 && smoothness.omega > 0.0) {
            return Err(invalid("smoothness", "lambda and omega must be positive"));
        }
        if !(margin.alpha >= 0.0 && margin.c_alpha >= 1.0) {
            return Err(invalid("margin", "need alpha >= 0 and c_alpha >= 1"));
        }
        Ok(SyntheticDistribution { regression, smoothness, margin })
    }

    /// The three-piece example on which plain kNN is inconsistent under
    /// asymmetric noise: slope 3/2 up to `2m/3`, flat at
    /// `m = (2 - 3 p0 - p1) / (4 (1 - p0 - p1))` up to `(2m + 1)/3`, then
    /// slope 3/2 again, reaching 1 at `x = 1`.
    pub fn three_piece_example(p0: f64, p1: f64) -> Result<Self> {
        let in_range = |p: f64| p > 0.0 && p < 0.5;
        if !in_range(p0) || !in_range(p1) {
            return Err(invalid("rates", format!("need p0, p1 in (0, 1/2), got ({p0}, {p1})")));
        }
        if p0 == p1 {
            return Err(invalid("rates", "the example needs p0 != p1"));
        }
        let m = flat_level(p0, p1);
        let regression = PiecewiseLinear::new(
            vec![0.0, 2.0 * m / 3.0, (2.0 * m + 1.0) / 3.0, 1.0],
            vec![0.0, m, m, 1.0],
        )?;
        SyntheticDistribution::new(
            regression,
            Smoothness { lambda: 1.0, omega: 3.0 },
            Margin { alpha: 0.0, c_alpha: 1.0 },
        )
    }

    pub fn eta(&self, x: f64) -> f64 {
        self.regression.eval(x)
    }

    /// Regression function of the labels after the flip channel.
    pub fn corrupted_regression(&self, rates: NoiseRates) -> PiecewiseLinear {
        self.regression.affine(rates.denominator(), rates.p0)
    }

    pub fn corrupted_eta(&self, x: f64, rates: NoiseRates) -> f64 {
        corrupt_regression(self.eta(x), rates)
    }

    /// `P(Y = 1)`.
    pub fn positive_rate(&self) -> f64 {
        self.regression.integral()
    }

    /// Draws `n` clean pairs: for each point, one uniform draw for `X` and one
    /// for the Bernoulli label, in that order.
    pub fn sample_with(&self, n: usize, rng: &mut StreamRng) -> Result<LabeledDataset> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let mut xs = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.gen();
            let u: f64 = rng.gen();
            xs.push(x);
            labels.push((u < self.eta(x)) as u8);
        }
        LabeledDataset::new(PointSet::new(1, xs)?, labels)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        self.sample_with(n, &mut rng_from_seed(seed))
    }

    pub fn bayes_classify(&self, x: f64) -> u8 {
        (self.eta(x) >= 0.5) as u8
    }

    /// Excess risk of `classifier` on this distribution; see
    /// [`excess_risk_against`].
    pub fn excess_risk<F: Fn(f64) -> u8>(&self, classifier: F, quad_tol: f64) -> f64 {
        excess_risk_against(&self.regression, classifier, quad_tol)
    }

    /// Exact excess risk of `1{f(x) >= threshold}` for a step function `f`.
    pub fn excess_risk_of_step(&self, step: &LinePartition, threshold: f64) -> f64 {
        excess_risk_of_step(&self.regression, step, threshold)
    }

    /// `A_theta` between this regression function and its image under the
    /// flip channel.
    pub fn disagreement_set(&self, rates: NoiseRates, theta: f64) -> Result<DisagreementSet> {
        disagreement_set(&self.regression, &self.corrupted_regression(rates), theta)
    }

    /// Falsification check of measure-smoothness on random pairs: counts
    /// pairs with `|eta(x0) - eta(x1)| > omega * mu(B_r(x0))^lambda`, where
    /// `B_r` is the open ball of radius `|x0 - x1|`.
    pub fn verify_smoothness(&self, smoothness: Smoothness, num_pairs: usize, seed: u64) -> SmoothnessReport {
        let mut rng = rng_from_seed(seed);
        let mut report = SmoothnessReport { pairs: num_pairs, violations: 0, max_ratio: 0.0, worst_pair: None };
        for _ in 0..num_pairs {
            let x0: f64 = rng.gen();
            let x1: f64 = rng.gen();
            let r = (x0 - x1).abs();
            let lhs = (self.eta(x0) - self.eta(x1)).abs();
            if lhs == 0.0 {
                continue;
            }
            let rhs = smoothness.omega * uniform_ball_measure(x0, r).powf(smoothness.lambda);
            let ratio = lhs / rhs;
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.worst_pair = Some((x0, x1));
            }
            if lhs > rhs * (1.0 + 1e-12) {
                report.violations += 1;
            }
        }
        report
    }

    /// Exact measure of `{x : 0 < |eta(x) - 1/2| < xi}` against
    /// `c_alpha * xi^alpha`, for each `xi`.
    pub fn verify_margin(&self, margin: Margin, xi_grid: &[f64]) -> Result<MarginReport> {
        let mut rows = Vec::with_capacity(xi_grid.len());
        for &xi in xi_grid {
            if !(xi > 0.0 && xi <= 0.5) {
                return Err(invalid("xi", format!("{xi} is outside (0, 1/2]")));
            }
            let f = &self.regression;
            let mut cuts = f.level_crossings(0.5 - xi);
            cuts.extend(f.level_crossings(0.5 + xi));
            cuts.extend(f.level_crossings(0.5));
            let measure = measure_where(f, &[], cuts, |v, _| {
                let d = (v - 0.5).abs();
                d > 0.0 && d < xi
            })
            .iter()
            .map(|(a, b)| b - a)
            .sum::<f64>();
            let bound = margin.c_alpha * xi.powf(margin.alpha);
            rows.push(MarginRow { xi, measure, bound, holds: measure <= bound + 1e-12 });
        }
        Ok(MarginReport { rows })
    }
}

/// `m = (2 - 3 p0 - p1) / (4 (1 - p0 - p1))`.
pub fn flat_level(p0: f64, p1: f64) -> f64 {
    (2.0 - 3.0 * p0 - p1) / (4.0 * (1.0 - p0 - p1))
}

/// Length of the open interval `(x - r, x + r)` clipped to `[0, 1]`.
pub fn uniform_ball_measure(x: f64, r: f64) -> f64 {
    ((x + r).min(1.0) - (x - r).max(0.0)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub pairs: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub worst_pair: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRow {
    pub xi: f64,
    pub measure: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub rows: Vec<MarginRow>,
}

impl MarginReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Maximal intervals of `[0, 1]` where `pred(f(x), g(x))` holds, given all
/// points where the predicate can change (`cuts`, plus the knots of `f`
/// and `g`). The predicate is evaluated at each piece's midpoint.
fn measure_where<P>(f: &PiecewiseLinear, g_knots: &[f64], mut cuts: Vec<f64>, pred: P) -> Vec<(f64, f64)>
where
    P: Fn(f64, f64) -> bool,
{
    cuts.extend_from_slice(&f.knots);
    cuts.extend_from_slice(g_knots);
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.retain(|c| (0.0..=1.0).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if pred(f.eval(mid), mid) {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// `A_theta(eta, eta_tilde)`: for `theta > 0` the points where one function is
/// at least `1/2 + theta` and the other at most `1/2 - theta`; for
/// `theta = 0` the points where `(eta - 1/2)(eta_tilde - 1/2) < 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisagreementSet {
    pub theta: f64,
    pub measure: f64,
    pub intervals: Vec<(f64, f64)>,
}

pub fn disagreement_set(eta: &PiecewiseLinear, eta_tilde: &PiecewiseLinear, theta: f64) -> Result<DisagreementSet> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(invalid("theta", "must be finite and non-negative"));
    }
    let mut cuts = Vec::new();
    for level in [0.5 - theta, 0.5, 0.5 + theta] {
        cuts.extend(eta.level_crossings(level));
        cuts.extend(eta_tilde.level_crossings(level));
    }
    let intervals = measure_where(eta, &eta_tilde.knots, cuts, |v, x| {
        let w = eta_tilde.eval(x);
        if theta == 0.0 {
            (v - 0.5) * (w - 0.5) < 0.0
        } else {
            (v <= 0.5 - theta && w >= 0.5 + theta) || (v >= 0.5 + theta && w <= 0.5 - theta)
        }
    });
    let measure = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(DisagreementSet { theta, measure, intervals })
}

/// `int_a^b |f - 1/2| * 1{label != 1{f >= 1/2}} dx`, exact for piecewise
/// linear `f`.
fn disagreement_integral(f: &PiecewiseLinear, a: f64, b: f64, label: u8) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    cuts.extend(f.knots.iter().copied().filter(|&k| k > a && k < b));
    cuts.extend(f.level_crossings(0.5).into_iter().filter(|&c| c > a && c < b));
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let bayes = (f.eval(mid) >= 0.5) as u8;
        if bayes != label {
            // |f - 1/2| is linear on the piece
            let (ya, yb) = ((f.eval(w[0]) - 0.5).abs(), (f.eval(w[1]) - 0.5).abs());
            total += 0.5 * (ya + yb) * (w[1] - w[0]);
        }
    }
    total
}

/// Number of scan nodes used to locate the decision boundaries of an
/// arbitrary classifier.
pub const SCAN_NODES: usize = 100_000;

/// Excess risk `int |f - 1/2| 1{phi != 1{f >= 1/2}} dmu` of `classifier` under
/// the uniform marginal on `[0, 1]` and regression function `f`.
///
/// The classifier is scanned on a grid of [`SCAN_NODES`] + 1 nodes; every
/// label change between neighbouring nodes is located by bisection down to
/// `quad_tol * 1e-3` (snapping to a crossing of `f = 1/2` when one lies in
/// the final bracket), and the integral over each constant-label interval is
/// computed exactly. Label islands narrower than the grid spacing are not
/// seen.
pub fn excess_risk_against<F: Fn(f64) -> u8>(f: &PiecewiseLinear, classifier: F, quad_tol: f64) -> f64 {
    let width = (quad_tol * 1e-3).max(1e-15);
    let nodes = SCAN_NODES;
    let mut total = 0.0;
    let mut seg_start = 0.0;
    let mut prev_x = 0.0;
    let mut prev_label = classifier(0.0);
    for j in 1..=nodes {
        let x = j as f64 / nodes as f64;
        let label = classifier(x);
        if label != prev_label {
            let (mut lo, mut hi) = (prev_x, x);
            while hi - lo > width {
                let mid = 0.5 * (lo + hi);
                if classifier(mid) == prev_label {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // a Bayes boundary inside the bracket is taken exactly
            let boundary = f
                .level_crossings(0.5)
                .into_iter()
                .find(|c| (lo..=hi).contains(c))
                .unwrap_or(0.5 * (lo + hi));
            total += disagreement_integral(f, seg_start, boundary, prev_label);
            seg_start = boundary;
            prev_label = label;
        }
        prev_x = x;
    }
    total + disagreement_integral(f, seg_start, 1.0, prev_label)
}

/// Exact excess risk, against `f`, of `1{step(x) >= threshold}` on `[0, 1]`.
pub fn excess_risk_of_step(f: &PiecewiseLinear, step: &LinePartition, threshold: f64) -> f64 {
    let mut total = 0.0;
    let mut start = 0.0;
    for (i, &value) in step.values.iter().enumerate() {
        let end = step.breaks.get(i).copied().unwrap_or(1.0).clamp(0.0, 1.0);
        if end > start {
            total += disagreement_integral(f, start, end, (value >= threshold) as u8);
            start = end;
        }
    }
    total
}

/// Sampling-only generator in `R^d`: standard normal features and
/// `eta(x) = 1 / (1 + exp(-scale * x_1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLogistic {
    pub dim: usize,
    pub scale: f64,
}

impl GaussianLogistic {
    pub fn new(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if !scale.is_finite() {
            return Err(invalid("scale", "must be finite"));
        }
        Ok(GaussianLogistic { dim, scale })
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.scale * x[0]).exp())
    }

    pub fn sample_with(&self, n: usize, rng: &mut StreamRng) -> Result<LabeledDataset> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let mut coords = Vec::with_capacity(n * self.dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let start = coords.len();
            for _ in 0..self.dim {
                coords.push(StandardNormal.sample(rng));
            }
            let u: f64 = rng.gen();
            labels.push((u < self.eta(&coords[start..])) as u8);
        }
        LabeledDataset::new(PointSet::new(self.dim, coords)?, labels)
    }

    /// Held-out estimate of the excess risk from `n_test` fresh points.
    pub fn excess_risk_monte_carlo<F: Fn(&[f64]) -> u8>(&self, classifier: F, n_test: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut x = vec![0.0; self.dim];
        let mut total = 0.0;
        for _ in 0..n_test {
            for c in x.iter_mut() {
                *c = StandardNormal.sample(&mut rng);
            }
            let eta = self.eta(&x);
            if classifier(&x) != (eta >= 0.5) as u8 {
                total += (eta - 0.5).abs();
            }
        }
        total / n_test as f64
    }
}

/// JSON descriptor of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    ThreePieceExample { p0: f64, p1: f64 },
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<f64>,
        lambda: f64,
        omega: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "default_c_alpha")]
        c_alpha: f64,
    },
    GaussianLogistic { dim: usize, scale: f64 },
}

fn default_c_alpha() -> f64 {
    1.0
}

/// A built distribution: exact (piecewise) or sampling-only.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Exact(SyntheticDistribution),
    SamplingOnly(GaussianLogistic),
}

impl DistributionSpec {
    pub fn build(&self) -> Result<Distribution> {
        Ok(match self {
            DistributionSpec::ThreePieceExample { p0, p1 } => {
                Distribution::Exact(SyntheticDistribution::three_piece_example(*p0, *p1)?)
            }
            DistributionSpec::PiecewiseLinear { knots, values, lambda, omega, alpha, c_alpha } => {
                Distribution::Exact(SyntheticDistribution::new(
                    PiecewiseLinear::new(knots.clone(), values.clone())?,
                    Smoothness { lambda: *lambda, omega: *omega },
                    Margin { alpha: *alpha, c_alpha: *c_alpha },
                )?)
            }
            DistributionSpec::GaussianLogistic { dim, scale } => {
                Distribution::SamplingOnly(GaussianLogistic::new(*dim, *scale)?)
            }
        })
    }
}

impl Distribution {
    pub fn sample_with(&self, n: usize, rng: &mut StreamRng) -> Result<LabeledDataset> {
        match self {
            Distribution::Exact(d) => d.sample_with(n, rng),
            Distribution::SamplingOnly(d) => d.sample_with(n, rng),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Exact(_) => 1,
            Distribution::SamplingOnly(d) => d.dim,
        }
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        match self {
            Distribution::Exact(d) => d.eta(x[0]),
            Distribution::SamplingOnly(d) => d.eta(x),
        }
    }

    /// `(inf eta, sup eta)` over the support.
    pub fn eta_range(&self) -> (f64, f64) {
        match self {
            Distribution::Exact(d) => (d.regression.min_value(), d.regression.max_value()),
            Distribution::SamplingOnly(d) if d.scale == 0.0 => (0.5, 0.5),
            Distribution::SamplingOnly(_) => (0.0, 1.0),
        }
    }

    pub fn exact(&self) -> Option<&SyntheticDistribution> {
        match self {
            Distribution::Exact(d) => Some(d),
            Distribution::SamplingOnly(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example() -> SyntheticDistribution {
        SyntheticDistribution::three_piece_example(0.1, 0.3).unwrap()
    }

    fn constant(c: f64) -> SyntheticDistribution {
        SyntheticDistribution::new(
            PiecewiseLinear::new(vec![0.0, 1.0], vec![c, c]).unwrap(),
            Smoothness { lambda: 1.0, omega: 1e-3 },
            Margin { alpha: 0.0, c_alpha: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn example_shape() {
        let d = example();
        let m = 7.0 / 12.0;
        assert_abs_diff_eq!(flat_level(0.1, 0.3), m, epsilon = 1e-15);
        assert_abs_diff_eq!(d.regression.knots[1], 7.0 / 18.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.regression.knots[2], 7.0 / 18.0 + 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(d.eta(0.0), 0.0);
        assert_eq!(d.eta(1.0), 1.0);
        assert_abs_diff_eq!(d.eta(2.0 * m / 3.0), m, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eta(0.2), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eta(0.9), 0.85, epsilon = 1e-15);
        assert_eq!(d.smoothness, Smoothness { lambda: 1.0, omega: 3.0 });
        assert_eq!(d.margin, Margin { alpha: 0.0, c_alpha: 1.0 });
    }

    #[test]
    fn example_rejects_bad_rates() {
        assert!(SyntheticDistribution::three_piece_example(0.2, 0.2).is_err());
        assert!(SyntheticDistribution::three_piece_example(0.0, 0.2).is_err());
        assert!(SyntheticDistribution::three_piece_example(0.1, 0.5).is_err());
    }

    #[test]
    fn corrupted_extrema() {
        let d = example();
        let rates = NoiseRates { p0: 0.1, p1: 0.3 };
        let c = d.corrupted_regression(rates);
        assert_abs_diff_eq!(c.min_value(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.max_value(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(d.corrupted_eta(0.5, rates), 0.45, epsilon = 1e-15);
    }

    #[test]
    fn sampling() {
        let ones = constant(1.0).sample(500, 1).unwrap();
        assert!(ones.labels.iter().all(|&l| l == 1));
        let d = example();
        let a = d.sample(1000, 9).unwrap();
        assert_eq!(a, d.sample(1000, 9).unwrap());
        let big = d.sample(100_000, 4).unwrap();
        let frac = big.labels.iter().map(|&l| l as f64).sum::<f64>() / 1e5;
        // independent quadrature of the regression function
        let grid = 1_000_000;
        let quad: f64 = (0..grid).map(|i| d.eta((i as f64 + 0.5) / grid as f64)).sum::<f64>() / grid as f64;
        assert_abs_diff_eq!(quad, d.positive_rate(), epsilon = 1e-9);
        assert!((frac - quad).abs() < 0.01, "{frac} vs {quad}");
    }

    #[test]
    fn bayes_rule_is_inclusive() {
        let d = constant(0.5);
        assert_eq!(d.bayes_classify(0.3), 1);
        assert_eq!(constant(0.3).bayes_classify(0.3), 0);
        assert_eq!(example().bayes_classify(0.5), 1);
    }

    #[test]
    fn excess_risk_of_bayes_and_anti_bayes() {
        let d = example();
        assert_eq!(d.excess_risk(|x| d.bayes_classify(x), 1e-6), 0.0);
        let anti = d.excess_risk(|x| 1 - d.bayes_classify(x), 1e-6);
        let grid = 2_000_000;
        let oracle: f64 = (0..grid)
            .map(|i| (d.eta((i as f64 + 0.5) / grid as f64) - 0.5).abs())
            .sum::<f64>()
            / grid as f64;
        assert_abs_diff_eq!(anti, oracle, epsilon = 1e-6);
    }

    #[test]
    fn corrupted_bayes_rule_on_the_example() {
        // wrong on all of (1/3, 7/9): flat part gives 1/36, the two sloped
        // slivers 1/432 and 1/144, for a total of 1/27
        let d = example();
        let rates = NoiseRates { p0: 0.1, p1: 0.3 };
        let e = d.excess_risk(|x| (d.corrupted_eta(x, rates) >= 0.5) as u8, 1e-6);
        let grid = 2_000_000;
        let oracle: f64 = (0..grid)
            .map(|i| {
                let x = (i as f64 + 0.5) / grid as f64;
                let eta = d.eta(x);
                if (eta >= 0.5) != (d.corrupted_eta(x, rates) >= 0.5) { (eta - 0.5).abs() } else { 0.0 }
            })
            .sum::<f64>()
            / grid as f64;
        assert_abs_diff_eq!(e, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(e, 1.0 / 27.0, epsilon = 1e-9);
        // restricted to the flat region only
        let flat = d.excess_risk(|x| if (7.0 / 18.0..=13.0 / 18.0).contains(&x) { 0 } else { d.bayes_classify(x) }, 1e-6);
        assert_abs_diff_eq!(flat, 1.0 / 36.0, epsilon = 1e-9);
    }

    #[test]
    fn step_function_excess_risk_matches_scan() {
        let d = example();
        let step = LinePartition { breaks: vec![0.2, 0.34, 0.5, 0.75, 0.9], values: vec![0.1, 0.5, 0.44, 0.3, 0.52, 0.9] };
        let exact = d.excess_risk_of_step(&step, 0.45);
        let scanned = d.excess_risk(|x| (step.value_at(x) >= 0.45) as u8, 1e-6);
        assert_abs_diff_eq!(exact, scanned, epsilon = 1e-9);
        assert!(exact > 0.0);
    }

    #[test]
    fn disagreement_sets() {
        let d = example();
        let rates = NoiseRates { p0: 0.1, p1: 0.3 };
        let a0 = d.disagreement_set(rates, 0.0).unwrap();
        // eta > 1/2 from x = 1/3, eta_tilde < 1/2 until x = 7/9
        assert_eq!(a0.intervals.len(), 1);
        assert_abs_diff_eq!(a0.intervals[0].0, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a0.intervals[0].1, 7.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a0.measure, 4.0 / 9.0, epsilon = 1e-12);
        assert!(a0.intervals[0].0 <= 7.0 / 18.0 && a0.intervals[0].1 >= 13.0 / 18.0);
        let a4 = d.disagreement_set(rates, 0.04).unwrap();
        assert_abs_diff_eq!(a4.measure, 2.2 / 3.0 - 0.54 / 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a4.measure, 0.373_333_333_333_333_3, epsilon = 1e-12);
        assert!(a4.measure >= 1.0 / 3.0);
        assert_eq!(d.disagreement_set(NoiseRates::noiseless(), 0.0).unwrap().measure, 0.0);
        assert_eq!(d.disagreement_set(NoiseRates { p0: 0.2, p1: 0.2 }, 0.0).unwrap().measure, 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let m = d.disagreement_set(rates, i as f64 * 0.002).unwrap().measure;
            assert!(m <= prev + 1e-15);
            prev = m;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn smoothness_checks() {
        let d = example();
        let ok = d.verify_smoothness(Smoothness { lambda: 1.0, omega: 3.0 }, 100_000, 1);
        assert_eq!(ok.violations, 0);
        assert!(ok.max_ratio <= 0.5 + 1e-9);
        let tight = d.verify_smoothness(Smoothness { lambda: 1.0, omega: 1.0 }, 100_000, 1);
        assert!(tight.violations > 0);
        let flat = constant(0.4).verify_smoothness(Smoothness { lambda: 1.0, omega: 1e-9 }, 10_000, 2);
        assert_eq!(flat.violations, 0);
    }

    #[test]
    fn margin_checks() {
        let d = example();
        let grid = [0.01, 0.05, 0.1, 0.25, 0.5];
        let r = d.verify_margin(d.margin, &grid).unwrap();
        assert!(r.holds());
        // xi = 0.05 only sees the first slope near x = 1/3, width 2 * 0.05 / 1.5
        assert_abs_diff_eq!(r.rows[1].measure, 0.1 / 1.5, epsilon = 1e-12);
        // xi = 0.1 also swallows the flat part, |m - 1/2| = 1/12
        assert_abs_diff_eq!(r.rows[2].measure, 0.2 / 1.5 + 1.0 / 3.0, epsilon = 1e-12);
        let ones = constant(1.0).verify_margin(Margin { alpha: 3.0, c_alpha: 1.0 }, &grid).unwrap();
        assert!(ones.rows.iter().all(|r| r.measure == 0.0));
        let half = constant(0.5).verify_margin(Margin { alpha: 3.0, c_alpha: 1.0 }, &grid).unwrap();
        assert!(half.rows.iter().all(|r| r.measure == 0.0));
        assert!(d.verify_margin(d.margin, &[0.0]).is_err());
    }

    #[test]
    fn ball_measure_is_clipped() {
        assert_abs_diff_eq!(uniform_ball_measure(0.5, 0.1), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(uniform_ball_measure(0.05, 0.1), 0.15, epsilon = 1e-15);
        assert_eq!(uniform_ball_measure(0.5, 2.0), 1.0);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = DistributionSpec::ThreePieceExample { p0: 0.1, p1: 0.3 };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"kind":"three_piece_example","p0":0.1,"p1":0.3}"#);
        assert_eq!(serde_json::from_str::<DistributionSpec>(&text).unwrap(), spec);
        let d = serde_json::to_string(&example()).unwrap();
        assert_eq!(serde_json::from_str::<SyntheticDistribution>(&d).unwrap(), example());
    }

    #[test]
    fn gaussian_generator_samples_and_estimates() {
        let g = GaussianLogistic::new(3, 4.0).unwrap();
        let ds = g.sample_with(200, &mut rng_from_seed(1)).unwrap();
        assert_eq!(ds.points.dim(), 3);
        assert_eq!(g.excess_risk_monte_carlo(|x| (g.eta(x) >= 0.5) as u8, 1000, 3), 0.0);
        assert!(g.excess_risk_monte_carlo(|_| 1, 20_000, 3) > 0.05);
    }
}
