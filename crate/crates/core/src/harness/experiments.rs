use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;

use crate::bounds::{self, BoundParams};
use crate::data::LabeledDataset;
use crate::error::{invalid, Error, Result};
use crate::harness::config::{ExperimentConfig, KPolicy};
use crate::harness::cv::cross_validate_k;
use crate::harness::result::{Check, ExperimentResult, GridSummary, Record, Summary};
use crate::knn::{KnnRegressor, NoiseRates, RegressionSample};
use crate::nn_index::{Index, Metric, PointSet};
use crate::noise::{corrupt_regression, corrupt_with};
use crate::rng::{replicate_seed, rng_from_seed, substream};
use crate::synthetic::{excess_risk_against, excess_risk_of_step, uniform_ball_measure, Distribution};

const SAMPLE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const CV_STREAM: u64 = 2;
const TEST_STREAM: u64 = 3;

/// Absolute tolerance on the robust classifier's excess risk at the largest
/// sample size of the inconsistency demo.
pub const ROBUST_EXCESS_TOLERANCE: f64 = 0.01;

/// Three-sigma Monte Carlo slack `3 sqrt(p (1 - p) / reps)` around a nominal
/// frequency `p`.
pub fn mc_slack(p: f64, reps: usize) -> f64 {
    3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

/// Runs `job(n, replicate)` for every grid point and replicate on a pool of
/// `workers` threads. Results come back in `(n, replicate)` order whatever
/// the scheduling.
fn run_replicates<T, F>(config: &ExperimentConfig, job: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers())
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let reps = config.replicates;
    let tasks: Vec<(usize, usize)> =
        config.n_grid.iter().flat_map(|&n| (0..reps).map(move |r| (n, r))).collect();
    let flat: Vec<T> = pool.install(|| tasks.par_iter().map(|&(n, r)| job(n, r)).collect::<Result<_>>())?;
    let mut out = Vec::with_capacity(config.n_grid.len());
    let mut it = flat.into_iter();
    for _ in &config.n_grid {
        out.push(it.by_ref().take(reps).collect());
    }
    Ok(out)
}

fn base_record(config: &ExperimentConfig, n: usize, replicate: usize) -> Record {
    Record {
        n,
        replicate,
        seed: replicate_seed(config.seed, n as u64, replicate as u64),
        ..Record::default()
    }
}

fn summary(config: &ExperimentConfig, experiment: &str) -> Summary {
    Summary {
        experiment: experiment.to_string(),
        master_seed: config.seed,
        replicates: config.replicates,
        delta: config.delta,
        n_grid: config.n_grid.clone(),
        per_n: Vec::new(),
        metrics: BTreeMap::new(),
        checks: Vec::new(),
    }
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        hit += f as usize;
        total += 1;
    }
    hit as f64 / total.max(1) as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln y` against `ln x`. NaN when any `y <= 0`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    if ys.iter().any(|&y| !(y > 0.0)) || xs.len() < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// True when `values` never increases, except for at most `allowed`
/// single-step increases.
pub fn non_increasing_with_inversions(values: &[f64], allowed: usize) -> bool {
    values.windows(2).filter(|w| w[1] > w[0]).count() <= allowed
}

fn static_k(config: &ExperimentConfig, n: usize, what: &str) -> Result<usize> {
    config
        .static_k(n)?
        .ok_or_else(|| invalid("k_policy", format!("the {what} experiment needs a fixed or optimal k")))
}

/// Draws a clean sample from the `seed`'s sampling stream and passes its
/// labels through the channel on the noise stream; clean labels are kept.
pub fn corrupted_sample(dist: &Distribution, rates: NoiseRates, n: usize, seed: u64) -> Result<LabeledDataset> {
    let clean = dist.sample_with(n, &mut rng_from_seed(substream(seed, SAMPLE_STREAM)))?;
    let noisy = corrupt_with(&clean.labels, rates, &mut rng_from_seed(substream(seed, NOISE_STREAM)));
    let clean_labels = clean.labels;
    LabeledDataset::new(clean.points, noisy)?.with_clean_labels(clean_labels)
}

fn resolve_k(config: &ExperimentConfig, n: usize, sample: &RegressionSample, seed: u64) -> Result<usize> {
    match &config.k_policy {
        KPolicy::Fixed { k } => Ok((*k).min(n)),
        KPolicy::Optimal => static_k(config, n, "this"),
        KPolicy::CrossValidated { grid, folds } => {
            cross_validate_k(sample, grid, *folds, substream(seed, CV_STREAM))
        }
    }
}

/// Tail of the marginal measure of the k-th-neighbour ball, at a fixed
/// probe and at a data point, on a uniform sample from `[0, 1]`.
pub fn run_ball_measure_experiment(
    n: usize,
    k: usize,
    zeta: f64,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<ExperimentResult> {
    let config = ExperimentConfig {
        n_grid: vec![n],
        k_policy: KPolicy::Fixed { k },
        zeta,
        replicates: reps,
        seed,
        workers: Some(workers),
        ..ExperimentConfig::default()
    };
    run_ball_experiment(&config)
}

/// Grid form of [`run_ball_measure_experiment`]; uses `n_grid`, `k_policy`,
/// `zeta`, `probe` and `probe_index` from the config.
pub fn run_ball_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if !(0.0..=1.0).contains(&config.probe) {
        return Err(invalid("probe", "must lie in [0, 1] for the uniform marginal"));
    }
    let records = run_replicates(config, |n, rep| {
        let mut rec = base_record(config, n, rep);
        let k = static_k(config, n, "ball")?;
        let mut rng = rng_from_seed(substream(rec.seed, SAMPLE_STREAM));
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let centre = xs[config.probe_index];
        let index = Index::build(PointSet::new(1, xs)?, Metric::Euclidean);
        let r_fixed = index.kth_neighbor_distance(&[config.probe], k)?;
        let r_data = index.kth_neighbor_distance(&[centre], k)?;
        rec.k = k;
        rec.ball_fixed = Some(uniform_ball_measure(config.probe, r_fixed));
        rec.ball_data = Some(uniform_ball_measure(centre, r_data));
        Ok(rec)
    })?;

    let mut s = summary(config, "ball");
    let slack = 3.0 * (0.25 / config.replicates as f64).sqrt();
    s.metrics.insert("zeta".into(), config.zeta);
    s.metrics.insert("slack".into(), slack);
    for (&n, recs) in config.n_grid.iter().zip(&records) {
        let k = recs[0].k;
        let level = (1.0 + config.zeta) * k as f64 / n as f64;
        let freq_fixed = fraction(recs.iter().map(|r| r.ball_fixed.unwrap() > level));
        let freq_data = fraction(recs.iter().map(|r| r.ball_data.unwrap() > level));
        let bound_fixed = bounds::ball_measure_tail(k, config.zeta)?;
        let bound_data = bounds::ball_measure_tail_data_centre(k, config.zeta)?;
        let mut values = BTreeMap::new();
        values.insert("k".into(), k as f64);
        values.insert("level".into(), level);
        values.insert("freq_fixed".into(), freq_fixed);
        values.insert("freq_data".into(), freq_data);
        values.insert("bound_fixed".into(), bound_fixed);
        values.insert("bound_data".into(), bound_data);
        s.per_n.push(GridSummary { n, values });
        s.checks.push(Check::at_most(format!("ball_fixed_centre_n{n}"), freq_fixed, bound_fixed + slack));
        s.checks.push(Check::at_most(format!("ball_data_centre_n{n}"), freq_data, bound_data + slack));
    }
    Ok(ExperimentResult { records: records.into_iter().flatten().collect(), summary: s })
}

fn fixed_probe(config: &ExperimentConfig, dim: usize) -> Vec<f64> {
    vec![config.probe; dim]
}

/// Frequency with which the kNN estimate of the corrupted regression
/// function misses its target by more than the pointwise bound, at a fixed
/// probe and at training point `probe_index`.
pub fn run_pointwise_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let dist = config.build_distribution()?;
    let rates = config.rates;
    let probe = fixed_probe(config, dist.dim());
    let records = run_replicates(config, |n, rep| {
        let mut rec = base_record(config, n, rep);
        let data = corrupted_sample(&dist, rates, n, rec.seed)?;
        let sample = data.to_sample();
        rec.k = resolve_k(config, n, &sample, rec.seed)?;
        let reg = KnnRegressor::fit(sample, rec.k, Metric::Euclidean)?;
        let target = |x: &[f64]| corrupt_regression(dist.eta(x), rates);
        rec.err_fixed_probe = Some((reg.predict(&probe)? - target(&probe)).abs());
        let xj = data.points.point(config.probe_index);
        rec.err_data_probe = Some((reg.predict(xj)? - target(xj)).abs());
        Ok(rec)
    })?;

    let smooth = config.smoothness()?;
    let mut s = summary(config, "pointwise");
    let slack = mc_slack(config.delta, config.replicates);
    s.metrics.insert("slack".into(), slack);
    for (&n, recs) in config.n_grid.iter().zip(&records) {
        let mut values = BTreeMap::new();
        let mut bound_of = |r: &Record| -> Result<f64> {
            bounds::pointwise_bound(&BoundParams::new(n, r.k, config.delta, smooth.lambda, smooth.omega))
        };
        let bounds: Vec<f64> = recs.iter().map(&mut bound_of).collect::<Result<_>>()?;
        let freq_fixed = fraction(recs.iter().zip(&bounds).map(|(r, b)| r.err_fixed_probe.unwrap() > *b));
        let freq_data = fraction(recs.iter().zip(&bounds).map(|(r, b)| r.err_data_probe.unwrap() > *b));
        values.insert("k".into(), recs[0].k as f64);
        values.insert("bound".into(), bounds[0]);
        values.insert("freq_fixed".into(), freq_fixed);
        values.insert("freq_data".into(), freq_data);
        values.insert(
            "mean_err_fixed".into(),
            mean(&recs.iter().map(|r| r.err_fixed_probe.unwrap()).collect::<Vec<_>>()),
        );
        s.per_n.push(GridSummary { n, values });
        let limit = config.delta + slack;
        s.checks.push(Check::at_most(format!("pointwise_fixed_probe_n{n}"), freq_fixed, limit));
        s.checks.push(Check::at_most(format!("pointwise_data_probe_n{n}"), freq_data, limit));
    }
    Ok(ExperimentResult { records: records.into_iter().flatten().collect(), summary: s })
}

/// Extremes of the fitted values against `sup` and `inf` of the corrupted
/// regression function, plus the implied noise-rate errors.
pub fn run_max_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let dist = config.build_distribution()?;
    let rates = config.rates;
    let records = run_replicates(config, |n, rep| {
        let mut rec = base_record(config, n, rep);
        let sample = corrupted_sample(&dist, rates, n, rec.seed)?.to_sample();
        rec.k = resolve_k(config, n, &sample, rec.seed)?;
        let reg = KnnRegressor::fit(sample, rec.k, Metric::Euclidean)?;
        let est = reg.noise_rate_estimates();
        rec.min_hat = Some(est.p0);
        rec.max_hat = Some(1.0 - est.p1);
        rec.p0_hat = Some(est.p0);
        rec.p1_hat = Some(est.p1);
        rec.threshold = Some(est.threshold());
        Ok(rec)
    })?;

    let smooth = config.smoothness()?;
    let (lo, hi) = dist.eta_range();
    let (target_min, target_max) = (corrupt_regression(lo, rates), corrupt_regression(hi, rates));
    let mut s = summary(config, "max");
    let slack = mc_slack(config.delta, config.replicates);
    s.metrics.insert("slack".into(), slack);
    s.metrics.insert("target_max".into(), target_max);
    s.metrics.insert("target_min".into(), target_min);
    for (&n, recs) in config.n_grid.iter().zip(&records) {
        let mut viol_max = Vec::new();
        let mut viol_min = Vec::new();
        let mut over_xi = Vec::new();
        let (mut err0, mut err1) = (Vec::new(), Vec::new());
        for r in recs {
            let p = BoundParams::new(n, r.k, config.delta, smooth.lambda, smooth.omega);
            let b = bounds::max_bound(&p)?;
            let xi = bounds::xi_error_term(n, r.k, config.delta, smooth.lambda, smooth.omega)?;
            viol_max.push((r.max_hat.unwrap() - target_max).abs() > b);
            viol_min.push((r.min_hat.unwrap() - target_min).abs() > b);
            let e0 = (r.p0_hat.unwrap() - rates.p0).abs();
            let e1 = (r.p1_hat.unwrap() - rates.p1).abs();
            over_xi.push(e0.max(e1) > xi);
            err0.push(e0);
            err1.push(e1);
        }
        let k = recs[0].k;
        let mut values = BTreeMap::new();
        values.insert("k".into(), k as f64);
        values.insert(
            "bound".into(),
            bounds::max_bound(&BoundParams::new(n, k, config.delta, smooth.lambda, smooth.omega))?,
        );
        values.insert("xi".into(), bounds::xi_error_term(n, k, config.delta, smooth.lambda, smooth.omega)?);
        let freq_max = fraction(viol_max.into_iter());
        let freq_min = fraction(viol_min.into_iter());
        let freq_xi = fraction(over_xi.into_iter());
        values.insert("freq_max".into(), freq_max);
        values.insert("freq_min".into(), freq_min);
        values.insert("freq_rate_error_over_xi".into(), freq_xi);
        values.insert("median_abs_err_p0".into(), median(&err0));
        values.insert("median_abs_err_p1".into(), median(&err1));
        values.insert("max_abs_err_p0".into(), err0.iter().copied().fold(0.0, f64::max));
        values.insert("max_abs_err_p1".into(), err1.iter().copied().fold(0.0, f64::max));
        s.per_n.push(GridSummary { n, values });
        let limit = config.delta + slack;
        s.checks.push(Check::at_most(format!("max_bound_n{n}"), freq_max, limit));
        s.checks.push(Check::at_most(format!("min_bound_n{n}"), freq_min, limit));
        s.checks.push(Check::at_most(format!("rate_error_within_xi_n{n}"), freq_xi, limit));
    }
    Ok(ExperimentResult { records: records.into_iter().flatten().collect(), summary: s })
}

/// Fits the regressor on a corrupted sample and scores the robust,
/// standard and known-rate classifiers against both the clean and the
/// corrupted regression function.
fn classification_record(
    config: &ExperimentConfig,
    dist: &Distribution,
    n: usize,
    rep: usize,
) -> Result<Record> {
    let rates = config.rates;
    let mut rec = base_record(config, n, rep);
    let sample = corrupted_sample(dist, rates, n, rec.seed)?.to_sample();
    rec.k = resolve_k(config, n, &sample, rec.seed)?;
    let reg = KnnRegressor::fit(sample, rec.k, Metric::Euclidean)?;
    let est = reg.noise_rate_estimates();
    rec.p0_hat = Some(est.p0);
    rec.p1_hat = Some(est.p1);
    rec.min_hat = Some(est.p0);
    rec.max_hat = Some(1.0 - est.p1);
    rec.threshold = Some(est.threshold());
    let thresholds = [est.threshold(), 0.5, rates.threshold()];

    let (clean, corrupted) = match (dist.exact(), reg.line_partition()) {
        (Some(d), Some(step)) => {
            let eta_tilde = d.corrupted_regression(rates);
            let clean = thresholds.map(|t| excess_risk_of_step(&d.regression, &step, t));
            let corrupted = thresholds.map(|t| excess_risk_of_step(&eta_tilde, &step, t));
            (clean, corrupted)
        }
        _ => held_out_excess(dist, &reg, thresholds, rates, config.test_points, substream(rec.seed, TEST_STREAM))?,
    };
    rec.excess_robust = Some(clean[0]);
    rec.excess_standard = Some(clean[1]);
    rec.excess_oracle = Some(clean[2]);
    rec.corrupted_excess_robust = Some(corrupted[0]);
    rec.corrupted_excess_standard = Some(corrupted[1]);
    rec.corrupted_excess_oracle = Some(corrupted[2]);
    Ok(rec)
}

/// Monte Carlo excess risks from `n_test` fresh points, for distributions
/// without an exact risk.
fn held_out_excess(
    dist: &Distribution,
    reg: &KnnRegressor,
    thresholds: [f64; 3],
    rates: NoiseRates,
    n_test: usize,
    seed: u64,
) -> Result<([f64; 3], [f64; 3])> {
    let test = dist.sample_with(n_test, &mut rng_from_seed(seed))?;
    let mut clean = [0.0; 3];
    let mut corrupted = [0.0; 3];
    for x in test.points.iter() {
        let f = reg.predict(x)?;
        let eta = dist.eta(x);
        let eta_tilde = corrupt_regression(eta, rates);
        for (j, &t) in thresholds.iter().enumerate() {
            let label = f >= t;
            if label != (eta >= 0.5) {
                clean[j] += (eta - 0.5).abs();
            }
            if label != (eta_tilde >= 0.5) {
                corrupted[j] += (eta_tilde - 0.5).abs();
            }
        }
    }
    let m = n_test as f64;
    Ok((clean.map(|v| v / m), corrupted.map(|v| v / m)))
}

fn column(recs: &[Record], get: impl Fn(&Record) -> Option<f64>) -> Vec<f64> {
    recs.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect()
}

fn classification_grid_summary(n: usize, recs: &[Record]) -> GridSummary {
    let mut values = BTreeMap::new();
    values.insert("k_median".into(), median(&column(recs, |r| Some(r.k as f64))));
    let cols: [(&str, fn(&Record) -> Option<f64>); 6] = [
        ("excess_robust", |r| r.excess_robust),
        ("excess_standard", |r| r.excess_standard),
        ("excess_oracle", |r| r.excess_oracle),
        ("corrupted_excess_robust", |r| r.corrupted_excess_robust),
        ("corrupted_excess_standard", |r| r.corrupted_excess_standard),
        ("corrupted_excess_oracle", |r| r.corrupted_excess_oracle),
    ];
    for (name, get) in cols {
        let v = column(recs, get);
        values.insert(format!("mean_{name}"), mean(&v));
        values.insert(format!("median_{name}"), median(&v));
    }
    values.insert("median_p0_hat".into(), median(&column(recs, |r| r.p0_hat)));
    values.insert("median_p1_hat".into(), median(&column(recs, |r| r.p1_hat)));
    GridSummary { n, values }
}

/// Mean clean excess risk of the robust classifier across the n grid, its
/// log-log slope, and a replicate-by-replicate comparison with the
/// excess-risk bound.
pub fn run_rate_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let grid = &config.n_grid;
    if grid.len() < 4 {
        return Err(invalid("n_grid", "the rate experiment needs at least 4 sample sizes"));
    }
    let decades = (grid[grid.len() - 1] as f64 / grid[0] as f64).log10();
    if decades < 1.5 {
        log::warn!("rate experiment: n grid spans {decades:.2} decades; slope estimates are noisier below 1.5");
    }
    let dist = config.build_distribution()?;
    let records = run_replicates(config, |n, rep| classification_record(config, &dist, n, rep))?;

    let smooth = config.smoothness()?;
    let margin = config.margin()?;
    let mut s = summary(config, "rate");
    let mut means = Vec::new();
    let mut medians = Vec::new();
    let mut oracle_means = Vec::new();
    let mut standard_means = Vec::new();
    let mut over_bound = 0usize;
    for (&n, recs) in grid.iter().zip(&records) {
        let mut g = classification_grid_summary(n, recs);
        let mut worst_ratio: f64 = 0.0;
        for r in recs {
            let p = BoundParams::new(n, r.k, config.delta, smooth.lambda, smooth.omega)
                .with_margin(margin.alpha, margin.c_alpha)
                .with_rates(config.rates);
            let b = bounds::risk_bound(&p)?;
            let e = r.excess_robust.unwrap();
            worst_ratio = worst_ratio.max(e / b);
            over_bound += (e > b) as usize;
        }
        let k = recs[0].k;
        g.values.insert(
            "risk_bound".into(),
            bounds::risk_bound(
                &BoundParams::new(n, k, config.delta, smooth.lambda, smooth.omega)
                    .with_margin(margin.alpha, margin.c_alpha)
                    .with_rates(config.rates),
            )?,
        );
        g.values.insert("max_excess_to_bound_ratio".into(), worst_ratio);
        means.push(g.values["mean_excess_robust"]);
        medians.push(g.values["median_excess_robust"]);
        oracle_means.push(g.values["mean_excess_oracle"]);
        standard_means.push(g.values["mean_excess_standard"]);
        s.per_n.push(g);
    }
    let ns: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&ns, &means);
    let theory = -smooth.lambda * (margin.alpha + 1.0) / (2.0 * smooth.lambda + 1.0);
    s.metrics.insert("slope_robust".into(), slope);
    s.metrics.insert("slope_oracle".into(), log_log_slope(&ns, &oracle_means));
    s.metrics.insert("slope_standard".into(), log_log_slope(&ns, &standard_means));
    s.metrics.insert("slope_theory".into(), theory);
    let [lo, hi] = config.slope_window;
    s.checks.push(Check::at_least("rate_slope_lower", slope, lo));
    s.checks.push(Check::at_most("rate_slope_upper", slope, hi));
    s.checks.push(Check::at_most("replicates_over_risk_bound", over_bound as f64, 0.0));
    s.checks.push(Check::holds("robust_median_non_increasing", non_increasing_with_inversions(&medians, 1)));
    Ok(ExperimentResult { records: records.into_iter().flatten().collect(), summary: s })
}

/// Standard against robust kNN trained on corrupted labels and scored on
/// the clean distribution, with the disagreement-set floor on clean plus
/// corrupted excess risk.
pub fn run_inconsistency_demo(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let dist = config.build_distribution()?;
    let exact = dist
        .exact()
        .ok_or_else(|| invalid("distribution", "the inconsistency demo needs an exact distribution"))?
        .clone();
    let records = run_replicates(config, |n, rep| classification_record(config, &dist, n, rep))?;

    let rates = config.rates;
    let a_theta = exact.disagreement_set(rates, config.theta)?;
    let a_zero = exact.disagreement_set(rates, 0.0)?;
    let floor = config.theta * a_theta.measure;
    let corrupted_bayes =
        excess_risk_against(&exact.regression, |x| (exact.corrupted_eta(x, rates) >= 0.5) as u8, config.quad_tol);

    let mut s = summary(config, "inconsistency");
    s.metrics.insert("theta".into(), config.theta);
    s.metrics.insert("mu_a_theta".into(), a_theta.measure);
    s.metrics.insert("mu_a_zero".into(), a_zero.measure);
    s.metrics.insert("disagreement_floor".into(), floor);
    s.metrics.insert("corrupted_bayes_excess".into(), corrupted_bayes);
    let mut gap = true;
    let mut min_sum = f64::INFINITY;
    let mut robust_medians = Vec::new();
    for (&n, recs) in config.n_grid.iter().zip(&records) {
        let g = classification_grid_summary(n, recs);
        gap &= g.values["mean_excess_standard"] > g.values["mean_excess_robust"];
        robust_medians.push(g.values["median_excess_robust"]);
        for r in recs {
            for sum in [
                r.excess_robust.unwrap() + r.corrupted_excess_robust.unwrap(),
                r.excess_standard.unwrap() + r.corrupted_excess_standard.unwrap(),
                r.excess_oracle.unwrap() + r.corrupted_excess_oracle.unwrap(),
            ] {
                min_sum = min_sum.min(sum);
            }
        }
        s.per_n.push(g);
    }
    let last = s.per_n.last().expect("grid is non-empty");
    let (std_last, rob_last) = (last.values["mean_excess_standard"], last.values["mean_excess_robust"]);
    s.metrics.insert("min_clean_plus_corrupted_excess".into(), min_sum);
    s.checks.push(Check::at_least("standard_excess_largest_n", std_last, corrupted_bayes - 0.01));
    s.checks.push(Check::at_most("robust_excess_largest_n", rob_last, ROBUST_EXCESS_TOLERANCE));
    s.checks.push(Check::holds("gap_persists", gap));
    s.checks.push(Check::at_least("disagreement_floor", min_sum, floor));
    s.checks.push(Check::holds("robust_median_non_increasing", non_increasing_with_inversions(&robust_medians, 1)));
    Ok(ExperimentResult { records: records.into_iter().flatten().collect(), summary: s })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * x.powf(-0.4)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.4).abs() < 1e-12);
        assert!(log_log_slope(&xs, &[1.0, 0.0, 1.0]).is_nan());
    }

    #[test]
    fn medians_and_inversions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(non_increasing_with_inversions(&[3.0, 2.0, 2.5, 1.0], 1));
        assert!(!non_increasing_with_inversions(&[3.0, 3.5, 2.0, 2.5], 1));
    }

    #[test]
    fn slack_formula() {
        assert!((mc_slack(0.05, 2000) - 0.014_620_19).abs() < 1e-7);
    }

    #[test]
    fn small_ball_run_is_deterministic() {
        let a = run_ball_measure_experiment(200, 10, 0.2, 50, 3, 1).unwrap();
        let b = run_ball_measure_experiment(200, 10, 0.2, 50, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 50);
    }

    #[test]
    fn small_classification_runs() {
        let config = ExperimentConfig {
            n_grid: vec![200, 400, 1000, 7000],
            replicates: 3,
            workers: Some(1),
            ..ExperimentConfig::default()
        };
        let rate = run_rate_experiment(&config).unwrap();
        assert_eq!(rate.records.len(), 12);
        assert!(rate.summary.metrics["slope_robust"].is_finite());
        let demo = run_inconsistency_demo(&config).unwrap();
        assert!(demo.summary.check("disagreement_floor").unwrap().passed);
        let short = ExperimentConfig { n_grid: vec![200, 400, 800], ..config };
        assert!(run_rate_experiment(&short).is_err());
    }
}
