//! Python bindings for `noisyknn`.
//!
//! Points are passed as a list of coordinate rows, or as a flat list of
//! floats for one-dimensional data. Labels are lists of 0/1 integers.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use noisyknn::bounds::{self, BoundParams};
use noisyknn::data::LabeledDataset;
use noisyknn::harness::{self, ExperimentConfig};
use noisyknn::knn::{self as knn, ModelSummary};
use noisyknn::noise::corrupt_with;
use noisyknn::rng::{rng_from_seed, substream};
use noisyknn::{Error, Metric, PointSet, RegressionSample};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[derive(FromPyObject)]
enum Points {
    Rows(Vec<Vec<f64>>),
    Line(Vec<f64>),
}

impl Points {
    fn into_set(self) -> PyResult<PointSet> {
        match self {
            Points::Rows(rows) => PointSet::from_rows(&rows),
            Points::Line(xs) => PointSet::from_line(&xs),
        }
        .map_err(to_py)
    }
}

fn sample(points: Points, labels: Vec<u8>) -> PyResult<RegressionSample> {
    RegressionSample::from_labels(points.into_set()?, &labels).map_err(to_py)
}

fn label_list(labels: Vec<u8>) -> Vec<u32> {
    labels.into_iter().map(u32::from).collect()
}

fn rows(points: &PointSet) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.to_vec()).collect()
}

/// Class-conditional flip probabilities `(p0, p1)`.
#[pyclass(module = "noisyknn_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct NoiseRates {
    inner: knn::NoiseRates,
}

#[pymethods]
impl NoiseRates {
    #[new]
    fn new(p0: f64, p1: f64) -> PyResult<Self> {
        Ok(NoiseRates { inner: knn::NoiseRates::new(p0, p1).map_err(to_py)? })
    }

    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }

    #[getter]
    fn p1(&self) -> f64 {
        self.inner.p1
    }

    /// Decision threshold `0.5 + (p0 - p1) / 2`.
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    fn is_degenerate(&self) -> bool {
        self.inner.is_degenerate()
    }

    fn __repr__(&self) -> String {
        format!("NoiseRates(p0={}, p1={})", self.inner.p0, self.inner.p1)
    }
}

/// Exact k-nearest-neighbour index with Euclidean distance.
#[pyclass(module = "noisyknn_py", frozen)]
struct NeighborIndex {
    inner: noisyknn::Index,
}

#[pymethods]
impl NeighborIndex {
    #[new]
    #[pyo3(signature = (points, brute_force = false))]
    fn new(points: Points, brute_force: bool) -> PyResult<Self> {
        let set = points.into_set()?;
        let inner = if brute_force {
            noisyknn::Index::brute_force(set, Metric::Euclidean)
        } else {
            noisyknn::Index::build(set, Metric::Euclidean)
        };
        Ok(NeighborIndex { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `(indices, distances)` of the `k` nearest points, ties broken by index.
    fn query(&self, x: Vec<f64>, k: usize) -> PyResult<(Vec<usize>, Vec<f64>)> {
        let list = self.inner.knn_query(&x, k).map_err(to_py)?;
        Ok((list.indices.clone(), list.distances.clone()))
    }

    fn kth_distance(&self, x: Vec<f64>, k: usize) -> PyResult<f64> {
        self.inner.kth_neighbor_distance(&x, k).map_err(to_py)
    }
}

/// kNN regression of 0/1 labels.
#[pyclass(module = "noisyknn_py", frozen)]
struct KnnRegressor {
    inner: knn::KnnRegressor,
}

#[pymethods]
impl KnnRegressor {
    #[new]
    fn new(points: Points, labels: Vec<u8>, k: usize) -> PyResult<Self> {
        let inner = knn::KnnRegressor::fit(sample(points, labels)?, k, Metric::Euclidean).map_err(to_py)?;
        Ok(KnnRegressor { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(to_py)
    }

    fn predict_many(&self, points: Points) -> PyResult<Vec<f64>> {
        let set = points.into_set()?;
        set.iter().map(|x| self.inner.predict(x).map_err(to_py)).collect()
    }

    /// Regression estimate at every training point.
    fn fitted_values(&self, py: Python<'_>) -> Vec<f64> {
        py.detach(|| self.inner.fitted_values())
    }

    fn max_fitted(&self, py: Python<'_>) -> f64 {
        py.detach(|| self.inner.max_fitted())
    }

    fn min_fitted(&self, py: Python<'_>) -> f64 {
        py.detach(|| self.inner.min_fitted())
    }

    /// `(1 - max fitted, min fitted)`.
    fn noise_rate_estimates(&self, py: Python<'_>) -> NoiseRates {
        NoiseRates { inner: py.detach(|| self.inner.noise_rate_estimates()) }
    }
}

fn summary_dict<'py>(py: Python<'py>, s: &ModelSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("k", s.k)?;
    d.set_item("n", s.n)?;
    d.set_item("p0_hat", s.p0_hat)?;
    d.set_item("p1_hat", s.p1_hat)?;
    d.set_item("threshold", s.threshold)?;
    d.set_item("degenerate", s.degenerate)?;
    Ok(d)
}

/// kNN classifier on noisy labels with a noise-corrected threshold.
#[pyclass(module = "noisyknn_py", frozen)]
struct RobustKnnModel {
    inner: knn::RobustKnnModel,
}

#[pymethods]
impl RobustKnnModel {
    /// Fit and estimate the flip rates from the fitted extrema.
    #[new]
    fn new(py: Python<'_>, points: Points, labels: Vec<u8>, k: usize) -> PyResult<Self> {
        let s = sample(points, labels)?;
        let inner = py.detach(|| knn::RobustKnnModel::fit(s, k, Metric::Euclidean)).map_err(to_py)?;
        Ok(RobustKnnModel { inner })
    }

    /// Plain kNN with threshold 1/2.
    #[staticmethod]
    fn standard(points: Points, labels: Vec<u8>, k: usize) -> PyResult<Self> {
        let reg = knn::KnnRegressor::fit(sample(points, labels)?, k, Metric::Euclidean).map_err(to_py)?;
        Ok(RobustKnnModel { inner: knn::RobustKnnModel::standard(reg) })
    }

    /// Threshold from known flip rates.
    #[staticmethod]
    fn with_rates(points: Points, labels: Vec<u8>, k: usize, rates: PyRef<'_, NoiseRates>) -> PyResult<Self> {
        let reg = knn::KnnRegressor::fit(sample(points, labels)?, k, Metric::Euclidean).map_err(to_py)?;
        Ok(RobustKnnModel { inner: knn::RobustKnnModel::with_rates(reg, rates.inner) })
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }

    #[getter]
    fn rates(&self) -> NoiseRates {
        NoiseRates { inner: self.inner.rates() }
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(to_py)
    }

    fn classify(&self, x: Vec<f64>) -> PyResult<u8> {
        self.inner.classify(&x).map_err(to_py)
    }

    fn classify_many(&self, points: Points) -> PyResult<Vec<u32>> {
        let set = points.into_set()?;
        set.iter().map(|x| self.inner.classify(x).map(u32::from).map_err(to_py)).collect()
    }

    /// Estimate of the clean regression, clipped to [0, 1].
    fn corrected_regression(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.corrected_regression(&x).map_err(to_py)
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        summary_dict(py, &self.inner.summary())
    }
}

/// The three-piece one-dimensional example distribution, uniform on [0, 1].
#[pyclass(module = "noisyknn_py", frozen)]
struct ExampleDistribution {
    inner: noisyknn::SyntheticDistribution,
}

#[pymethods]
impl ExampleDistribution {
    #[new]
    #[pyo3(signature = (p0 = 0.1, p1 = 0.3))]
    fn new(p0: f64, p1: f64) -> PyResult<Self> {
        Ok(ExampleDistribution { inner: noisyknn::SyntheticDistribution::three_piece_example(p0, p1).map_err(to_py)? })
    }

    fn eta(&self, x: f64) -> f64 {
        self.inner.eta(x)
    }

    fn corrupted_eta(&self, x: f64, rates: PyRef<'_, NoiseRates>) -> f64 {
        self.inner.corrupted_eta(x, rates.inner)
    }

    /// `(x, labels, clean_labels)` for `n` points with labels flipped at `rates`.
    #[pyo3(signature = (n, seed, rates = None))]
    fn sample(
        &self,
        n: usize,
        seed: u64,
        rates: Option<PyRef<'_, NoiseRates>>,
    ) -> PyResult<(Vec<f64>, Vec<u32>, Vec<u32>)> {
        let rates = rates.map(|r| r.inner).unwrap_or_else(knn::NoiseRates::noiseless);
        let dist = noisyknn::synthetic::Distribution::Exact(self.inner.clone());
        let data = harness::corrupted_sample(&dist, rates, n, seed).map_err(to_py)?;
        let clean = data.clean_labels.clone().unwrap_or_else(|| data.labels.clone());
        Ok((data.points.coords().to_vec(), label_list(data.labels), label_list(clean)))
    }

    fn bayes_classify(&self, x: f64) -> u8 {
        self.inner.bayes_classify(x)
    }

    /// Exact excess risk of a model fitted on one-dimensional data.
    fn excess_risk(&self, py: Python<'_>, model: PyRef<'_, RobustKnnModel>) -> PyResult<f64> {
        let m = &model.inner;
        match py.detach(|| m.regressor().line_partition()) {
            Some(step) => Ok(self.inner.excess_risk_of_step(&step, m.threshold())),
            None => Err(PyValueError::new_err("exact excess risk needs a one-dimensional Euclidean model")),
        }
    }

    /// Measure of the set where the corrupted and clean regressions straddle
    /// 1/2 by more than `theta`.
    fn disagreement_measure(&self, rates: PyRef<'_, NoiseRates>, theta: f64) -> PyResult<f64> {
        Ok(self.inner.disagreement_set(rates.inner, theta).map_err(to_py)?.measure)
    }
}

#[pyfunction]
fn estimate_noise_rates(py: Python<'_>, points: Points, labels: Vec<u8>, k: usize) -> PyResult<NoiseRates> {
    let s = sample(points, labels)?;
    let inner = py.detach(|| knn::estimate_noise_rates(s, k, Metric::Euclidean)).map_err(to_py)?;
    Ok(NoiseRates { inner })
}

/// Flip each label independently: a label `y` flips with probability `p_y`.
#[pyfunction]
fn corrupt_labels(labels: Vec<u8>, rates: PyRef<'_, NoiseRates>, seed: u64) -> PyResult<Vec<u32>> {
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(PyValueError::new_err(format!("label at index {i} is not 0 or 1")));
    }
    Ok(label_list(corrupt_with(&labels, rates.inner, &mut rng_from_seed(substream(seed, 1)))))
}

#[pyfunction]
#[pyo3(signature = (n, delta = 0.1, lam = 1.0, omega = 3.0))]
fn optimal_k(n: usize, delta: f64, lam: f64, omega: f64) -> PyResult<usize> {
    bounds::optimal_k(n, delta, lam, omega).map_err(to_py)
}

/// All bounds for one parameter set, as a dict.
#[pyfunction]
#[pyo3(signature = (n, k, delta = 0.1, lam = 1.0, omega = 3.0, alpha = 0.0, c_alpha = 1.0, p0 = 0.0, p1 = 0.0, zeta = 0.2))]
#[allow(clippy::too_many_arguments)]
fn bound_table<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    delta: f64,
    lam: f64,
    omega: f64,
    alpha: f64,
    c_alpha: f64,
    p0: f64,
    p1: f64,
    zeta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = BoundParams { n, k, delta, lambda: lam, omega, alpha, c_alpha, p0, p1 };
    p.validate().map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("pointwise", bounds::pointwise_bound(&p).map_err(to_py)?)?;
    d.set_item("max", bounds::max_bound(&p).map_err(to_py)?)?;
    d.set_item("xi_error_term", bounds::xi_error_term(n, k, delta, lam, omega).map_err(to_py)?)?;
    d.set_item("xi_closed_form", bounds::xi_closed_form(n, delta, lam, omega).map_err(to_py)?)?;
    d.set_item("risk", bounds::risk_bound(&p).map_err(to_py)?)?;
    d.set_item("ball_tail", bounds::ball_measure_tail(k, zeta).map_err(to_py)?)?;
    d.set_item("ball_tail_data_centre", bounds::ball_measure_tail_data_centre(k, zeta).map_err(to_py)?)?;
    Ok(d)
}

/// Run a Monte Carlo experiment from a JSON config and return its summary
/// as a dict. `kind` is one of ball, pointwise, max, rate, inconsistency.
#[pyfunction]
#[pyo3(signature = (kind, config_json = "{}", output = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    kind: &str,
    config_json: &str,
    output: Option<std::path::PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    if output.is_some() {
        config.output = output;
    }
    let run = match kind {
        "ball" => harness::run_ball_experiment,
        "pointwise" => harness::run_pointwise_experiment,
        "max" => harness::run_max_experiment,
        "rate" => harness::run_rate_experiment,
        "inconsistency" => harness::run_inconsistency_demo,
        other => return Err(PyValueError::new_err(format!("unknown experiment `{other}`"))),
    };
    let result = py.detach(|| run(&config)).map_err(to_py)?;
    if let Some(path) = &config.output {
        result.save(path).map_err(to_py)?;
    }
    let text = result.summary_json().map_err(to_py)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Write `(points, labels[, clean_labels])` as a dataset CSV.
#[pyfunction]
#[pyo3(signature = (path, points, labels, clean_labels = None))]
fn save_dataset(path: std::path::PathBuf, points: Points, labels: Vec<u8>, clean_labels: Option<Vec<u8>>) -> PyResult<()> {
    let mut data = LabeledDataset::new(points.into_set()?, labels).map_err(to_py)?;
    if let Some(c) = clean_labels {
        data = data.with_clean_labels(c).map_err(to_py)?;
    }
    data.save(&path).map_err(to_py)
}

/// Read a dataset CSV into `(points, labels, clean_labels or None)`.
#[pyfunction]
fn load_dataset(path: std::path::PathBuf) -> PyResult<(Vec<Vec<f64>>, Vec<u32>, Option<Vec<u32>>)> {
    let data = LabeledDataset::load(&path).map_err(to_py)?;
    Ok((rows(&data.points), label_list(data.labels), data.clean_labels.map(label_list)))
}

#[pymodule]
pub fn noisyknn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NoiseRates>()?;
    m.add_class::<NeighborIndex>()?;
    m.add_class::<KnnRegressor>()?;
    m.add_class::<RobustKnnModel>()?;
    m.add_class::<ExampleDistribution>()?;
    m.add_function(wrap_pyfunction!(estimate_noise_rates, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt_labels, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_k, m)?)?;
    m.add_function(wrap_pyfunction!(bound_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(save_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    Ok(())
}
