use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    use noisyknn_py::noisyknn_py as module;
    pyo3::append_to_inittab!(module);
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("nk", py.import("noisyknn_py").unwrap()).unwrap();
        f(py, &globals);
    });
}

fn eval<'py>(py: Python<'py>, globals: &Bound<'py, PyDict>, code: &str) -> Bound<'py, PyAny> {
    let code = std::ffi::CString::new(code).unwrap();
    py.eval(&code, Some(globals), None).unwrap()
}

#[test]
fn python_api_round_trip() {
    with_module(|py, g| {
        let t: f64 = eval(py, g, "nk.NoiseRates(0.1, 0.3).threshold()").extract().unwrap();
        assert!((t - 0.4).abs() < 1e-15);

        let code = "(lambda d: (lambda s: nk.RobustKnnModel(s[0], s[1], 200).summary())\
                    (d.sample(3000, 5, nk.NoiseRates(0.1, 0.3))))(nk.ExampleDistribution())";
        let summary = eval(py, g, code);
        let k: usize = summary.get_item("k").unwrap().extract().unwrap();
        let p0: f64 = summary.get_item("p0_hat").unwrap().extract().unwrap();
        let thr: f64 = summary.get_item("threshold").unwrap().extract().unwrap();
        let p1: f64 = summary.get_item("p1_hat").unwrap().extract().unwrap();
        assert_eq!(k, 200);
        assert_eq!(thr, 0.5 + (p0 - p1) / 2.0);

        let labels: Vec<u32> = eval(py, g, "nk.corrupt_labels([1, 0, 1], nk.NoiseRates(0.0, 0.0), 3)")
            .extract()
            .unwrap();
        assert_eq!(labels, vec![1, 0, 1]);

        let err = py
            .eval(&std::ffi::CString::new("nk.KnnRegressor([0.1, 0.2], [0, 1], 5)").unwrap(), Some(g), None)
            .unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}
