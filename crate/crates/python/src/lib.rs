//! Python bindings: scenario configuration, training sequences, the analytic
//! average and the Monte Carlo harness.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use retrowpt::analysis::QuadratureSpec;
use retrowpt::experiments::{baseline_with, default_sequence, MonteCarlo as RsMonteCarlo};
use retrowpt::{Error, ScenarioConfig, TrainingSequence};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Scenario parameters. Keyword arguments override the reference scenario.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut text = String::new();
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                text.push_str(&format!("{} = {}\n", k.str()?, v.str()?));
            }
        }
        ScenarioConfig::parse(&text).map(|inner| Scenario { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        ScenarioConfig::from_file(path).map(|inner| Scenario { inner }).map_err(to_py)
    }

    fn to_config_text(&self) -> String {
        self.inner.to_config_text()
    }

    #[getter]
    fn gamma1(&self) -> f64 {
        self.inner.gamma1()
    }

    #[getter]
    fn gamma2(&self) -> f64 {
        self.inner.gamma2()
    }

    #[getter]
    fn gamma3(&self) -> f64 {
        self.inner.gamma3()
    }

    #[getter]
    fn nc(&self) -> usize {
        self.inner.nc()
    }

    #[getter]
    fn tb(&self) -> f64 {
        self.inner.tb()
    }

    fn __repr__(&self) -> String {
        format!("Scenario({})", self.inner.to_config_text().trim().replace('\n', ", "))
    }
}

/// Result of an average-power computation (W).
#[pyclass(name = "PowerEstimate", skip_from_py_object)]
struct PyPowerEstimate {
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    std_error: Option<f64>,
    #[pyo3(get)]
    trials: usize,
    #[pyo3(get)]
    method: &'static str,
    #[pyo3(get)]
    fingerprint: String,
}

impl From<retrowpt::PowerEstimate> for PyPowerEstimate {
    fn from(e: retrowpt::PowerEstimate) -> Self {
        PyPowerEstimate {
            mean: e.mean,
            std_error: e.std_error,
            trials: e.trials,
            method: e.method.as_str(),
            fingerprint: e.fingerprint,
        }
    }
}

#[pymethods]
impl PyPowerEstimate {
    #[getter]
    fn mean_uw(&self) -> f64 {
        self.mean * 1e6
    }

    fn __repr__(&self) -> String {
        let se = self.std_error.map_or_else(|| "None".to_owned(), |s| format!("{s:e}"));
        format!(
            "PowerEstimate(method={}, mean={:e}, std_error={se}, trials={})",
            self.method, self.mean, self.trials
        )
    }
}

#[pyfunction]
fn path_loss(d: f64, scenario: &Scenario) -> PyResult<f64> {
    retrowpt::path_loss(d, &scenario.inner).map_err(to_py)
}

#[pyfunction]
fn bessel_k0(x: f64) -> PyResult<f64> {
    retrowpt::bessel_k0(x).map_err(to_py)
}

#[pyfunction]
fn z_density(z: f64, ns: usize) -> PyResult<f64> {
    retrowpt::z_density(z, ns).map_err(to_py)
}

/// Per-symbol `k` chips of +1 followed by `k` of -1.
#[pyfunction]
#[pyo3(signature = (ns, k = 1))]
fn minimal_sequence(ns: usize, k: usize) -> PyResult<Vec<i8>> {
    retrowpt::minimal_sequence(ns, k, 1.0).map(|s| s.chips().to_vec()).map_err(to_py)
}

/// Returns `(valid, unbalanced_symbols)` with 1-based symbol indices.
#[pyfunction]
fn validate_sequence(chips: Vec<i8>, ns: usize) -> PyResult<(bool, Vec<usize>)> {
    let seq = TrainingSequence::new(chips, ns, 1.0).map_err(to_py)?;
    let report = retrowpt::validate_design_criterion(&seq).map_err(to_py)?;
    Ok((report.valid, report.unbalanced_symbols()))
}

#[pyfunction]
fn asymptotic_q(scenario: &Scenario, g_abs2: f64, mu: f64) -> f64 {
    retrowpt::asymptotic_q(&scenario.inner, g_abs2, mu).q
}

#[pyfunction]
#[pyo3(signature = (scenario, rel_tol = 1e-8))]
fn average_q(py: Python<'_>, scenario: &Scenario, rel_tol: f64) -> PyResult<PyPowerEstimate> {
    let quad = QuadratureSpec { rel_tol, ..Default::default() };
    let cfg = scenario.inner;
    py.detach(|| retrowpt::average_q_quadrature(&cfg, &quad))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (scenario, trials = 10_000, seed = 1, training = true, threads = None))]
fn monte_carlo(
    py: Python<'_>,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    training: bool,
    threads: Option<usize>,
) -> PyResult<PyPowerEstimate> {
    let cfg = scenario.inner;
    let mc = RsMonteCarlo::new(trials, seed).threads(threads);
    py.detach(|| {
        if training {
            mc.run(&cfg, &default_sequence(&cfg)?)
        } else {
            baseline_with(&cfg, &mc)
        }
    })
    .map(Into::into)
    .map_err(to_py)
}

#[pymodule]
fn retrowpt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<PyPowerEstimate>()?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_k0, m)?)?;
    m.add_function(wrap_pyfunction!(z_density, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(validate_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_q, m)?)?;
    m.add_function(wrap_pyfunction!(average_q, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    Ok(())
}
