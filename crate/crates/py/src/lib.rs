//! Python bindings for the qi-lab simulator.
//!
//! ```python
//! import qi_lab
//! s = qi_lab.Scenario(kappa=0.01, n_s=0.01, n_b=30.0, k_modes=1e7)
//! qi_lab.closed_form_snr("dhd", s)
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qi_lab_core::boundary::{find_boundaries, BoundaryQuery, Contender, Variable};
use qi_lab_core::receiver::{engine_snr as core_engine_snr, evaluate as core_evaluate};
use qi_lab_core::sweep::{run_sweep, SweepSpec};
use qi_lab_core::validate::{run_validation, Suite, ValidateOptions};
use qi_lab_core::{self as core, ChernoffCache, Hypothesis, QiError, QiScenario, Receiver};

fn py_err(e: QiError) -> PyErr {
    match e {
        QiError::Domain(_) | QiError::Spec(_) | QiError::Unsupported(_) | QiError::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_receiver(name: &str) -> PyResult<Receiver> {
    name.parse().map_err(py_err)
}

fn parse_hypothesis(name: &str) -> PyResult<Hypothesis> {
    match name.trim().to_ascii_uppercase().as_str() {
        "H0" => Ok(Hypothesis::H0),
        "H1" => Ok(Hypothesis::H1),
        other => Err(PyValueError::new_err(format!("hypothesis must be 'H0' or 'H1', got '{other}'"))),
    }
}

/// One point of the parameter space.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: QiScenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (kappa, n_s, n_b, k_modes = 1e7, opa_gain = None, pc_mu = None, pc_nu = None))]
    fn new(
        kappa: f64,
        n_s: f64,
        n_b: f64,
        k_modes: f64,
        opa_gain: Option<f64>,
        pc_mu: Option<f64>,
        pc_nu: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = QiScenario::new(kappa, n_s, n_b, k_modes);
        if let Some(g) = opa_gain {
            inner.opa_gain = g;
        }
        if let Some(m) = pc_mu {
            inner.pc_mu = m;
        }
        if let Some(n) = pc_nu {
            inner.pc_nu = n;
        }
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn n_s(&self) -> f64 {
        self.inner.n_s
    }
    #[getter]
    fn n_b(&self) -> f64 {
        self.inner.n_b
    }
    #[getter]
    fn k_modes(&self) -> f64 {
        self.inner.k_modes
    }
    #[getter]
    fn opa_gain(&self) -> f64 {
        self.inner.opa_gain
    }
    #[getter]
    fn pc_mu(&self) -> f64 {
        self.inner.pc_mu
    }
    #[getter]
    fn pc_nu(&self) -> f64 {
        self.inner.pc_nu
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(kappa={}, n_s={}, n_b={}, k_modes={}, opa_gain={}, pc_mu={}, pc_nu={})",
            s.kappa, s.n_s, s.n_b, s.k_modes, s.opa_gain, s.pc_mu, s.pc_nu
        )
    }
}

/// Zero-mean (or displaced) Gaussian state in the vacuum-identity convention.
#[pyclass(name = "GaussianState")]
struct PyGaussianState {
    inner: core::GaussianState,
}

#[pymethods]
impl PyGaussianState {
    #[new]
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = cov.len();
        if cov.iter().any(|row| row.len() != n) {
            return Err(PyValueError::new_err("cov must be square"));
        }
        let flat: Vec<f64> = cov.into_iter().flatten().collect();
        let cov = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        core::GaussianState::new(nalgebra::DVector::from_vec(mean), cov)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn num_modes(&self) -> usize {
        self.inner.num_modes()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean().iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        let c = self.inner.cov();
        c.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn symplectic_eigenvalues(&self) -> PyResult<Vec<f64>> {
        self.inner.symplectic_eigenvalues().map_err(py_err)
    }

    fn is_physical(&self) -> bool {
        self.inner.is_physical()
    }

    fn determinant(&self) -> f64 {
        self.inner.determinant()
    }

    fn tensor(&self, other: PyRef<'_, PyGaussianState>) -> Self {
        Self { inner: self.inner.tensor(&other.inner) }
    }

    fn reduce(&self, modes: Vec<usize>) -> PyResult<Self> {
        self.inner.reduce(&modes).map(|inner| Self { inner }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("GaussianState(num_modes={})", self.inner.num_modes())
    }
}

fn wrap(state: qi_lab_core::Result<core::GaussianState>) -> PyResult<PyGaussianState> {
    state.map(|inner| PyGaussianState { inner }).map_err(py_err)
}

#[pyfunction]
fn make_tmsv(n_s: f64) -> PyResult<PyGaussianState> {
    wrap(core::make_tmsv(n_s))
}

#[pyfunction]
fn make_thermal(n_b: f64) -> PyResult<PyGaussianState> {
    wrap(core::make_thermal(n_b))
}

#[pyfunction]
#[pyo3(signature = (alpha_re, alpha_im = 0.0))]
fn make_coherent(alpha_re: f64, alpha_im: f64) -> PyGaussianState {
    PyGaussianState { inner: core::make_coherent(alpha_re, alpha_im) }
}

#[pyfunction]
fn apply_beam_splitter(state: PyRef<'_, PyGaussianState>, mode_i: usize, mode_j: usize, t: f64) -> PyResult<PyGaussianState> {
    wrap(core::apply_beam_splitter(&state.inner, mode_i, mode_j, t))
}

/// Return/idler state after the target channel; `hypothesis` is "H0" or "H1".
#[pyfunction]
fn qi_channel(n_s: f64, n_b: f64, kappa: f64, hypothesis: &str) -> PyResult<PyGaussianState> {
    wrap(core::qi_channel(n_s, n_b, kappa, parse_hypothesis(hypothesis)?))
}

#[pyfunction]
fn closed_form_snr(receiver: &str, scenario: PyRef<'_, PyScenario>) -> PyResult<f64> {
    core::closed_form_snr(parse_receiver(receiver)?, &scenario.inner).map_err(py_err)
}

/// SNR from the moment engine applied to the receiver operator.
#[pyfunction]
fn engine_snr(receiver: &str, scenario: PyRef<'_, PyScenario>) -> PyResult<f64> {
    core_engine_snr(parse_receiver(receiver)?, &scenario.inner).map_err(py_err)
}

/// Full single-point report as a dict; absent fields are `None`.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, receiver: &str, scenario: PyRef<'_, PyScenario>) -> PyResult<Bound<'py, PyDict>> {
    let r = core_evaluate(parse_receiver(receiver)?, &scenario.inner).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("receiver", r.receiver.label())?;
    d.set_item("r0", r.r0)?;
    d.set_item("r1", r.r1)?;
    d.set_item("dr0", r.dr0)?;
    d.set_item("dr1", r.dr1)?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("p_false_alarm", r.p_false_alarm)?;
    d.set_item("p_miss", r.p_miss)?;
    d.set_item("p_error", r.p_error)?;
    d.set_item("log_p_error", r.log_p_error)?;
    d.set_item("snr", r.snr)?;
    d.set_item("snr_db", r.snr_db)?;
    d.set_item("snr_formula", r.snr_formula)?;
    Ok(d)
}

/// Decision statistics for K mode pairs: threshold, error probabilities, SNR.
#[pyfunction]
fn detection<'py>(py: Python<'py>, r0: f64, dr0: f64, r1: f64, dr1: f64, k_modes: f64) -> PyResult<Bound<'py, PyDict>> {
    let stats = core::DetectionStats::new(r0, dr0, r1, dr1, k_modes).map_err(py_err)?;
    let threshold = core::optimal_threshold(&stats).map_err(py_err)?;
    let p = core::error_probabilities(&stats, threshold).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("threshold", threshold)?;
    d.set_item("p_false_alarm", p.false_alarm)?;
    d.set_item("p_miss", p.miss)?;
    d.set_item("p_error", p.total)?;
    d.set_item("log_p_error", p.log_total)?;
    d.set_item("snr", core::snr(&stats).map_err(py_err)?)?;
    Ok(d)
}

/// Quantum Chernoff exponent of the coherent-state benchmark.
#[pyfunction]
#[pyo3(signature = (n_s, n_b, kappa, k_modes = 1.0))]
fn ci_chernoff<'py>(py: Python<'py>, n_s: f64, n_b: f64, kappa: f64, k_modes: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = core::ci_chernoff(n_s, n_b, kappa, k_modes).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("q_value", r.q_value)?;
    d.set_item("s_star", r.s_star)?;
    d.set_item("snr_ci", r.snr_ci)?;
    d.set_item("dim", r.dim)?;
    d.set_item("deficit_h0", r.deficit_h0)?;
    d.set_item("deficit_h1", r.deficit_h1)?;
    Ok(d)
}

#[pyfunction]
fn erfc(x: f64) -> PyResult<f64> {
    core::erfc(x).map_err(py_err)
}

#[pyfunction]
fn log_erfc(x: f64) -> PyResult<f64> {
    core::log_erfc(x).map_err(py_err)
}

/// Runs a sweep file (`key = value` lines) and returns the region CSV.
#[pyfunction]
fn scan_csv(py: Python<'_>, spec: &str) -> PyResult<String> {
    let spec = SweepSpec::parse(spec).map_err(py_err)?;
    py.detach(|| run_sweep(&spec, &ChernoffCache::new()).map(|m| m.to_csv()))
        .map_err(py_err)
}

/// Values of the swept parameter where `a` and `b` reach equal SNR.
#[pyfunction]
#[pyo3(signature = (a, b, scenario, axis = "kappa"))]
fn boundary(py: Python<'_>, a: &str, b: &str, scenario: PyRef<'_, PyScenario>, axis: &str) -> PyResult<Vec<f64>> {
    let a: Contender = a.parse().map_err(py_err)?;
    let b: Contender = b.parse().map_err(py_err)?;
    let variable: Variable = axis.parse().map_err(py_err)?;
    let query = BoundaryQuery::new(a, b, scenario.inner, variable);
    let report = py.detach(|| find_boundaries(&query, &ChernoffCache::new())).map_err(py_err)?;
    Ok(report.crossings.iter().map(|c| c.value).collect())
}

/// Runs the named self-check suites (all by default); returns whether they passed.
#[pyfunction]
#[pyo3(signature = (suites = None))]
fn validate(py: Python<'_>, suites: Option<Vec<String>>) -> PyResult<bool> {
    let mut opts = ValidateOptions::default();
    if let Some(names) = suites {
        opts.suites = names.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>().map_err(py_err)?;
    }
    Ok(py.detach(|| run_validation(&opts)).passed)
}

#[pymodule]
fn qi_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyGaussianState>()?;
    m.add_function(wrap_pyfunction!(make_tmsv, m)?)?;
    m.add_function(wrap_pyfunction!(make_thermal, m)?)?;
    m.add_function(wrap_pyfunction!(make_coherent, m)?)?;
    m.add_function(wrap_pyfunction!(apply_beam_splitter, m)?)?;
    m.add_function(wrap_pyfunction!(qi_channel, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_snr, m)?)?;
    m.add_function(wrap_pyfunction!(engine_snr, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(detection, m)?)?;
    m.add_function(wrap_pyfunction!(ci_chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(erfc, m)?)?;
    m.add_function(wrap_pyfunction!(log_erfc, m)?)?;
    m.add_function(wrap_pyfunction!(scan_csv, m)?)?;
    m.add_function(wrap_pyfunction!(boundary, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
