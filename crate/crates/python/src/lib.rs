//! Python module `fsorelay`: system description, closed-form and reference
//! metrics, Monte Carlo estimators and the Meijer-G evaluator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fsorelay_core::channels::{
    self, FsoLinkParams, InterferenceParams, PointingPreset, RfLinkParams,
};
use fsorelay_core::metrics::{self, Numerics};
use fsorelay_core::specfun::{self, ContourPolicy, MeijerGSpec};
use fsorelay_core::{mc, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "SystemConfig", module = "fsorelay", frozen, from_py_object)]
#[derive(Clone)]
pub struct PySystemConfig {
    inner: channels::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    /// Linear units throughout. Give `xi` or `pointing` ("strong"/"weak").
    #[new]
    #[pyo3(signature = (
        *, m_rf, num_users, avg_snr, alpha1, alpha2, beta1, beta2, omega1, omega2, r, mu_r,
        num_interferers, m1, omega_i1, gamma_th = 1.0, xi = None, pointing = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        m_rf: u32,
        num_users: u32,
        avg_snr: f64,
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
        omega1: f64,
        omega2: f64,
        r: u32,
        mu_r: f64,
        num_interferers: u32,
        m1: f64,
        omega_i1: f64,
        gamma_th: f64,
        xi: Option<f64>,
        pointing: Option<&str>,
    ) -> PyResult<Self> {
        let xi = match (xi, pointing) {
            (Some(x), None) => x,
            (None, Some("strong")) => PointingPreset::Strong.xi(),
            (None, Some("weak")) => PointingPreset::Weak.xi(),
            (None, Some(p)) => return Err(PyValueError::new_err(format!("unknown pointing {p:?}"))),
            _ => return Err(PyValueError::new_err("give exactly one of xi or pointing")),
        };
        let inner = channels::SystemConfig {
            rf: RfLinkParams { m_rf, avg_snr, num_users },
            fso: FsoLinkParams { alpha1, alpha2, beta1, beta2, omega1, omega2, xi, r, mu_r },
            intf: InterferenceParams { num_interferers, m1, omega_i1 },
            gamma_th,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: channels::SystemConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("plain data")
    }

    /// Copy with both average SNRs set to `db`.
    fn at_snr_db(&self, db: f64) -> Self {
        let mut inner = self.inner;
        let lin = 10f64.powf(db / 10.0);
        inner.rf.avg_snr = lin;
        inner.fso.mu_r = lin;
        Self { inner }
    }

    #[getter]
    fn avg_snr(&self) -> f64 {
        self.inner.rf.avg_snr
    }

    #[getter]
    fn mu_r(&self) -> f64 {
        self.inner.fso.mu_r
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.fso.xi
    }

    fn __repr__(&self) -> String {
        format!("SystemConfig({})", self.to_json())
    }
}

#[pyclass(name = "Evaluation", module = "fsorelay", frozen, get_all)]
pub struct PyEvaluation {
    value: f64,
    flags: Vec<String>,
}

#[pymethods]
impl PyEvaluation {
    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!("Evaluation(value={:e}, flags={:?})", self.value, self.flags)
    }
}

impl From<metrics::Evaluation> for PyEvaluation {
    fn from(e: metrics::Evaluation) -> Self {
        Self { value: e.value, flags: e.flags.iter().map(|f| f.to_string()).collect() }
    }
}

#[pyclass(name = "McEstimate", module = "fsorelay", frozen, get_all)]
pub struct PyMcEstimate {
    mean: f64,
    std_error: f64,
    n_samples: u64,
    seed: u64,
}

#[pymethods]
impl PyMcEstimate {
    fn __repr__(&self) -> String {
        format!(
            "McEstimate(mean={:e}, std_error={:e}, n_samples={}, seed={})",
            self.mean, self.std_error, self.n_samples, self.seed
        )
    }
}

impl From<mc::McEstimate> for PyMcEstimate {
    fn from(m: mc::McEstimate) -> Self {
        Self { mean: m.mean, std_error: m.std_error, n_samples: m.n_samples, seed: m.seed }
    }
}

fn numerics(delta: f64, max_denominator: u32) -> Numerics {
    Numerics { delta, max_denominator, ..Default::default() }
}

type Evaluator = fn(&channels::SystemConfig, &Numerics) -> fsorelay_core::Result<metrics::Evaluation>;

fn evaluate(py: Python<'_>, f: Evaluator, cfg: &PySystemConfig, num: Numerics) -> PyResult<PyEvaluation> {
    let sys = cfg.inner;
    py.detach(|| f(&sys, &num)).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, *, max_denominator = 25))]
fn outage_exact(py: Python<'_>, cfg: &PySystemConfig, max_denominator: u32) -> PyResult<PyEvaluation> {
    evaluate(py, metrics::outage_exact_with, cfg, numerics(1.0, max_denominator))
}

#[pyfunction]
#[pyo3(signature = (cfg, *, max_denominator = 25))]
fn outage_asymptotic(py: Python<'_>, cfg: &PySystemConfig, max_denominator: u32) -> PyResult<PyEvaluation> {
    evaluate(py, metrics::outage_asymptotic_with, cfg, numerics(1.0, max_denominator))
}

#[pyfunction]
#[pyo3(signature = (cfg, *, max_denominator = 25, rf_only = false))]
fn outage_quadrature(
    py: Python<'_>,
    cfg: &PySystemConfig,
    max_denominator: u32,
    rf_only: bool,
) -> PyResult<PyEvaluation> {
    let (sys, num) = (cfg.inner, numerics(1.0, max_denominator));
    py.detach(|| metrics::outage_quadrature_with(&sys, &num, rf_only))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, *, delta = 1.0, max_denominator = 25))]
fn asr_exact(py: Python<'_>, cfg: &PySystemConfig, delta: f64, max_denominator: u32) -> PyResult<PyEvaluation> {
    evaluate(py, metrics::asr_exact_with, cfg, numerics(delta, max_denominator))
}

#[pyfunction]
#[pyo3(signature = (cfg, *, delta = 1.0, max_denominator = 25))]
fn asr_asymptotic(
    py: Python<'_>,
    cfg: &PySystemConfig,
    delta: f64,
    max_denominator: u32,
) -> PyResult<PyEvaluation> {
    evaluate(py, metrics::asr_asymptotic_with, cfg, numerics(delta, max_denominator))
}

#[pyfunction]
#[pyo3(signature = (cfg, *, max_denominator = 25))]
fn asr_quadrature(py: Python<'_>, cfg: &PySystemConfig, max_denominator: u32) -> PyResult<PyEvaluation> {
    evaluate(py, metrics::asr_quadrature_with, cfg, numerics(1.0, max_denominator))
}

#[pyfunction]
#[pyo3(signature = (cfg, n, seed = 0))]
fn simulate_outage(py: Python<'_>, cfg: &PySystemConfig, n: u64, seed: u64) -> PyResult<PyMcEstimate> {
    let sys = cfg.inner;
    py.detach(|| mc::simulate_outage(&sys, n, seed)).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, n, seed = 0))]
fn simulate_asr(py: Python<'_>, cfg: &PySystemConfig, n: u64, seed: u64) -> PyResult<PyMcEstimate> {
    let sys = cfg.inner;
    py.detach(|| mc::simulate_asr(&sys, n, seed)).map(Into::into).map_err(to_py)
}

/// `G^{m,n}_{p,q}(x | a; b)` by contour integration.
#[pyfunction]
fn meijer_g(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, x: f64) -> PyResult<f64> {
    let spec = MeijerGSpec::new(m, n, a, b).map_err(to_py)?;
    specfun::meijer_g(&spec, x, &ContourPolicy::default()).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (gamma, cfg, *, max_denominator = 25))]
fn fso_cdf(gamma: f64, cfg: &PySystemConfig, max_denominator: u32) -> PyResult<f64> {
    let p = cfg.inner.fso;
    let d = channels::dgg_derive(&p, max_denominator).map_err(to_py)?;
    channels::fso_cdf(gamma, &d, &p).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (gamma, cfg, *, max_denominator = 25))]
fn fso_pdf(gamma: f64, cfg: &PySystemConfig, max_denominator: u32) -> PyResult<f64> {
    let p = cfg.inner.fso;
    let d = channels::dgg_derive(&p, max_denominator).map_err(to_py)?;
    channels::fso_pdf(gamma, &d, &p).map_err(to_py)
}

#[pyfunction]
fn rf_cdf_best(gamma: f64, cfg: &PySystemConfig) -> f64 {
    channels::rf_cdf_best(gamma, &cfg.inner.rf)
}

#[pymodule]
fn fsorelay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_function(wrap_pyfunction!(outage_exact, m)?)?;
    m.add_function(wrap_pyfunction!(outage_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(outage_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(asr_exact, m)?)?;
    m.add_function(wrap_pyfunction!(asr_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(asr_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_outage, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_asr, m)?)?;
    m.add_function(wrap_pyfunction!(meijer_g, m)?)?;
    m.add_function(wrap_pyfunction!(fso_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(fso_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(rf_cdf_best, m)?)?;
    Ok(())
}
