//! Python bindings: `import kramers`.

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kramers_core::analysis::{rate_fit as core_rate_fit, sup_error};
use kramers_core::dynamics::{
    drift, reconstruction_defect, run_split, simulate_det_wave, simulate_full, simulate_heat, ModelParams, Sampling,
    Trajectory,
};
use kramers_core::harness::{parse_config, run_experiment as core_run, run_oracle_suite, summary_json};
use kramers_core::noise::{replica_seed as core_replica_seed, CovarianceSpectrum};
use kramers_core::spectral::{Nonlinearity, SpectralBasis, SpectralField};
use kramers_core::Error;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    let mut root = &e;
    while let Error::Context { source, .. } = root {
        root = source;
    }
    match root {
        Error::BlowUp { .. } => PyArithmeticError::new_err(msg),
        Error::Io { .. } => PyIOError::new_err(msg),
        Error::Fit(_) | Error::MissingData(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn field(coeffs: Vec<f64>) -> SpectralField {
    SpectralField::from_coeffs(coeffs)
}

/// `None` or `"cubic"` is `s - s^3`, `"zero"` is `0`, a list is `c0 + c1 s + ...`.
fn nonlinearity(spec: Option<&Bound<'_, PyAny>>) -> PyResult<Nonlinearity> {
    let Some(spec) = spec else {
        return Ok(Nonlinearity::CubicDefault);
    };
    if let Ok(name) = spec.extract::<String>() {
        return match name.as_str() {
            "cubic" | "cubic_default" => Ok(Nonlinearity::CubicDefault),
            "zero" => Ok(Nonlinearity::Zero),
            other => Err(PyValueError::new_err(format!("unknown nonlinearity {other:?}"))),
        };
    }
    let coeffs: Vec<f64> = spec.extract()?;
    Nonlinearity::polynomial(&coeffs).map_err(py_err)
}

/// Sine basis `sqrt(2/L) sin(k pi x / L)`, `k = 1..modes`.
#[pyclass(name = "Basis", module = "kramers", frozen)]
#[derive(Clone)]
struct PyBasis {
    inner: SpectralBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    #[pyo3(signature = (length = 1.0, modes = 32))]
    fn new(length: f64, modes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SpectralBasis::new(length, modes).map_err(py_err)?,
        })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// Interior grid nodes used by the transforms.
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    fn to_physical(&self, coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.to_physical(&field(coeffs)).map_err(py_err)
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_physical(&self, samples: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.from_physical(&samples).map_err(py_err)?.coeffs)
    }

    #[pyo3(signature = (coeffs, s = 0.0))]
    fn sobolev_norm(&self, coeffs: Vec<f64>, s: f64) -> PyResult<f64> {
        let u = field(coeffs);
        self.inner.check(&u).map_err(py_err)?;
        Ok(self.inner.sobolev_norm(&u, s))
    }

    #[pyo3(signature = (coeffs, f = None))]
    fn apply_nonlinearity(&self, coeffs: Vec<f64>, f: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<f64>> {
        let f = nonlinearity(f)?;
        Ok(self
            .inner
            .apply_nonlinearity(&f, &field(coeffs))
            .map_err(py_err)?
            .coeffs)
    }

    fn laplacian(&self, coeffs: Vec<f64>) -> Vec<f64> {
        self.inner.laplacian(&field(coeffs)).coeffs
    }

    fn __repr__(&self) -> String {
        format!("Basis(length={}, modes={})", self.inner.length(), self.inner.modes())
    }
}

/// One sampled Q-Wiener path on a uniform grid.
#[pyclass(name = "NoisePath", module = "kramers", frozen)]
struct PyNoisePath {
    inner: kramers_core::noise::NoisePath,
}

#[pymethods]
impl PyNoisePath {
    /// `spectrum` is the list of `b_k`; pass `default_spectrum(n)` for `k^-4`.
    #[new]
    #[pyo3(signature = (spectrum, horizon, steps, seed))]
    fn new(spectrum: Vec<f64>, horizon: f64, steps: usize, seed: u64) -> PyResult<Self> {
        let q = CovarianceSpectrum::new(spectrum).map_err(py_err)?;
        Ok(Self {
            inner: kramers_core::noise::NoisePath::sample(&q, horizon, steps, seed).map_err(py_err)?,
        })
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn increment(&self, k: usize, j: usize) -> PyResult<f64> {
        self.bounds(k, j, self.inner.steps() - 1)?;
        Ok(self.inner.increment(k, j))
    }

    /// `W_k(t_j)`.
    fn value(&self, k: usize, j: usize) -> PyResult<f64> {
        self.bounds(k, j, self.inner.steps())?;
        Ok(self.inner.value(k, j))
    }

    fn terminal(&self) -> Vec<f64> {
        self.inner.terminal().coeffs
    }

    fn coarsen(&self, factor: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.coarsen(factor).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "NoisePath(modes={}, steps={}, horizon={}, seed={})",
            self.inner.modes(),
            self.inner.steps(),
            self.inner.horizon(),
            self.inner.seed()
        )
    }
}

impl PyNoisePath {
    fn bounds(&self, k: usize, j: usize, last: usize) -> PyResult<()> {
        if k >= self.inner.modes() || j > last {
            return Err(PyValueError::new_err(format!("index ({k}, {j}) out of range")));
        }
        Ok(())
    }
}

#[pyfunction]
fn default_spectrum(modes: usize) -> Vec<f64> {
    CovarianceSpectrum::default_for(modes).values().to_vec()
}

#[pyfunction]
fn replica_seed(base: u64, index: u64) -> u64 {
    core_replica_seed(base, index)
}

fn coeff_rows(rows: &[SpectralField]) -> Vec<Vec<f64>> {
    rows.iter().map(|f| f.coeffs.clone()).collect()
}

fn trajectory_dict<'py>(py: Python<'py>, traj: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", traj.times.clone())?;
    d.set_item("u", coeff_rows(&traj.u))?;
    if let Some(v) = &traj.v {
        d.set_item("v", coeff_rows(v))?;
    }
    if let Some(split) = &traj.split {
        d.set_item(
            "v1bar",
            split.iter().map(|s| s.v1bar.coeffs.clone()).collect::<Vec<_>>(),
        )?;
        d.set_item(
            "v2bar",
            split.iter().map(|s| s.v2bar.coeffs.clone()).collect::<Vec<_>>(),
        )?;
        d.set_item(
            "v3bar",
            split.iter().map(|s| s.v3bar.coeffs.clone()).collect::<Vec<_>>(),
        )?;
    }
    if let Some(us) = &traj.u_split {
        d.set_item("u_split", coeff_rows(us))?;
    }
    Ok(d)
}

/// Runs one model on `noise`.
///
/// `model` is `"full"`, `"heat"`, `"det_wave"` or `"split"`. `u1 = None`
/// uses the well-prepared velocity `-A u0 + f(u0)`. Samples every `stride`
/// steps. The result is a dict of per-sample lists, including
/// `reconstruction_defect` for `"split"`.
#[pyfunction]
#[pyo3(signature = (model, basis, noise, nu, alpha, u0, u1 = None, f = None, stride = 1))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    model: &str,
    basis: &PyBasis,
    noise: &PyNoisePath,
    nu: f64,
    alpha: f64,
    u0: Vec<f64>,
    u1: Option<Vec<f64>>,
    f: Option<&Bound<'_, PyAny>>,
    stride: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let n = &noise.inner;
    let q = CovarianceSpectrum::new(n.spectrum().to_vec()).map_err(py_err)?;
    let params = ModelParams::new(
        nu,
        alpha,
        n.horizon(),
        n.steps(),
        basis.inner.clone(),
        nonlinearity(f)?,
        q,
    )
    .map_err(py_err)?;
    let u0 = field(u0);
    let u1 = match u1 {
        Some(c) => field(c),
        None => drift(&params, &u0).map_err(py_err)?,
    };
    let sampling = Sampling::every(stride, params.steps);
    let traj = py
        .detach(|| match model {
            "full" => simulate_full(&params, n, &u0, &u1, &sampling),
            "heat" => simulate_heat(&params, n, &u0, &sampling),
            "det_wave" => simulate_det_wave(&params, &u0, &u1, &sampling),
            "split" => run_split(&params, n, &u0, &u1, &sampling),
            other => Err(Error::config(format!(
                "unknown model {other:?} (full, heat, det_wave, split)"
            ))),
        })
        .map_err(py_err)?;
    let d = trajectory_dict(py, &traj)?;
    if model == "split" {
        d.set_item(
            "reconstruction_defect",
            reconstruction_defect(&params, &traj).map_err(py_err)?,
        )?;
    }
    Ok(d)
}

/// `sup_t ||a(t) - b(t)||` over the shared sample times of two coefficient series.
#[pyfunction]
fn sup_l2_error(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let wrap = |rows: Vec<Vec<f64>>| Trajectory {
        times: (0..rows.len()).map(|i| i as f64).collect(),
        steps: (0..rows.len()).collect(),
        step_size: 1.0,
        u: rows.into_iter().map(field).collect(),
        ..Default::default()
    };
    Ok(sup_error(&wrap(a), &wrap(b)).map_err(py_err)?.sup_error)
}

/// Least-squares fit of `ln error = intercept + slope ln nu`.
#[pyfunction]
fn rate_fit<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let fit = core_rate_fit(&points).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("slope", fit.slope)?;
    d.set_item("intercept", fit.intercept)?;
    d.set_item("r2", fit.r2)?;
    Ok(d)
}

/// Runs an experiment described by TOML text; returns the summary as JSON text.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let config = parse_config(config).map_err(py_err)?;
    let record = py.detach(|| core_run(&config)).map_err(py_err)?;
    Ok(summary_json(&record))
}

/// `(name, computed, expected, passed)` for every closed-form check.
#[pyfunction]
fn oracle_suite(py: Python<'_>) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let checks = py.detach(run_oracle_suite).map_err(py_err)?;
    Ok(checks
        .into_iter()
        .map(|c| (c.name, c.computed, c.expected, c.passed))
        .collect())
}

#[pymodule]
fn kramers(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyNoisePath>()?;
    m.add_function(wrap_pyfunction!(default_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(replica_seed, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sup_l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(rate_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_suite, m)?)?;
    Ok(())
}
