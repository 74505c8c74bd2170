//! Python bindings for `hl-core`.
//!
//! Grids cross the boundary as lists of floats; experiment configs and
//! reports cross it as JSON text.

use std::collections::BTreeMap;

use hl_core::experiments::{self, ExperimentConfig};
use hl_core::field::{self, FieldGrid, HarmonicCoefficients, StreamKey, SynthesisMethod, SynthesisPlan};
use hl_core::{chaos, geometry, legendre, stats, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Resolution(_) | Error::UnsupportedOrder(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Coefficients `a_ℓ0 … a_ℓℓ` of one realization.
#[pyclass(name = "Coefficients", module = "harmonic_lengths", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCoefficients {
    inner: HarmonicCoefficients,
}

#[pymethods]
impl PyCoefficients {
    #[new]
    #[pyo3(signature = (degree, a0, am, seed = 0))]
    fn new(degree: usize, a0: f64, am: Vec<Complex64>, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: HarmonicCoefficients::new(degree, a0, am, seed).map_err(to_py)?,
        })
    }

    /// Draw for replication `replication` of degree `degree` under `master_seed`.
    #[staticmethod]
    #[pyo3(signature = (degree, master_seed, replication = 0))]
    fn sample(degree: usize, master_seed: u64, replication: u64) -> PyResult<Self> {
        let key = StreamKey::new(master_seed, degree, replication);
        Ok(Self {
            inner: field::sample_for_stream(key).map_err(to_py)?,
        })
    }

    /// `f = P_ℓ(cos θ)`.
    #[staticmethod]
    fn zonal(degree: usize) -> PyResult<Self> {
        Ok(Self {
            inner: HarmonicCoefficients::zonal(degree).map_err(to_py)?,
        })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn a0(&self) -> f64 {
        self.inner.a0
    }

    #[getter]
    fn am(&self) -> Vec<Complex64> {
        self.inner.am.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// `(f, ∂̃₁f, ∂̃₂f)` at `(θ, φ)`.
    fn evaluate(&self, theta: f64, phi: f64) -> PyResult<(f64, f64, f64)> {
        self.inner.evaluate(theta, phi).map_err(to_py)
    }

    /// `(Ĉ_ℓ, 4πĈ_ℓ)`.
    fn power_spectrum(&self) -> (f64, f64) {
        let s = field::sample_power_spectrum(&self.inner);
        (s.c_hat, s.l2_norm_sq)
    }

    /// `D_ℓ(u)` from the power spectrum.
    fn second_chaos(&self, u: f64) -> f64 {
        chaos::second_chaos(&field::sample_power_spectrum(&self.inner), u)
    }

    fn __repr__(&self) -> String {
        format!("Coefficients(degree={}, seed={:#x})", self.inner.degree, self.inner.seed)
    }
}

/// Field values (and normalized gradient) on a Gauss × equispaced grid.
#[pyclass(name = "Grid", module = "harmonic_lengths", frozen)]
struct PyGrid {
    inner: FieldGrid,
}

#[pymethods]
impl PyGrid {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn n_theta(&self) -> usize {
        self.inner.n_theta()
    }

    #[getter]
    fn n_phi(&self) -> usize {
        self.inner.n_phi()
    }

    #[getter]
    fn thetas(&self) -> Vec<f64> {
        self.inner.thetas.clone()
    }

    #[getter]
    fn phis(&self) -> Vec<f64> {
        self.inner.phis.clone()
    }

    /// Row-major by colatitude.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn grad1(&self) -> Vec<f64> {
        self.inner.grad1.clone()
    }

    #[getter]
    fn grad2(&self) -> Vec<f64> {
        self.inner.grad2.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn has_gradient(&self) -> bool {
        self.inner.has_gradient()
    }

    /// Marching-squares length of `{f = u}`.
    fn level_length(&self, u: f64) -> PyResult<f64> {
        Ok(geometry::level_curve_length(&self.inner, u).map_err(to_py)?.length)
    }

    #[pyo3(signature = (u, epsilon = 0.05))]
    fn band_length(&self, u: f64, epsilon: f64) -> PyResult<f64> {
        Ok(geometry::epsilon_band_length(&self.inner, u, epsilon)
            .map_err(to_py)?
            .length)
    }

    /// `∫ H_k(f)` by grid quadrature.
    fn hermite_integral(&self, k: usize) -> f64 {
        chaos::hermite_integral(&self.inner, k)
    }

    /// `proj[L(u) | q]`.
    fn chaos_projection(&self, u: f64, q: usize) -> PyResult<f64> {
        chaos::chaos_projection(&self.inner, u, q).map_err(to_py)
    }

    /// `{q: proj[L(u) | q]}` for `q ≤ q_max`.
    #[pyo3(signature = (u, q_max = 4))]
    fn chaos_projections(&self, u: f64, q_max: usize) -> PyResult<BTreeMap<usize, f64>> {
        let ints = chaos::ChaosIntegrals::new(&self.inner, q_max).map_err(to_py)?;
        (0..=q_max)
            .map(|q| Ok((q, ints.projection(u, q).map_err(to_py)?)))
            .collect()
    }

    /// `D_ℓ(u)` by grid quadrature.
    fn second_chaos(&self, u: f64) -> f64 {
        chaos::second_chaos_grid(&self.inner, u)
    }

    /// `M_ℓ(u)`.
    fn trispectrum(&self, u: f64) -> f64 {
        chaos::sample_trispectrum(&self.inner, u)
    }

    /// The binary dump format written by `hl field-dump`.
    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let mut buf = Vec::new();
        self.inner
            .write_binary(&mut buf)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(PyBytes::new(py, &buf))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let mut r = data;
        Ok(Self {
            inner: FieldGrid::read_binary(&mut r).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(degree={}, n_theta={}, n_phi={}, gradient={})",
            self.inner.degree,
            self.inner.n_theta(),
            self.inner.n_phi(),
            self.inner.has_gradient()
        )
    }
}

/// Grid with oversampling `factor`; `values_only` skips the gradient.
#[pyfunction]
#[pyo3(signature = (coeffs, factor = 2, values_only = false))]
fn synthesize(coeffs: &PyCoefficients, factor: usize, values_only: bool) -> PyResult<PyGrid> {
    let plan = SynthesisPlan::new(coeffs.inner.degree, factor).map_err(to_py)?;
    let inner = if values_only {
        plan.synthesize_values(&coeffs.inner)
    } else {
        plan.synthesize(&coeffs.inner, SynthesisMethod::Fft)
    }
    .map_err(to_py)?;
    Ok(PyGrid { inner })
}

/// Contour length extrapolated from the `factor` grid and its exact doubling.
#[pyfunction]
#[pyo3(signature = (coeffs, u, factor = 2))]
fn extrapolated_length(coeffs: &PyCoefficients, u: f64, factor: usize) -> PyResult<f64> {
    let plan = SynthesisPlan::new(coeffs.inner.degree, factor).map_err(to_py)?;
    let coarse = plan.synthesize_values(&coeffs.inner).map_err(to_py)?;
    let fine = plan.doubled().synthesize_values(&coeffs.inner).map_err(to_py)?;
    Ok(geometry::extrapolated_length(&coarse, &fine, u)
        .map_err(to_py)?
        .length)
}

#[pyfunction]
fn legendre_p(l: usize, t: f64) -> PyResult<f64> {
    legendre::legendre_p(l, t).map_err(to_py)
}

#[pyfunction]
fn hermite(k: usize, t: f64) -> f64 {
    chaos::hermite(k, t)
}

/// `α_{2n,2m}`.
#[pyfunction]
fn alpha_coefficient(n: usize, m: usize) -> f64 {
    chaos::alpha_coefficient(n, m)
}

/// `β_k(u)`.
#[pyfunction]
fn beta_coefficient(k: usize, u: f64) -> f64 {
    chaos::beta_coefficient(k, u)
}

/// `{name: value}` of the truncated moment integrals at degree `l`.
#[pyfunction]
#[pyo3(signature = (l, cutoff = 1.0))]
fn moment_integrals(l: usize, cutoff: f64) -> PyResult<BTreeMap<String, f64>> {
    let t = legendre::appendix_moment_integrals(l, cutoff).map_err(to_py)?;
    Ok(t.values.iter().map(|(id, v)| (id.name().to_string(), *v)).collect())
}

#[pyfunction]
fn correlation(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    stats::correlation(&xs, &ys).map_err(to_py)
}

/// Correlation of `xs` and `ys` after regressing both on `zs`.
#[pyfunction]
fn partial_correlation(xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64>) -> PyResult<f64> {
    stats::partial_correlation(&xs, &ys, &zs).map_err(to_py)
}

/// Sample moments with standard errors, as a dict.
#[pyfunction]
fn mc_summary(xs: Vec<f64>) -> PyResult<BTreeMap<&'static str, f64>> {
    let s = stats::mc_summary(&xs).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("n", s.n as f64),
        ("mean", s.mean),
        ("variance", s.variance),
        ("se_mean", s.se_mean),
        ("se_variance", s.se_variance),
        ("skewness", s.skewness),
        ("excess_kurtosis", s.excess_kurtosis),
    ]))
}

/// Default experiment config as JSON.
#[pyfunction]
fn default_config() -> PyResult<String> {
    serde_json::to_string(&ExperimentConfig::default()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs `theorem1`, `moments`, `proxies` or `appendix` and returns the report as JSON.
/// Keys missing from `config_json` take their defaults.
#[pyfunction]
#[pyo3(signature = (name, config_json = "{}"))]
fn run_experiment(py: Python<'_>, name: &str, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json_str(config_json).map_err(to_py)?;
    let json = |r: Result<String, serde_json::Error>| r.map_err(|e| PyRuntimeError::new_err(e.to_string()));
    let name = name.to_string();
    py.detach(move || match name.as_str() {
        "theorem1" => json(serde_json::to_string(&experiments::run_theorem1(&cfg).map_err(to_py)?)),
        "moments" => json(serde_json::to_string(&experiments::run_moment_laws(&cfg).map_err(to_py)?)),
        "proxies" => json(serde_json::to_string(&experiments::run_proxy_convergence(&cfg).map_err(to_py)?)),
        "appendix" => json(serde_json::to_string(&experiments::run_appendix_checks(&cfg).map_err(to_py)?)),
        other => Err(PyValueError::new_err(format!("unknown experiment {other:?}"))),
    })
}

#[pymodule]
fn harmonic_lengths(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoefficients>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(extrapolated_length, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_p, m)?)?;
    m.add_function(wrap_pyfunction!(hermite, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(beta_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(moment_integrals, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(partial_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(mc_summary, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
