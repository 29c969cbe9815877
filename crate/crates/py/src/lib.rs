//! Python bindings: samplers, densities, normalizing constants, the
//! dof/eta map, seeded random streams, validation and benchmarking.
//!
//! Matrices cross the boundary as lists of rows. Structured reports are
//! returned as plain dicts.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::str::FromStr;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use corrsamp::bench::BenchConfig;
use corrsamp::validation::{Perturbation, TheoremSuiteConfig};
use corrsamp::{densities, samplers, special, validation, CorrelationMatrix, Error, Method, SymmetricMatrix};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyOSError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for corrsamp::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn method(name: &str) -> PyResult<Method> {
    Method::from_str(name).py()
}

fn symmetric(rows: Vec<Vec<f64>>) -> PyResult<SymmetricMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    for i in 0..n {
        for j in 0..i {
            if rows[i][j] != rows[j][i] {
                return Err(PyValueError::new_err(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    SymmetricMatrix::from_rows(&rows).py()
}

fn correlation(rows: Vec<Vec<f64>>) -> PyResult<CorrelationMatrix> {
    CorrelationMatrix::new(symmetric(rows)?).py()
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Degrees of freedom from exactly one of `dof` and `eta`.
fn resolve_dof(dim: usize, dof: Option<f64>, eta: Option<f64>) -> PyResult<f64> {
    match (dof, eta) {
        (Some(m), None) => Ok(m),
        (None, Some(e)) => special::eta_to_dof(dim, e).py(),
        _ => Err(PyValueError::new_err("give exactly one of dof and eta")),
    }
}

/// Seeded, splittable random stream.
#[pyclass(name = "RandomStream", module = "corrsamp_py")]
struct PyRandomStream {
    inner: corrsamp::RandomStream,
}

#[pymethods]
impl PyRandomStream {
    #[new]
    #[pyo3(signature = (seed = corrsamp::rng::DEFAULT_SEED, stream_id = 0))]
    fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            inner: corrsamp::RandomStream::with_stream(seed, stream_id),
        }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn stream_id(&self) -> u64 {
        self.inner.stream_id()
    }

    fn split(&self, k: u64) -> Self {
        Self {
            inner: self.inner.split(k),
        }
    }

    fn uniform(&mut self) -> f64 {
        self.inner.uniform()
    }

    fn standard_normal(&mut self) -> f64 {
        self.inner.standard_normal()
    }

    fn gamma(&mut self, shape: f64) -> PyResult<f64> {
        if !(shape > 0.0) {
            return Err(PyValueError::new_err("shape must be positive"));
        }
        Ok(self.inner.gamma(shape))
    }

    fn chi_square(&mut self, dof: f64) -> PyResult<f64> {
        self.gamma(dof / 2.0).map(|g| 2.0 * g)
    }

    fn beta(&mut self, a: f64, b: f64) -> PyResult<f64> {
        if !(a > 0.0 && b > 0.0) {
            return Err(PyValueError::new_err("beta parameters must be positive"));
        }
        Ok(self.inner.beta(a, b))
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn __repr__(&self) -> String {
        format!(
            "RandomStream(seed={}, stream_id={})",
            self.inner.seed(),
            self.inner.stream_id()
        )
    }
}

/// A batch of sampled matrices with the parameters that produced it.
#[pyclass(name = "SampleBatch", module = "corrsamp_py", frozen)]
struct PySampleBatch {
    inner: corrsamp::SampleBatch,
}

#[pymethods]
impl PySampleBatch {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn dof(&self) -> f64 {
        self.inner.dof
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn retries(&self) -> usize {
        self.inner.retries
    }

    /// Matrices as lists of rows.
    #[getter]
    fn matrices(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.matrices.iter().map(|p| p.to_rows()).collect()
    }

    /// Variances of the underlying covariance draws; empty for onion.
    #[getter]
    fn variances(&self) -> Vec<Vec<f64>> {
        self.inner.variances.iter().map(|v| v.values().to_vec()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SampleBatch(method='{}', dim={}, dof={}, n={})",
            self.inner.method,
            self.inner.dim,
            self.inner.dof,
            self.inner.len()
        )
    }
}

/// `n` matrices from `method` ("rw", "riw" or "onion"/"lkj").
#[pyfunction]
#[pyo3(signature = (method, dim, dof = None, eta = None, n = 1, seed = corrsamp::rng::DEFAULT_SEED))]
fn sample(
    py: Python<'_>,
    method: &str,
    dim: usize,
    dof: Option<f64>,
    eta: Option<f64>,
    n: usize,
    seed: u64,
) -> PyResult<PySampleBatch> {
    let m = self::method(method)?;
    let params = corrsamp::RwParams::new(dim, resolve_dof(dim, dof, eta)?).py()?;
    let inner = py.detach(|| samplers::sample_batch_par(m, params, n, seed)).py()?;
    Ok(PySampleBatch { inner })
}

/// One restricted-Wishart correlation matrix drawn from `rng`.
#[pyfunction]
fn sample_rw(dim: usize, dof: f64, rng: &mut PyRandomStream) -> PyResult<Vec<Vec<f64>>> {
    Ok(samplers::sample_rw_correlation(dim, dof, &mut rng.inner)
        .py()?
        .to_rows())
}

#[pyfunction]
fn sample_riw(dim: usize, dof: f64, rng: &mut PyRandomStream) -> PyResult<Vec<Vec<f64>>> {
    Ok(samplers::sample_riw_correlation(dim, dof, &mut rng.inner)
        .py()?
        .to_rows())
}

#[pyfunction]
fn sample_onion(dim: usize, eta: f64, rng: &mut PyRandomStream) -> PyResult<Vec<Vec<f64>>> {
    Ok(samplers::sample_onion_correlation(dim, eta, &mut rng.inner)
        .py()?
        .to_rows())
}

#[pyfunction]
fn sample_wishart(dof: f64, scale: Vec<Vec<f64>>, rng: &mut PyRandomStream) -> PyResult<Vec<Vec<f64>>> {
    let psi = symmetric(scale)?;
    Ok(samplers::sample_wishart(psi.dim(), dof, &psi, &mut rng.inner)
        .py()?
        .to_rows())
}

#[pyfunction]
fn sample_inverse_wishart(dof: f64, scale: Vec<Vec<f64>>, rng: &mut PyRandomStream) -> PyResult<Vec<Vec<f64>>> {
    let psi = symmetric(scale)?;
    Ok(samplers::sample_inverse_wishart(psi.dim(), dof, &psi, &mut rng.inner)
        .py()?
        .to_rows())
}

/// Correlation matrix and variances of a covariance matrix.
#[pyfunction]
fn cov_to_corr(cov: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let (p, v) = corrsamp::cov_to_corr(&symmetric(cov)?).py()?;
    Ok((p.to_rows(), v.values().to_vec()))
}

#[pyfunction]
fn rw_log_density(p: Vec<Vec<f64>>, dof: f64) -> PyResult<f64> {
    Ok(densities::rw_log_density(&correlation(p)?, dof).py()?.value)
}

#[pyfunction]
fn lkj_log_density(p: Vec<Vec<f64>>, eta: f64) -> PyResult<f64> {
    Ok(densities::lkj_log_density(&correlation(p)?, eta).py()?.value)
}

/// Unnormalized restricted inverse-Wishart log density.
#[pyfunction]
fn riw_log_density(p: Vec<Vec<f64>>, dof: f64) -> PyResult<f64> {
    Ok(densities::riw_log_density(&correlation(p)?, dof).py()?.value)
}

#[pyfunction]
fn wishart_log_density(s: Vec<Vec<f64>>, dof: f64, scale: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(densities::wishart_log_density(&symmetric(s)?, dof, &symmetric(scale)?)
        .py()?
        .value)
}

#[pyfunction]
fn inverse_wishart_log_density(s: Vec<Vec<f64>>, dof: f64, scale: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(
        densities::inverse_wishart_log_density(&symmetric(s)?, dof, &symmetric(scale)?)
            .py()?
            .value,
    )
}

/// Log density of one off-diagonal entry, `Beta(a, a)` on `[−1, 1]`.
#[pyfunction]
fn marginal_rho_log_density(rho: f64, a: f64) -> PyResult<f64> {
    densities::marginal_rho_log_density(rho, a).py()
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    special::log_gamma(x).py()
}

#[pyfunction]
fn log_multivariate_gamma(dim: usize, x: f64) -> PyResult<f64> {
    special::log_multivariate_gamma(dim, x).py()
}

#[pyfunction]
fn log_lkj_constant(dim: usize, eta: f64) -> PyResult<f64> {
    special::log_lkj_constant(corrsamp::LkjParams::new(dim, eta).py()?).py()
}

/// `ln f(T, m)`, which vanishes for every admissible `(T, m)`.
#[pyfunction]
fn log_f_constant(dim: usize, dof: f64) -> PyResult<f64> {
    special::log_f_constant(dim, dof).py()
}

#[pyfunction]
fn duplication_residual(dof: f64) -> PyResult<f64> {
    special::duplication_residual(dof).py()
}

#[pyfunction]
fn dof_to_eta(dim: usize, dof: f64) -> PyResult<f64> {
    special::dof_to_eta(dim, dof).py()
}

#[pyfunction]
fn eta_to_dof(dim: usize, eta: f64) -> PyResult<f64> {
    special::eta_to_dof(dim, eta).py()
}

/// Timing report as a dict with `environment`, `seed` and `rows`.
#[pyfunction]
#[pyo3(signature = (dims, n = 1000, methods = None, seed = corrsamp::rng::DEFAULT_SEED, repetitions = 3, dof_offset = 1.0))]
fn benchmark<'py>(
    py: Python<'py>,
    dims: Vec<usize>,
    n: usize,
    methods: Option<Vec<String>>,
    seed: u64,
    repetitions: usize,
    dof_offset: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let methods = match methods {
        Some(names) => names.iter().map(|s| method(s)).collect::<PyResult<Vec<_>>>()?,
        None => Method::ALL.to_vec(),
    };
    let cfg = BenchConfig {
        dims,
        n,
        methods,
        seed,
        repetitions,
        dof_offset,
    };
    let report = py.detach(|| corrsamp::run_benchmark(&cfg)).py()?;
    to_dict(py, &report)
}

/// The RW/LKJ identity checked on constants, densities and samples.
#[pyfunction]
#[pyo3(signature = (dims = None, etas = None, n = 10_000, density_samples = 200, seed = corrsamp::rng::DEFAULT_SEED, constant_offset = 0.0, eta_shift = 0.0))]
#[allow(clippy::too_many_arguments)]
fn theorem_suite<'py>(
    py: Python<'py>,
    dims: Option<Vec<usize>>,
    etas: Option<Vec<f64>>,
    n: usize,
    density_samples: usize,
    seed: u64,
    constant_offset: f64,
    eta_shift: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let defaults = TheoremSuiteConfig::default();
    let cfg = TheoremSuiteConfig {
        dims: dims.unwrap_or(defaults.dims),
        etas: etas.unwrap_or(defaults.etas),
        n,
        density_samples,
        seed,
        perturbation: Perturbation {
            log_constant_offset: constant_offset,
            onion_eta_shift: eta_shift,
        },
    };
    let report = py.detach(|| validation::theorem_suite(&cfg)).py()?;
    to_dict(py, &report)
}

/// Runs one of the named suites: constants, marginals, theorem, jacobians.
#[pyfunction]
#[pyo3(signature = (suite, seed = corrsamp::rng::DEFAULT_SEED))]
fn validate<'py>(py: Python<'py>, suite: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| match suite {
            "constants" => validation::constants_suite().map(Some),
            "marginals" => validation::marginals_suite(seed).map(Some),
            "theorem" => validation::theorem_suite(&TheoremSuiteConfig {
                seed,
                ..TheoremSuiteConfig::default()
            })
            .map(Some),
            "jacobians" => validation::jacobians_suite(seed).map(Some),
            _ => Ok(None),
        })
        .py()?
        .ok_or_else(|| PyValueError::new_err(format!("unknown suite '{suite}'")))?;
    to_dict(py, &report)
}

#[pymodule]
fn corrsamp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_SEED", corrsamp::rng::DEFAULT_SEED)?;
    m.add_class::<PyRandomStream>()?;
    m.add_class::<PySampleBatch>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(sample_rw, m)?)?;
    m.add_function(wrap_pyfunction!(sample_riw, m)?)?;
    m.add_function(wrap_pyfunction!(sample_onion, m)?)?;
    m.add_function(wrap_pyfunction!(sample_wishart, m)?)?;
    m.add_function(wrap_pyfunction!(sample_inverse_wishart, m)?)?;
    m.add_function(wrap_pyfunction!(cov_to_corr, m)?)?;
    m.add_function(wrap_pyfunction!(rw_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(lkj_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(riw_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(wishart_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_wishart_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_rho_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(log_multivariate_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(log_lkj_constant, m)?)?;
    m.add_function(wrap_pyfunction!(log_f_constant, m)?)?;
    m.add_function(wrap_pyfunction!(duplication_residual, m)?)?;
    m.add_function(wrap_pyfunction!(dof_to_eta, m)?)?;
    m.add_function(wrap_pyfunction!(eta_to_dof, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_suite, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
