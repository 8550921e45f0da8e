//! Python bindings for `fascopula`.
//!
//! Matrices cross the boundary as lists of row lists; ensembles stay on
//! the Rust side and are copied out on request.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use fascopula::copula::{self, MvnOptions, MvnSpec};
use fascopula::correlation::{
    self, CorrelationLevel, CorrelationMatrix, FasGeometry, PearsonTransform,
};
use fascopula::generator::{self, ChannelEnsemble, GeneratorConfig};
use fascopula::nakagami::{self, NakagamiParams};
use fascopula::outage::{self, MatrixChoice, McEstimate, OutageQuery};
use fascopula::Error;
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyfascopula, FasCopulaError, PyValueError);

fn py_err(e: Error) -> PyErr {
    FasCopulaError::new_err(e.to_string())
}

fn parse_level(level: &str) -> PyResult<CorrelationLevel> {
    match level {
        "coefficient" => Ok(CorrelationLevel::Coefficient),
        "gain" => Ok(CorrelationLevel::Gain),
        "envelope" => Ok(CorrelationLevel::Envelope),
        "normal_scores" => Ok(CorrelationLevel::NormalScores),
        other => Err(FasCopulaError::new_err(format!(
            "unknown correlation level '{other}'"
        ))),
    }
}

fn level_name(level: CorrelationLevel) -> &'static str {
    match level {
        CorrelationLevel::Coefficient => "coefficient",
        CorrelationLevel::Gain => "gain",
        CorrelationLevel::Envelope => "envelope",
        CorrelationLevel::NormalScores => "normal_scores",
    }
}

fn parse_matrix_choice(matrix: &str) -> PyResult<MatrixChoice> {
    match matrix {
        "coefficient" | "coeff" | "J" => Ok(MatrixChoice::Coefficient),
        "envelope" | "enve" | "J_h" => Ok(MatrixChoice::Envelope),
        other => Err(FasCopulaError::new_err(format!(
            "matrix must be 'coefficient' or 'envelope', got '{other}'"
        ))),
    }
}

/// Fluid-antenna geometry: `n_ports` ports over `aperture` wavelengths.
#[pyclass(name = "Geometry", module = "pyfascopula", frozen)]
pub struct PyGeometry {
    inner: FasGeometry,
}

#[pymethods]
impl PyGeometry {
    #[new]
    fn new(n_ports: usize, aperture: f64) -> PyResult<Self> {
        Ok(Self {
            inner: FasGeometry::new(n_ports, aperture).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_ports(&self) -> usize {
        self.inner.n_ports()
    }

    #[getter]
    fn aperture(&self) -> f64 {
        self.inner.aperture()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    /// Jakes correlation of the complex coefficients.
    fn jakes(&self) -> PyResult<PyCorrelation> {
        correlation::jakes_matrix(&self.inner)
            .map(PyCorrelation::from)
            .map_err(py_err)
    }

    /// Envelope correlation implied by the Jakes model at severity `m`.
    fn envelope_correlation(&self, m: f64) -> PyResult<PyCorrelation> {
        correlation::jakes_envelope_matrix(&self.inner, m)
            .map(PyCorrelation::from)
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Geometry(n_ports={}, aperture={})",
            self.inner.n_ports(),
            self.inner.aperture()
        )
    }
}

/// Nakagami-m envelope distribution with spread `mu = E[|h|^2]`.
#[pyclass(name = "Nakagami", module = "pyfascopula", frozen)]
pub struct PyNakagami {
    inner: NakagamiParams,
}

#[pymethods]
impl PyNakagami {
    #[new]
    #[pyo3(signature = (m, mu = 1.0))]
    fn new(m: f64, mu: f64) -> PyResult<Self> {
        Ok(Self {
            inner: NakagamiParams::new(m, mu).map_err(py_err)?,
        })
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    fn pdf(&self, r: f64) -> PyResult<f64> {
        nakagami::pdf(&self.inner, r).map_err(py_err)
    }

    fn cdf(&self, r: f64) -> PyResult<f64> {
        nakagami::cdf(&self.inner, r).map_err(py_err)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        nakagami::quantile(&self.inner, u).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Nakagami(m={}, mu={})", self.inner.m(), self.inner.mu())
    }
}

/// Symmetric unit-diagonal correlation matrix tagged with its level.
#[pyclass(name = "Correlation", module = "pyfascopula", frozen)]
pub struct PyCorrelation {
    inner: CorrelationMatrix,
}

impl From<CorrelationMatrix> for PyCorrelation {
    fn from(inner: CorrelationMatrix) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyCorrelation {
    #[new]
    #[pyo3(signature = (rows, level = "normal_scores"))]
    fn new(rows: Vec<Vec<f64>>, level: &str) -> PyResult<Self> {
        let level = parse_level(level)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(FasCopulaError::new_err("correlation rows must form a square matrix"));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self {
            inner: CorrelationMatrix::new(level, entries).map_err(py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn level(&self) -> &'static str {
        level_name(self.inner.level())
    }

    fn __getitem__(&self, idx: (usize, usize)) -> PyResult<f64> {
        let n = self.inner.dim();
        if idx.0 >= n || idx.1 >= n {
            return Err(pyo3::exceptions::PyIndexError::new_err("index out of range"));
        }
        Ok(self.inner.get(idx.0, idx.1))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        let n = self.inner.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.inner.get(i, j)).collect())
            .collect()
    }

    /// Nearest PSD matrix with eigenvalues at least `floor`.
    #[pyo3(signature = (floor = 1e-10))]
    fn psd_repaired(&self, floor: f64) -> PyResult<PyCorrelation> {
        self.inner
            .psd_repaired(floor)
            .map(PyCorrelation::from)
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Correlation(dim={}, level='{}')", self.inner.dim(), self.level())
    }
}

/// `n_samples x n_ports` matrix of envelope samples.
#[pyclass(name = "Ensemble", module = "pyfascopula", frozen)]
pub struct PyEnsemble {
    inner: ChannelEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[getter]
    fn n_ports(&self) -> usize {
        self.inner.n_ports()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn provenance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.provenance();
        let d = PyDict::new(py);
        let kind = match p.generator {
            generator::GeneratorKind::Physical => "physical",
            generator::GeneratorKind::Copula => "copula",
        };
        d.set_item("generator", kind)?;
        d.set_item("covariance", &p.covariance)?;
        d.set_item("seed", p.seed)?;
        d.set_item("n_ports", p.n_ports)?;
        d.set_item("aperture", p.aperture)?;
        d.set_item("m", p.m)?;
        d.set_item("mu", p.mu)?;
        Ok(d)
    }

    fn row(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.inner.n_samples() {
            return Err(pyo3::exceptions::PyIndexError::new_err("row out of range"));
        }
        Ok(self.inner.row(k).to_vec())
    }

    fn column(&self, n: usize) -> PyResult<Vec<f64>> {
        if n >= self.inner.n_ports() {
            return Err(pyo3::exceptions::PyIndexError::new_err("column out of range"));
        }
        Ok(self.inner.column(n).collect())
    }

    /// Per-sample maximum envelope over ports.
    fn peaks(&self) -> Vec<f64> {
        self.inner.peaks()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    /// Pearson correlation of envelopes (`"envelope"`) or gains (`"gain"`).
    #[pyo3(signature = (transform = "envelope"))]
    fn pearson(&self, transform: &str) -> PyResult<PyCorrelation> {
        let t = match transform {
            "envelope" => PearsonTransform::Envelope,
            "gain" => PearsonTransform::Gain,
            other => {
                return Err(FasCopulaError::new_err(format!(
                    "transform must be 'envelope' or 'gain', got '{other}'"
                )))
            }
        };
        correlation::empirical_pearson(&self.inner, t)
            .map(PyCorrelation::from)
            .map_err(py_err)
    }

    fn normal_scores_correlation(&self) -> PyResult<PyCorrelation> {
        correlation::normal_scores_correlation(&self.inner)
            .map(PyCorrelation::from)
            .map_err(py_err)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| py_err(e.into()))?;
        self.inner.write_csv(BufWriter::new(f)).map_err(py_err)
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<PyEnsemble> {
        let f = File::open(path).map_err(|e| py_err(e.into()))?;
        Ok(Self {
            inner: ChannelEnsemble::read_csv(BufReader::new(f)).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Ensemble(n_samples={}, n_ports={})",
            self.inner.n_samples(),
            self.inner.n_ports()
        )
    }
}

/// Result of a multivariate normal CDF evaluation.
#[pyclass(name = "CdfResult", module = "pyfascopula", frozen, get_all)]
pub struct PyCdfResult {
    value: f64,
    error_estimate: f64,
    n_evaluations: usize,
    converged: bool,
}

#[pymethods]
impl PyCdfResult {
    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!(
            "CdfResult(value={}, error_estimate={:e}, n_evaluations={}, converged={})",
            self.value,
            self.error_estimate,
            self.n_evaluations,
            if self.converged { "True" } else { "False" }
        )
    }
}

/// Monte Carlo outage estimate with its binomial standard error.
#[pyclass(name = "McEstimate", module = "pyfascopula", frozen, get_all)]
pub struct PyMcEstimate {
    op: f64,
    stderr: f64,
    samples: usize,
    outages: u64,
}

impl From<McEstimate> for PyMcEstimate {
    fn from(e: McEstimate) -> Self {
        Self {
            op: e.op,
            stderr: e.stderr,
            samples: e.samples,
            outages: e.outages,
        }
    }
}

#[pymethods]
impl PyMcEstimate {
    fn __repr__(&self) -> String {
        format!(
            "McEstimate(op={}, stderr={:e}, samples={}, outages={})",
            self.op, self.stderr, self.samples, self.outages
        )
    }
}

/// Samples from the physical FAS model (integer `m` only).
#[pyfunction]
fn generate_physical(
    py: Python<'_>,
    geometry: PyRef<'_, PyGeometry>,
    nakagami: PyRef<'_, PyNakagami>,
    n_samples: usize,
    seed: u64,
) -> PyResult<PyEnsemble> {
    let cfg = GeneratorConfig {
        geom: geometry.inner,
        params: nakagami.inner,
        seed,
        n_samples,
    };
    let inner = py.detach(|| generator::generate_physical(&cfg)).map_err(py_err)?;
    Ok(PyEnsemble { inner })
}

/// Gaussian-copula samples with Nakagami marginals and covariance `cov`.
#[pyfunction]
fn generate_copula(
    py: Python<'_>,
    geometry: PyRef<'_, PyGeometry>,
    nakagami: PyRef<'_, PyNakagami>,
    cov: PyRef<'_, PyCorrelation>,
    n_samples: usize,
    seed: u64,
) -> PyResult<PyEnsemble> {
    let (geom, params, cov) = (geometry.inner, nakagami.inner, &cov.inner);
    let inner = py
        .detach(|| generator::generate_copula(&geom, &params, cov, seed, n_samples))
        .map_err(py_err)?;
    Ok(PyEnsemble { inner })
}

/// `P(X <= b)` for `X ~ N(0, cov)`.
#[pyfunction]
#[pyo3(signature = (cov, upper, abs_tol = 1e-4, rel_tol = 0.0, seed = 0))]
fn mvn_cdf(
    py: Python<'_>,
    cov: PyRef<'_, PyCorrelation>,
    upper: Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    seed: u64,
) -> PyResult<PyCdfResult> {
    let spec = MvnSpec::new(cov.inner.clone(), upper).map_err(py_err)?;
    let opts = MvnOptions {
        abs_tol,
        rel_tol,
        ..MvnOptions::default()
    };
    let r = py
        .detach(|| copula::mvn_cdf_with(&spec, &opts, seed))
        .map_err(py_err)?;
    Ok(PyCdfResult {
        value: r.value,
        error_estimate: r.error_estimate,
        n_evaluations: r.n_evaluations,
        converged: r.converged,
    })
}

/// CDF of the peak envelope `max_n |h_n|` under the Gaussian copula.
#[pyfunction]
#[pyo3(signature = (r, nakagami, cov, tol = 1e-4, seed = 0))]
fn peak_cdf(
    py: Python<'_>,
    r: f64,
    nakagami: PyRef<'_, PyNakagami>,
    cov: PyRef<'_, PyCorrelation>,
    tol: f64,
    seed: u64,
) -> PyResult<f64> {
    let (params, cov) = (nakagami.inner, &cov.inner);
    py.detach(|| copula::peak_cdf(r, &params, cov, tol, seed))
        .map_err(py_err)
}

/// Density of the peak envelope; `h` defaults to `1e-3 sqrt(mu)`.
#[pyfunction]
#[pyo3(signature = (r, nakagami, cov, tol = 1e-4, seed = 0, h = None))]
fn peak_pdf(
    py: Python<'_>,
    r: f64,
    nakagami: PyRef<'_, PyNakagami>,
    cov: PyRef<'_, PyCorrelation>,
    tol: f64,
    seed: u64,
    h: Option<f64>,
) -> PyResult<f64> {
    let (params, cov) = (nakagami.inner, &cov.inner);
    let h = h.unwrap_or_else(|| copula::default_pdf_step(&params));
    py.detach(|| copula::peak_pdf(r, &params, cov, tol, seed, h))
        .map_err(py_err)
}

fn query(
    snr_db: f64,
    threshold_db: f64,
    geometry: &PyGeometry,
    nakagami: &PyNakagami,
) -> PyResult<OutageQuery> {
    OutageQuery::new(snr_db, threshold_db, geometry.inner, nakagami.inner).map_err(py_err)
}

/// Copula outage probability using the `"coefficient"` or `"envelope"` matrix.
#[pyfunction]
#[pyo3(signature = (snr_db, threshold_db, geometry, nakagami, matrix = "envelope", tol = 1e-4, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn op_theory(
    py: Python<'_>,
    snr_db: f64,
    threshold_db: f64,
    geometry: PyRef<'_, PyGeometry>,
    nakagami: PyRef<'_, PyNakagami>,
    matrix: &str,
    tol: f64,
    seed: u64,
) -> PyResult<f64> {
    let choice = parse_matrix_choice(matrix)?;
    let q = query(snr_db, threshold_db, &geometry, &nakagami)?;
    py.detach(|| outage::op_theory(&q, choice, tol, seed))
        .map_err(py_err)
}

/// Single-antenna outage probability, the Nakagami CDF at the outage radius.
#[pyfunction]
fn op_tas(
    snr_db: f64,
    threshold_db: f64,
    geometry: PyRef<'_, PyGeometry>,
    nakagami: PyRef<'_, PyNakagami>,
) -> PyResult<f64> {
    let q = query(snr_db, threshold_db, &geometry, &nakagami)?;
    outage::op_tas(&q).map_err(py_err)
}

/// Monte Carlo FAS outage from `samples` physical-model draws.
#[pyfunction]
fn op_monte_carlo(
    py: Python<'_>,
    snr_db: f64,
    threshold_db: f64,
    geometry: PyRef<'_, PyGeometry>,
    nakagami: PyRef<'_, PyNakagami>,
    samples: usize,
    seed: u64,
) -> PyResult<PyMcEstimate> {
    let q = query(snr_db, threshold_db, &geometry, &nakagami)?;
    py.detach(|| outage::op_monte_carlo(&q, samples, seed))
        .map(PyMcEstimate::from)
        .map_err(py_err)
}

#[pymodule]
pub fn pyfascopula(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FasCopulaError", m.py().get_type::<FasCopulaError>())?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyNakagami>()?;
    m.add_class::<PyCorrelation>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyCdfResult>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_function(wrap_pyfunction!(generate_physical, m)?)?;
    m.add_function(wrap_pyfunction!(generate_copula, m)?)?;
    m.add_function(wrap_pyfunction!(mvn_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(peak_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(peak_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(op_theory, m)?)?;
    m.add_function(wrap_pyfunction!(op_tas, m)?)?;
    m.add_function(wrap_pyfunction!(op_monte_carlo, m)?)?;
    Ok(())
}
