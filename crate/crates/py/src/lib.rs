//! Python bindings: schemes, representation parameters, couplings and the
//! reduction check.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sutherland_core::fock::fock_dimension as core_fock_dimension;
use sutherland_core::kks::{self, KksParams, RawParams};
use sutherland_core::lie::{self, CaseTag, RadialPoint};
use sutherland_core::polar;

fn err(e: sutherland_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(q: Vec<f64>) -> PyResult<RadialPoint> {
    RadialPoint::new(q).map_err(err)
}

/// Block scheme `(m, n, r, s)` with `m + n = r + s`.
#[pyclass(name = "Scheme", frozen, from_py_object)]
#[derive(Clone)]
struct PyScheme(lie::Scheme);

#[pymethods]
impl PyScheme {
    #[new]
    fn new(m: usize, n: usize, r: usize, s: usize) -> PyResult<Self> {
        lie::Scheme::new(m, n, r, s).map(PyScheme).map_err(err)
    }

    #[staticmethod]
    fn for_case(case: &str, n: usize) -> PyResult<Self> {
        let tag = match case {
            "I" => CaseTag::I,
            "II" => CaseTag::II,
            "III" => CaseTag::III,
            other => return Err(PyValueError::new_err(format!("unknown case {other:?}"))),
        };
        lie::Scheme::for_case(tag, n).map(PyScheme).map_err(err)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }
    #[getter]
    fn r(&self) -> usize {
        self.0.r()
    }
    #[getter]
    fn s(&self) -> usize {
        self.0.s()
    }
    #[getter]
    fn case(&self) -> String {
        self.0.case().to_string()
    }
    #[getter]
    fn dim_g(&self) -> usize {
        self.0.dim_g()
    }
    #[getter]
    fn dim_k(&self) -> usize {
        self.0.dim_k()
    }

    /// Closed-form inertia eigenvalues in the adapted `K`-perp basis.
    fn inertia_eigenvalues(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        let b = polar::build_kperp_basis(&self.0);
        polar::inertia_closed_eigen(&b, &point(q)?).map_err(err)
    }

    /// Inertia matrix assembled from its definition, as nested lists.
    fn inertia_matrix(&self, q: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let b = polar::build_kperp_basis(&self.0);
        let j = polar::inertia_from_definition(&b, &point(q)?).map_err(err)?.matrix;
        Ok(j.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn measure_factor(&self, q: Vec<f64>) -> PyResult<f64> {
        polar::measure_factor_closed(&self.0, &point(q)?).map_err(err)
    }

    #[pyo3(signature = (q, h = polar::FD_STEP))]
    fn measure_factor_fd(&self, q: Vec<f64>, h: f64) -> PyResult<f64> {
        polar::measure_factor_fd(&self.0, &point(q)?, h).map_err(err)
    }

    fn density_sqrt(&self, q: Vec<f64>) -> PyResult<f64> {
        polar::density_sqrt(&self.0, &point(q)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Scheme({}, {}, {}, {})", self.0.m(), self.0.n(), self.0.r(), self.0.s())
    }
}

/// Free parameters of an admissible representation.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams(KksParams);

#[pymethods]
impl PyParams {
    #[staticmethod]
    #[pyo3(signature = (gamma, kl1 = 0, kl2 = 0, kr1 = 0))]
    fn case_i(gamma: u64, kl1: i64, kl2: i64, kr1: i64) -> Self {
        PyParams(KksParams::I { gamma, kl1, kl2, kr1 })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, gamma_tilde, kr1 = 0, kr2 = 0))]
    fn case_ii(gamma: u64, gamma_tilde: u64, kr1: i64, kr2: i64) -> Self {
        PyParams(KksParams::II { gamma, gamma_tilde, kr1, kr2 })
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, gamma_tilde, gamma_hat, k = 0))]
    fn case_iii(gamma: u64, gamma_tilde: u64, gamma_hat: u64, k: i64) -> Self {
        PyParams(KksParams::III { gamma, gamma_tilde, gamma_hat, k })
    }

    #[getter]
    fn case(&self) -> String {
        self.0.case().to_string()
    }

    /// `(a1, kl1, kl2, kr1, kr2)` for the given `n`.
    fn to_raw(&self, n: usize) -> (u64, i64, i64, i64, i64) {
        let r = self.0.to_raw(n);
        (r.a1, r.kl1, r.kl2, r.kr1, r.kr2)
    }

    /// Occupation numbers of the `K`-invariant vector.
    fn invariant_state(&self, n: usize) -> Vec<u32> {
        self.0.invariant_state(n).occupations().to_vec()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Params.{}", self.0)
    }
}

/// Sutherland couplings with the exact additive constant as a string.
#[pyclass(name = "Couplings", frozen, get_all)]
struct PyCouplings {
    a: u64,
    b: u64,
    c: u64,
    constant: String,
    constant_float: f64,
    mu: (String, String, String),
}

#[pymethods]
impl PyCouplings {
    fn __repr__(&self) -> String {
        format!("Couplings(a={}, b={}, c={}, C={})", self.a, self.b, self.c, self.constant)
    }
}

impl From<kks::Couplings> for PyCouplings {
    fn from(c: kks::Couplings) -> Self {
        let mu = c.mu();
        PyCouplings {
            a: c.a,
            b: c.b,
            c: c.c,
            constant: c.constant.to_string(),
            constant_float: kks::rational_to_f64(c.constant),
            mu: (mu.mu_pm.to_string(), mu.mu_short.to_string(), mu.mu_long.to_string()),
        }
    }
}

fn raw(a1: u64, kl1: i64, kl2: i64, kr1: i64, kr2: i64) -> RawParams {
    RawParams { a1, kl1, kl2, kr1, kr2 }
}

/// Closed-form admissibility of raw data; returns a dict with `dimension`,
/// `state`, `params` and `violations`.
#[pyfunction]
fn admissibility<'py>(
    py: Python<'py>,
    scheme: &PyScheme,
    a1: u64,
    kl1: i64,
    kl2: i64,
    kr1: i64,
    kr2: i64,
) -> PyResult<Bound<'py, PyDict>> {
    let adm = kks::admissibility_closed(&scheme.0, raw(a1, kl1, kl2, kr1, kr2)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("dimension", adm.dimension)?;
    d.set_item("state", adm.state.map(|s| s.occupations().to_vec()))?;
    d.set_item("params", adm.params.map(PyParams))?;
    d.set_item("violations", adm.violations)?;
    Ok(d)
}

/// Dimension of the `K`-fixed subspace computed by brute force.
#[pyfunction]
fn vk_dimension(py: Python<'_>, scheme: &PyScheme, a1: u64, kl1: i64, kl2: i64, kr1: i64, kr2: i64) -> PyResult<usize> {
    let s = scheme.0;
    py.detach(|| kks::compute_vk_bruteforce(&s, raw(a1, kl1, kl2, kr1, kr2)))
        .map(|v| v.dimension)
        .map_err(err)
}

#[pyfunction]
fn couplings(scheme: &PyScheme, params: &PyParams) -> PyResult<PyCouplings> {
    kks::couplings(&scheme.0, &params.0).map(Into::into).map_err(err)
}

#[pyfunction]
fn spin_term(scheme: &PyScheme, params: &PyParams, q: Vec<f64>) -> PyResult<f64> {
    kks::spin_term(&scheme.0, &params.0, &point(q)?).map_err(err)
}

/// `V_BC` with real couplings at the angles `q`.
#[pyfunction]
fn bc_potential(a: f64, b: f64, c: f64, q: Vec<f64>) -> f64 {
    kks::bc_potential_abc(a, b, c, &q)
}

#[pyfunction]
fn fock_dimension(modes: usize, level: u64) -> u64 {
    core_fock_dimension(modes, level)
}

#[pyfunction]
#[pyo3(signature = (n, count, seed = 0, margin = kks::SAMPLE_MARGIN))]
fn sample_alcove(n: usize, count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    lie::sample_alcove(n, count, seed, margin)
        .into_iter()
        .map(|p| p.angles().to_vec())
        .collect()
}

/// Checks `measure - spin = V_BC + C` at seeded points; returns a dict with
/// `pass`, `max_rel_err`, `couplings` and per-point `samples`.
#[pyfunction]
#[pyo3(signature = (scheme, params, samples = 20, tol = 1e-8, seed = 0))]
fn verify_reduction<'py>(
    py: Python<'py>,
    scheme: &PyScheme,
    params: &PyParams,
    samples: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (s, p) = (scheme.0, params.0);
    let rep = py.detach(|| kks::verify_reduction(&s, &p, samples, tol, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("pass", rep.pass)?;
    d.set_item("max_rel_err", rep.max_rel_err)?;
    d.set_item("couplings", Bound::new(py, PyCouplings::from(rep.couplings))?)?;
    let rows: Vec<(Vec<f64>, f64, f64, f64, f64)> = rep
        .samples
        .iter()
        .map(|x| (x.q.clone(), x.measure, x.spin, x.potential, x.rel_err))
        .collect();
    d.set_item("samples", rows)?;
    Ok(d)
}

#[pymodule]
fn sutherland(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyCouplings>()?;
    m.add_function(wrap_pyfunction!(admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(vk_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(couplings, m)?)?;
    m.add_function(wrap_pyfunction!(spin_term, m)?)?;
    m.add_function(wrap_pyfunction!(bc_potential, m)?)?;
    m.add_function(wrap_pyfunction!(fock_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(sample_alcove, m)?)?;
    m.add_function(wrap_pyfunction!(verify_reduction, m)?)?;
    Ok(())
}
