//! Python bindings: weights, invariant operators, matrices and verification reports.

#![allow(clippy::useless_conversion)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use crtractor::cli::{self, Params, Suite};
use crtractor::heisenberg;
use crtractor::invariant_ops::{self, folland_stein_factorize};
use crtractor::scalars::{fmt_rational, parse_poly, VarSet};
use crtractor::structures::PhStructure;
use crtractor::tractor::Tractor;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Density weight `(w, w')` with `w - w'` an integer.
#[pyclass(frozen)]
#[derive(Clone)]
struct Weight(heisenberg::Weight);

#[pymethods]
impl Weight {
    #[new]
    fn new(w: &str, wp: &str) -> PyResult<Self> {
        cli::parse_weight(w, wp).map(Self).map_err(err)
    }

    #[getter]
    fn w(&self) -> String {
        fmt_rational(&self.0.w)
    }

    #[getter]
    fn wp(&self) -> String {
        fmt_rational(&self.0.wp)
    }

    /// `n + w + w' + 1` when it is a positive integer.
    fn order(&self, n: usize) -> Option<u32> {
        self.0.order(n)
    }

    fn __repr__(&self) -> String {
        format!("Weight{}", self.0)
    }

    fn __eq__(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}

/// A linear differential operator between density bundles on the Heisenberg group.
#[pyclass(frozen)]
struct DiffOp {
    n: usize,
    inner: invariant_ops::DiffOp,
}

#[pymethods]
impl DiffOp {
    #[staticmethod]
    fn from_json(json: &str, n: usize) -> PyResult<Self> {
        Ok(Self { n, inner: cli::parse_op(json, n).map_err(err)? })
    }

    #[getter]
    fn domain(&self) -> Weight {
        Weight(self.inner.domain.clone())
    }

    #[getter]
    fn codomain(&self) -> Weight {
        Weight(self.inner.codomain.clone())
    }

    fn to_json(&self) -> String {
        cli::render_op(&self.inner, true)
    }

    /// Applies the operator to a polynomial in `z1..zn, zb1..zbn, t`.
    fn apply(&self, f: &str) -> PyResult<String> {
        let p = parse_poly(f, &VarSet::heisenberg(self.n)).map_err(err)?;
        Ok(self.inner.op.apply(&p).to_string())
    }

    fn adjoint(&self) -> Self {
        Self { n: self.n, inner: self.inner.adjoint(self.n) }
    }

    /// Parameters `alpha_j` with `P = prod (Delta_b + i alpha_j T)`, if they exist.
    fn folland_stein(&self) -> Option<Vec<String>> {
        let k = self.inner.domain.order(self.n)?;
        let tr = Tractor::new(&PhStructure::flat(&heisenberg::Signature::definite(self.n)));
        folland_stein_factorize(&self.inner.op, tr.structure().frame(), k).map(|a| a.iter().map(fmt_rational).collect())
    }

    fn __eq__(&self, o: &Self) -> bool {
        self.inner == o.inner
    }

    fn __repr__(&self) -> String {
        self.inner.to_string()
    }
}

fn params(n: usize, w: Option<&str>, wp: Option<&str>, pattern: Option<&str>, upsilon: Option<&str>, seed: u64) -> Params {
    let mut p = Params::new(n);
    p.w = w.map(str::to_string);
    p.wp = wp.map(str::to_string);
    p.pattern = pattern.map(str::to_string);
    p.upsilon = upsilon.map(str::to_string);
    p.seed = seed;
    p
}

/// The invariant operator on `E(w, w')`, over the flat structure or its rescaling by `upsilon`.
#[pyfunction]
#[pyo3(signature = (n, w, wp, pattern=None, upsilon=None))]
fn invariant_operator(n: usize, w: &str, wp: &str, pattern: Option<&str>, upsilon: Option<&str>) -> PyResult<DiffOp> {
    let p = params(n, Some(w), Some(wp), pattern, upsilon, cli::DEFAULT_SEED);
    Ok(DiffOp { n, inner: cli::cmd_op_print(&p).map_err(err)? })
}

/// JSON dump of the flat operator's matrix on monomials of nonisotropic degree at most `degree`.
#[pyfunction]
#[pyo3(signature = (n, w, wp, degree=3))]
fn operator_matrix(n: usize, w: &str, wp: &str, degree: u32) -> PyResult<String> {
    let mut p = params(n, Some(w), Some(wp), None, None, cli::DEFAULT_SEED);
    p.degree = degree;
    let m = cli::cmd_matrix(&p).map_err(err)?;
    serde_json::to_string(&m).map_err(err)
}

/// Runs a verification suite and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (suite, n=1, signature=None, seed=cli::DEFAULT_SEED, upsilon=None))]
fn verify(suite: &str, n: usize, signature: Option<&str>, seed: u64, upsilon: Option<&str>) -> PyResult<String> {
    let suite = <Suite as clap::ValueEnum>::from_str(suite, false).map_err(err)?;
    let mut p = params(n, None, None, None, upsilon, seed);
    p.signature = signature.map(str::to_string);
    let report = cli::cmd_verify(suite, &p).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

#[pymodule]
fn pycrtractor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Weight>()?;
    m.add_class::<DiffOp>()?;
    m.add_function(wrap_pyfunction!(invariant_operator, m)?)?;
    m.add_function(wrap_pyfunction!(operator_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
