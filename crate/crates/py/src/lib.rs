//! Python bindings. Heavy calls release the GIL.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sturmtx::hilbert::ExprFunction;
use sturmtx::spectrum::spectrum_lower_bound;
use sturmtx::{
    apply_resolvent, boundary_parseval, characteristic, expand, find_eigenpairs, first_eigenpairs,
    h_norm, load_problem, oracle_eigenvalues, parse_problem, resolvent_residual, run_verification,
    Error, Expr, Grid, HilbertElement, PiecewiseSolution, ProblemFile, Side, SpectrumSettings,
    Tolerances, ValidatedProblem, VerifyLevel,
};

create_exception!(
    sturmtx_py,
    SolverError,
    PyRuntimeError,
    "A numerical routine failed."
);
create_exception!(
    sturmtx_py,
    NearEigenvalueError,
    SolverError,
    "The resolvent was requested too close to an eigenvalue."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NearEigenvalue { .. } => NearEigenvalueError::new_err(e.to_string()),
        e if e.is_input_error() => PyValueError::new_err(e.to_string()),
        e => SolverError::new_err(e.to_string()),
    }
}

fn parse_side(side: Option<&str>) -> PyResult<Option<Side>> {
    match side {
        None => Ok(None),
        Some("-" | "-0" | "minus") => Ok(Some(Side::Minus)),
        Some("+" | "+0" | "plus") => Ok(Some(Side::Plus)),
        Some(other) => Err(PyValueError::new_err(format!(
            "side must be '-' or '+', got {other:?}"
        ))),
    }
}

fn settings(tol: f64) -> PyResult<SpectrumSettings> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(PyValueError::new_err(format!(
            "tol must be positive, got {tol}"
        )));
    }
    Ok(SpectrumSettings {
        root_tol: tol,
        ..SpectrumSettings::default()
    })
}

fn rhs_element(rhs: &str, t2: f64) -> PyResult<HilbertElement> {
    let expr = Expr::parse(rhs).map_err(|e| to_py(e.into()))?;
    Ok(HilbertElement::new(
        Arc::new(ExprFunction::uniform(expr)),
        t2,
    ))
}

/// An arithmetic expression in `x`.
#[pyclass(frozen, module = "sturmtx_py")]
struct Expression(Expr);

#[pymethods]
impl Expression {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Expr::parse(text)
            .map(Expression)
            .map_err(|e| to_py(e.into()))
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(|e| to_py(e.into()))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.0.to_string())
    }
}

/// A normalized eigenpair `(lambda_n, phi_n)`.
#[pyclass(frozen, module = "sturmtx_py")]
struct Eigenpair {
    problem: Arc<ValidatedProblem>,
    phi: Arc<PiecewiseSolution>,
    #[pyo3(get)]
    eigenvalue: f64,
    #[pyo3(get)]
    boundary_scalar: f64,
    #[pyo3(get)]
    norm_check: f64,
    #[pyo3(get)]
    d_residual: f64,
}

#[pymethods]
impl Eigenpair {
    /// `(phi(x), phi'(x))`. At a breakpoint `side` picks the one-sided limit.
    #[pyo3(signature = (x, side = None))]
    fn __call__(&self, x: f64, side: Option<&str>) -> PyResult<(f64, f64)> {
        let piece = match parse_side(side)? {
            Some(s) => self.problem.locate_sided(x, s),
            None => self.problem.locate(x),
        }
        .map_err(to_py)?;
        self.phi.value_on(piece, x).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Eigenpair(eigenvalue={}, boundary_scalar={})",
            self.eigenvalue, self.boundary_scalar
        )
    }
}

/// An element `(u, s)` of the Hilbert space, as returned by the resolvent.
#[pyclass(frozen, module = "sturmtx_py")]
struct Element {
    problem: Arc<ValidatedProblem>,
    inner: HilbertElement,
    #[pyo3(get)]
    residual: f64,
}

#[pymethods]
impl Element {
    #[getter]
    fn boundary_scalar(&self) -> f64 {
        self.inner.scalar()
    }

    /// `(u(x), u'(x))`; the derivative is NaN when the representation has none.
    #[pyo3(signature = (x, side = None))]
    fn __call__(&self, x: f64, side: Option<&str>) -> PyResult<(f64, f64)> {
        let piece = match parse_side(side)? {
            Some(s) => self.problem.locate_sided(x, s),
            None => self.problem.locate(x),
        }
        .map_err(to_py)?;
        let f = self.inner.function();
        let up = match f.derivative(piece, x) {
            Some(d) => d.map_err(to_py)?,
            None => f64::NAN,
        };
        Ok((f.eval(piece, x).map_err(to_py)?, up))
    }
}

#[pyclass(frozen, module = "sturmtx_py")]
struct Problem(Arc<ValidatedProblem>);

impl Problem {
    fn pairs(
        &self,
        py: Python<'_>,
        pairs: Vec<sturmtx::Eigenpair>,
    ) -> PyResult<Vec<Py<Eigenpair>>> {
        pairs
            .into_iter()
            .map(|p| {
                Py::new(
                    py,
                    Eigenpair {
                        problem: self.0.clone(),
                        phi: p.phi,
                        eigenvalue: p.lambda,
                        boundary_scalar: p.boundary_scalar,
                        norm_check: p.norm_check,
                        d_residual: p.d_residual,
                    },
                )
            })
            .collect()
    }
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        load_problem(path)
            .map(|p| Problem(Arc::new(p)))
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        parse_problem(text)
            .map(|p| Problem(Arc::new(p)))
            .map_err(to_py)
    }

    fn to_toml(&self) -> String {
        ProblemFile::from_spec(self.0.spec()).to_toml()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho()
    }

    #[getter]
    fn breakpoints(&self) -> (f64, f64) {
        (self.0.h1(), self.0.h2())
    }

    #[getter]
    fn self_adjoint(&self) -> bool {
        self.0.symmetry_condition_check().holds
    }

    /// `D(lambda)`.
    fn characteristic(&self, py: Python<'_>, lam: f64) -> PyResult<f64> {
        py.detach(|| characteristic(&self.0, lam, Tolerances::default()))
            .map_err(to_py)
    }

    /// The first `k` eigenpairs.
    #[pyo3(signature = (k, tol = 1e-10))]
    fn eigenpairs(&self, py: Python<'_>, k: usize, tol: f64) -> PyResult<Vec<Py<Eigenpair>>> {
        let s = settings(tol)?;
        let pairs = py
            .detach(|| first_eigenpairs(&self.0, k, s))
            .map_err(to_py)?;
        self.pairs(py, pairs)
    }

    /// Eigenpairs with eigenvalue in `[lambda_min, lambda_max]`.
    #[pyo3(signature = (lambda_max, lambda_min = None, tol = 1e-10))]
    fn eigenpairs_in(
        &self,
        py: Python<'_>,
        lambda_max: f64,
        lambda_min: Option<f64>,
        tol: f64,
    ) -> PyResult<Vec<Py<Eigenpair>>> {
        let s = settings(tol)?;
        let pairs = py
            .detach(|| {
                let lo = match lambda_min {
                    Some(lo) => lo,
                    None => spectrum_lower_bound(&self.0)?,
                };
                if !(lo < lambda_max) {
                    return Err(Error::InvalidArgument(format!(
                        "empty or inverted window [{lo}, {lambda_max}]"
                    )));
                }
                let found = find_eigenpairs(
                    &self.0,
                    lo,
                    lambda_max,
                    Grid::default_for(lo, lambda_max),
                    s,
                )?;
                match found.skipped.into_iter().next() {
                    Some((_, e)) => Err(e),
                    None => Ok(found.pairs),
                }
            })
            .map_err(to_py)?;
        self.pairs(py, pairs)
    }

    /// Discretization eigenvalues on a mesh with `m` cells per piece.
    #[pyo3(signature = (k, m = 128))]
    fn oracle_eigenvalues(&self, py: Python<'_>, k: usize, m: usize) -> PyResult<Vec<f64>> {
        py.detach(|| oracle_eigenvalues(&self.0, m, k))
            .map_err(to_py)
    }

    /// Solve `(K - lambda) U = (rhs, t2)`.
    #[pyo3(signature = (lam, rhs, t2 = 0.0))]
    fn resolvent(&self, py: Python<'_>, lam: f64, rhs: &str, t2: f64) -> PyResult<Element> {
        let t = rhs_element(rhs, t2)?;
        let (inner, residual) = py
            .detach(|| {
                let u = apply_resolvent(&self.0, lam, &t)?;
                let r = resolvent_residual(&self.0, lam, &t, &u)?;
                Ok((u, r.max()))
            })
            .map_err(to_py)?;
        Ok(Element {
            problem: self.0.clone(),
            inner,
            residual,
        })
    }

    /// Coefficients of `(rhs, t2)` in the first `terms` eigenelements, with diagnostics.
    #[pyo3(signature = (rhs, terms = 20, t2 = 0.0, tol = 1e-10))]
    fn expand<'py>(
        &self,
        py: Python<'py>,
        rhs: &str,
        terms: usize,
        t2: f64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = rhs_element(rhs, t2)?;
        let s = settings(tol)?;
        let (pairs, result, norm, parseval) = py
            .detach(|| {
                let pairs = first_eigenpairs(&self.0, terms, s)?;
                let result = expand(&self.0, &pairs, &t, terms)?;
                let norm = h_norm(&self.0, &t)?;
                let parseval = boundary_parseval(&self.0, &pairs, terms)?;
                Ok((pairs, result, norm, parseval))
            })
            .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item(
            "eigenvalues",
            pairs.iter().map(|p| p.lambda).collect::<Vec<_>>(),
        )?;
        out.set_item("coefficients", &result.coefficients)?;
        out.set_item("norm", norm)?;
        out.set_item("residual_norm", result.residual_norm)?;
        out.set_item("bessel_gap", result.bessel_gap(norm))?;
        out.set_item("boundary_parseval_sum", parseval.partial)?;
        out.set_item("boundary_parseval_target", parseval.target)?;
        Ok(out)
    }

    /// Run the invariant suite. Returns `(passed, checks)`.
    #[pyo3(signature = (level = "quick", tol = 1e-10))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        level: &str,
        tol: f64,
    ) -> PyResult<(bool, Vec<Bound<'py, PyDict>>)> {
        let level: VerifyLevel = level.parse().map_err(to_py)?;
        let s = settings(tol)?;
        let report = py.detach(|| run_verification(&self.0, level, s));
        let checks = report
            .checks
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("name", c.name)?;
                d.set_item("status", c.status.to_string())?;
                d.set_item("measured", c.measured)?;
                d.set_item("threshold", c.threshold)?;
                d.set_item("upper_bound", c.upper_bound)?;
                d.set_item("note", &c.note)?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok((report.passed(), checks))
    }
}

#[pymodule]
pub fn sturmtx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Eigenpair>()?;
    m.add_class::<Element>()?;
    m.add_class::<Expression>()?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add(
        "NearEigenvalueError",
        m.py().get_type::<NearEigenvalueError>(),
    )?;
    Ok(())
}
