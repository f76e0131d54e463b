//! Python bindings: lattices, convex functions, transforms, polar calculus and path solvers.

use nalgebra::DMatrix;
use polarity::calculus::{self, PolarGradientResult};
use polarity::pde::{self, SolveOptions, TimePath};
use polarity::verify::{self, Suite};
use polarity::{
    transforms, AnalyticConvexFunction, ConvexFunction, FunctionDescriptor, GridFunction,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(polarity, PolarityError, PyValueError);

fn err(e: polarity::Error) -> PyErr {
    PolarityError::new_err(e.to_string())
}

type PyRes<T> = PyResult<T>;

/// Rectangular lattice containing the origin as a node.
#[pyclass(name = "Lattice", module = "polarity", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyLattice(polarity::Lattice);

#[pymethods]
impl PyLattice {
    #[new]
    fn new(bounds: Vec<(f64, f64)>, shape: Vec<usize>) -> PyRes<Self> {
        let b: Vec<[f64; 2]> = bounds.into_iter().map(|(lo, hi)| [lo, hi]).collect();
        polarity::Lattice::new(&b, &shape).map(Self).map_err(err)
    }

    /// `[-radius, radius]^dim` with `n` nodes per axis.
    #[staticmethod]
    fn symmetric(dim: usize, radius: f64, n: usize) -> PyRes<Self> {
        polarity::Lattice::symmetric(dim, radius, n)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.0.bounds().iter().map(|b| (b[0], b[1])).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Node coordinates in row-major order.
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.0.len()).map(|k| self.0.point_vec(k)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Lattice(bounds={:?}, shape={:?})",
            self.bounds(),
            self.shape()
        )
    }
}

/// Geometric convex function, either closed form or tabulated on a lattice.
#[pyclass(name = "Function", module = "polarity", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFunction(ConvexFunction);

impl PyFunction {
    fn analytic(f: AnalyticConvexFunction) -> PyRes<Self> {
        f.validate().map_err(err)?;
        Ok(Self(ConvexFunction::Analytic(f)))
    }

    fn closed_form(&self) -> PyRes<&AnalyticConvexFunction> {
        match &self.0 {
            ConvexFunction::Analytic(f) => Ok(f),
            ConvexFunction::Grid(_) => {
                Err(PolarityError::new_err("expected a closed-form function"))
            }
        }
    }

    /// Grid values, sampling closed forms on the default lattice of their dimension.
    fn grid(&self) -> PyRes<GridFunction> {
        match &self.0 {
            ConvexFunction::Grid(g) => Ok(g.clone()),
            ConvexFunction::Analytic(f) => {
                GridFunction::sample(f, &verify::default_lattice(f.dim()).map_err(err)?)
                    .map_err(err)
            }
        }
    }
}

#[pymethods]
impl PyFunction {
    /// `‖x‖²`.
    #[staticmethod]
    fn squared_norm(dim: usize) -> PyRes<Self> {
        Self::analytic(AnalyticConvexFunction::squared_norm(dim))
    }

    /// `‖x‖_p`, with `p = inf` for the max norm.
    #[staticmethod]
    fn norm(dim: usize, p: f64) -> PyRes<Self> {
        Self::analytic(AnalyticConvexFunction::norm(dim, p))
    }

    /// `scale · ‖x‖_p^q`.
    #[staticmethod]
    #[pyo3(signature = (dim, p, q, scale = 1.0))]
    fn power(dim: usize, p: f64, q: f64, scale: f64) -> PyRes<Self> {
        Self::analytic(AnalyticConvexFunction::power(dim, p, q, scale))
    }

    /// `½⟨Ax, x⟩` for a symmetric positive definite `A`.
    #[staticmethod]
    fn quadratic(a: Vec<Vec<f64>>) -> PyRes<Self> {
        Self::analytic(AnalyticConvexFunction::quadratic(a))
    }

    #[staticmethod]
    fn from_values(lattice: &PyLattice, values: Vec<f64>) -> PyRes<Self> {
        let values = values.into_iter().map(polarity::ExtReal::new).collect();
        GridFunction::new(lattice.0.clone(), values)
            .map(|g| Self(ConvexFunction::Grid(g)))
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyRes<Self> {
        FunctionDescriptor::from_json(text)
            .and_then(|d| d.to_function())
            .map(Self)
            .map_err(err)
    }

    fn to_json(&self) -> PyRes<String> {
        FunctionDescriptor::from_function(&self.0)
            .to_json()
            .map_err(err)
    }

    fn sample(&self, lattice: &PyLattice) -> PyRes<Self> {
        GridFunction::sample(self.closed_form()?, &lattice.0)
            .map(|g| Self(ConvexFunction::Grid(g)))
            .map_err(err)
    }

    fn __add__(&self, other: &PyFunction) -> PyRes<Self> {
        match (&self.0, &other.0) {
            (ConvexFunction::Analytic(a), ConvexFunction::Analytic(b)) => {
                Self::analytic(AnalyticConvexFunction::sum(vec![a.clone(), b.clone()]))
            }
            _ => {
                let (a, b) = (self.grid()?, other.grid()?);
                a.add(&b)
                    .map(|g| Self(ConvexFunction::Grid(g)))
                    .map_err(err)
            }
        }
    }

    fn __mul__(&self, t: f64) -> PyRes<Self> {
        match &self.0 {
            ConvexFunction::Analytic(f) => {
                Self::analytic(AnalyticConvexFunction::scaled(t, f.clone()))
            }
            ConvexFunction::Grid(g) => g
                .scaled(t)
                .map(|g| Self(ConvexFunction::Grid(g)))
                .map_err(err),
        }
    }

    fn __rmul__(&self, t: f64) -> PyRes<Self> {
        self.__mul__(t)
    }

    fn __call__(&self, x: Vec<f64>) -> PyRes<f64> {
        self.0.evaluate(&x).map(|v| v.value()).map_err(err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyRes<Vec<f64>> {
        self.0.gradient(&x).map_err(err)
    }

    fn hessian(&self, x: Vec<f64>) -> PyRes<Vec<Vec<f64>>> {
        self.0.hessian(&x).map(|h| rows(&h)).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn is_grid(&self) -> bool {
        self.0.as_grid().is_some()
    }

    /// Lattice of a tabulated function, `None` for closed forms.
    #[getter]
    fn lattice(&self) -> Option<PyLattice> {
        self.0.as_grid().map(|g| PyLattice(g.lattice().clone()))
    }

    /// Tabulated values with `inf` off the domain, `None` for closed forms.
    #[getter]
    fn values(&self) -> Option<Vec<f64>> {
        self.0
            .as_grid()
            .map(|g| g.values().iter().map(|v| v.value()).collect())
    }

    fn __repr__(&self) -> String {
        match &self.0 {
            ConvexFunction::Analytic(f) => format!("Function({f:?})"),
            ConvexFunction::Grid(g) => format!("Function(grid, shape={:?})", g.lattice().shape()),
        }
    }

    fn __eq__(&self, other: &PyFunction) -> bool {
        self.0 == other.0
    }
}

/// Time-indexed frames produced by a path solver.
#[pyclass(name = "Path", module = "polarity", frozen)]
pub struct PyPath(TimePath);

#[pymethods]
impl PyPath {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    #[getter]
    fn frames(&self) -> Vec<PyFunction> {
        self.0
            .frames()
            .iter()
            .map(|g| PyFunction(ConvexFunction::Grid(g.clone())))
            .collect()
    }

    #[getter]
    fn advisories(&self) -> Vec<String> {
        self.0.advisories.clone()
    }

    fn frame_at(&self, t: f64) -> PyRes<PyFunction> {
        let k = self.0.index_of(t).map_err(err)?;
        let g = self.0.frame(k).map_err(err)?;
        Ok(PyFunction(ConvexFunction::Grid(g.clone())))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// One row of a verification suite.
#[pyclass(name = "CheckRow", module = "polarity", frozen, get_all)]
pub struct PyCheckRow {
    suite: String,
    check: String,
    measured: f64,
    /// `"at_most"` or `"at_least"`.
    bound: &'static str,
    tolerance: f64,
    passed: bool,
    note: Option<String>,
}

#[pymethods]
impl PyCheckRow {
    fn __repr__(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let op = if self.bound == "at_least" { ">=" } else { "<=" };
        format!(
            "{tag} {}/{}: {:.3e} {op} {:.3e}",
            self.suite, self.check, self.measured, self.tolerance
        )
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn grid_result(g: GridFunction) -> PyFunction {
    PyFunction(ConvexFunction::Grid(g))
}

fn dual_or_default(
    f: &GridFunction,
    dual: Option<&PyLattice>,
) -> polarity::Result<polarity::Lattice> {
    match dual {
        Some(d) => Ok(d.0.clone()),
        None => transforms::dual_lattice(f.lattice(), None, None),
    }
}

/// Discrete Legendre transform. The dual lattice defaults to the reciprocal box.
#[pyfunction]
#[pyo3(signature = (f, dual = None))]
fn legendre(f: &PyFunction, dual: Option<&PyLattice>) -> PyRes<PyFunction> {
    let g = f.grid()?;
    let d = dual_or_default(&g, dual).map_err(err)?;
    transforms::legendre(&g, &d)
        .map(|r| grid_result(r.output))
        .map_err(err)
}

/// Polar transform. Closed forms with a known rule stay closed form when no lattice is given.
#[pyfunction]
#[pyo3(signature = (f, dual = None))]
fn polar(f: &PyFunction, dual: Option<&PyLattice>) -> PyRes<PyFunction> {
    if let (ConvexFunction::Analytic(a), None) = (&f.0, dual) {
        if let Ok(p) = transforms::polar_analytic(a) {
            return Ok(PyFunction(ConvexFunction::Analytic(p)));
        }
    }
    let g = f.grid()?;
    let d = dual_or_default(&g, dual).map_err(err)?;
    transforms::polar(&g, &d)
        .map(|r| grid_result(r.output))
        .map_err(err)
}

/// Double polar, the largest geometric convex minorant on the input lattice.
#[pyfunction]
#[pyo3(signature = (f, dual = None))]
fn envelope(f: &PyFunction, dual: Option<&PyLattice>) -> PyRes<PyFunction> {
    let g = f.grid()?;
    let d = match dual {
        Some(d) => d.0.clone(),
        None => verify::involution_dual(g.lattice()).map_err(err)?,
    };
    transforms::geometric_envelope_with(&g, &d)
        .map(grid_result)
        .map_err(err)
}

/// J transform of a one-dimensional function, output on `out` or the input lattice.
#[pyfunction]
#[pyo3(signature = (f, out = None))]
fn j_transform(f: &PyFunction, out: Option<&PyLattice>) -> PyRes<PyFunction> {
    let g = f.grid()?;
    let out = out.map_or_else(|| g.lattice().clone(), |l| l.0.clone());
    transforms::j_transform(&g, &out)
        .map(grid_result)
        .map_err(err)
}

/// Geometric inf-convolution through the polar of the sum of polars.
#[pyfunction]
#[pyo3(signature = (f, g, dual = None))]
fn ginf(f: &PyFunction, g: &PyFunction, dual: Option<&PyLattice>) -> PyRes<PyFunction> {
    let (a, b) = (f.grid()?, g.grid()?);
    let d = match dual {
        Some(d) => d.0.clone(),
        None => verify::involution_dual(a.lattice()).map_err(err)?,
    };
    polarity::ginfconv::ginf_dual(&a, &b, &d)
        .map(|r| grid_result(r.output))
        .map_err(err)
}

/// `(y, Pf(y))` for the polar gradient at `x`, `None` when it is empty.
#[pyfunction]
fn polar_gradient(f: &PyFunction, x: Vec<f64>) -> PyRes<Option<(Vec<f64>, f64)>> {
    match calculus::polar_gradient(&f.0, &x).map_err(err)? {
        PolarGradientResult::Empty { .. } => Ok(None),
        r => r.into_point(&x).map(Some).map_err(err),
    }
}

/// Hessians of `f` at `x` and of its polar at the polar gradient, with the identity residuals.
#[pyfunction]
fn hessian_of_polar(f: &PyFunction, x: Vec<f64>) -> PyRes<PyHessian> {
    let h = calculus::hessian_of_polar(f.closed_form()?, &x).map_err(err)?;
    Ok(PyHessian {
        hess_f: rows(&h.hess_f),
        hess_polar: rows(&h.hess_polar),
        f_value: h.f_value,
        polar_value: h.polar_value,
        det_residual: h.det_residual,
        transfer_residual: h.transfer_residual,
    })
}

#[pyclass(name = "HessianTransfer", module = "polarity", frozen, get_all)]
pub struct PyHessian {
    hess_f: Vec<Vec<f64>>,
    hess_polar: Vec<Vec<f64>>,
    f_value: f64,
    polar_value: f64,
    det_residual: f64,
    transfer_residual: f64,
}

fn opts_for(f: &GridFunction, dual: Option<&PyLattice>) -> PyRes<SolveOptions> {
    let d = match dual {
        Some(d) => d.0.clone(),
        None => verify::involution_dual(f.lattice()).map_err(err)?,
    };
    Ok(SolveOptions::new(d))
}

/// Polar Hamilton-Jacobi path `P(Pf + t g)` with `g` sampled on the dual lattice.
#[pyfunction]
#[pyo3(signature = (f, g, times, dual = None))]
fn solve_hj(
    f: &PyFunction,
    g: &PyFunction,
    times: Vec<f64>,
    dual: Option<&PyLattice>,
) -> PyRes<PyPath> {
    let f = f.grid()?;
    let opts = opts_for(&f, dual)?;
    let g = match &g.0 {
        ConvexFunction::Analytic(a) => GridFunction::sample(a, &opts.dual).map_err(err)?,
        ConvexFunction::Grid(grid) => grid.clone(),
    };
    pde::solve_polar_hj(&f, &g, &times, &opts)
        .map(|s| PyPath(s.path))
        .map_err(err)
}

/// Interpolating Monge-Ampère path from `u0` at 0 to `u1` at `t_end`.
#[pyfunction]
#[pyo3(signature = (u0, u1, t_end, times, dual = None))]
fn solve_ma_dirichlet(
    u0: &PyFunction,
    u1: &PyFunction,
    t_end: f64,
    times: Vec<f64>,
    dual: Option<&PyLattice>,
) -> PyRes<PyPath> {
    let a = u0.grid()?;
    let b = match &u1.0 {
        ConvexFunction::Analytic(f) => GridFunction::sample(f, a.lattice()).map_err(err)?,
        ConvexFunction::Grid(g) => g.clone(),
    };
    let opts = opts_for(&a, dual)?;
    pde::solve_ma_dirichlet(&a, &b, t_end, &times, &opts)
        .map(PyPath)
        .map_err(err)
}

/// Monge-Ampère Cauchy path. Returns the frames, the maximal time estimate and the refused times.
#[pyfunction]
#[pyo3(signature = (u0, du0, times, dual = None))]
fn solve_ma_cauchy(
    u0: &PyFunction,
    du0: Vec<f64>,
    times: Vec<f64>,
    dual: Option<&PyLattice>,
) -> PyRes<(PyPath, f64, Vec<f64>)> {
    let a = u0.grid()?;
    let opts = opts_for(&a, dual)?;
    let s = pde::solve_ma_cauchy_partial(&a, &du0, &times, &opts).map_err(err)?;
    Ok((PyPath(s.path), s.t_est, s.refused))
}

/// Runs a verification suite on its builtin catalog, or on `f` when given.
#[pyfunction]
#[pyo3(signature = (suite = "all", f = None))]
fn run_verify(suite: &str, f: Option<&PyFunction>) -> PyRes<Vec<PyCheckRow>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let rows = match f {
        Some(f) => verify::run_on_input(suite, &f.0),
        None => verify::run_builtin(suite),
    };
    Ok(rows
        .into_iter()
        .map(|r| PyCheckRow {
            suite: r.suite.to_string(),
            check: r.check.to_string(),
            measured: r.measured,
            bound: match r.bound {
                verify::Bound::AtMost => "at_most",
                verify::Bound::AtLeast => "at_least",
            },
            tolerance: r.tolerance,
            passed: r.pass,
            note: r.note,
        })
        .collect())
}

#[pymodule]
#[pyo3(name = "polarity")]
fn polarity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PolarityError", m.py().get_type::<PolarityError>())?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyFunction>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyCheckRow>()?;
    m.add_class::<PyHessian>()?;
    m.add_function(wrap_pyfunction!(legendre, m)?)?;
    m.add_function(wrap_pyfunction!(polar, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(j_transform, m)?)?;
    m.add_function(wrap_pyfunction!(ginf, m)?)?;
    m.add_function(wrap_pyfunction!(polar_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(hessian_of_polar, m)?)?;
    m.add_function(wrap_pyfunction!(solve_hj, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ma_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ma_cauchy, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
