//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use stiefel_accel as core;
use stiefel_accel::{DenseMatrix, MomentumSchedule, ObjectiveSpec, SolverConfig, SpectrumInfo};

fn py_err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(rows).map_err(py_err)
}

fn spectrum(eigenvalues: Vec<f64>) -> PyResult<SpectrumInfo> {
    SpectrumInfo::new(eigenvalues).map_err(py_err)
}

/// A point on the Stiefel manifold: an n×k matrix with orthonormal columns.
#[pyclass(name = "StiefelPoint", frozen, from_py_object)]
#[derive(Clone)]
struct PyStiefelPoint(core::StiefelPoint);

#[pymethods]
impl PyStiefelPoint {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        core::StiefelPoint::new(matrix(&rows)?).map(Self).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.matrix().to_rows()
    }

    /// `‖XᵀX − I‖_F`.
    fn orthonormality_error(&self) -> f64 {
        self.0.orthonormality_error()
    }

    fn __repr__(&self) -> String {
        format!("StiefelPoint(n={}, k={})", self.0.n(), self.0.k())
    }
}

fn dual(x: &PyStiefelPoint, w: &[Vec<f64>]) -> PyResult<core::DualTangentVector> {
    core::DualTangentVector::new(&x.0, matrix(w)?).map_err(py_err)
}

#[pyfunction]
fn random_point(n: usize, k: usize, seed: u64) -> PyResult<PyStiefelPoint> {
    core::random_point(n, k, seed).map(PyStiefelPoint).map_err(py_err)
}

/// Projects an arbitrary n×k matrix onto the dual tangent space at `x`.
#[pyfunction]
fn project_dual(x: &PyStiefelPoint, raw: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let w = core::geometry::project_dual(&x.0, &matrix(&raw)?).map_err(py_err)?;
    Ok(w.matrix().to_rows())
}

#[pyfunction]
#[pyo3(signature = (x, w, scale = 1.0))]
fn cayley_retract(x: &PyStiefelPoint, w: Vec<Vec<f64>>, scale: f64) -> PyResult<PyStiefelPoint> {
    core::cayley_retract(&x.0, &dual(x, &w)?, scale)
        .map(PyStiefelPoint)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, w, t = 1.0))]
fn geodesic_retract(x: &PyStiefelPoint, w: Vec<Vec<f64>>, t: f64) -> PyResult<PyStiefelPoint> {
    core::geodesic_retract(&x.0, &dual(x, &w)?, t)
        .map(PyStiefelPoint)
        .map_err(py_err)
}

/// The dual tangent vector `W` at `x` with `cayley_retract(x, W) == y`.
#[pyfunction]
fn retract_inverse(x: &PyStiefelPoint, y: &PyStiefelPoint) -> PyResult<Vec<Vec<f64>>> {
    let w = core::retract_inverse(&x.0, &y.0).map_err(py_err)?;
    Ok(w.matrix().to_rows())
}

/// Moves along the retraction curve through `x` (α = 0) and `y` (α = 1).
#[pyfunction]
fn lerp(x: &PyStiefelPoint, y: &PyStiefelPoint, alpha: f64) -> PyResult<PyStiefelPoint> {
    core::lerp(&x.0, &y.0, alpha).map(PyStiefelPoint).map_err(py_err)
}

#[pyfunction]
fn optimal_weights(eigenvalues: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    core::optimal_weights(&spectrum(eigenvalues)?, k).map_err(py_err)
}

#[pyfunction]
fn sphere_condition_number(eigenvalues: Vec<f64>) -> PyResult<f64> {
    core::sphere_condition_number(&spectrum(eigenvalues)?).map_err(py_err)
}

#[pyfunction]
fn brockett_condition_number(eigenvalues: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    core::brockett_condition_number(&spectrum(eigenvalues)?, &weights).map_err(py_err)
}

#[pyfunction]
fn known_minimum(eigenvalues: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    core::known_minimum(&spectrum(eigenvalues)?, &weights).map_err(py_err)
}

#[pyclass(name = "SolveResult", frozen, get_all)]
struct PySolveResult {
    point: PyStiefelPoint,
    value: f64,
    relative_grad_norm: f64,
    iterations: usize,
    restarts: usize,
    function_evals: usize,
    gradient_evals: usize,
    termination: String,
    max_orthonormality_error: f64,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(termination={:?}, value={}, iterations={}, restarts={})",
            self.termination, self.value, self.iterations, self.restarts
        )
    }
}

/// Minimizes `½ Σ_j α_j x_jᵀ A x_j` with `A = diag(eigenvalues)` (or a dense
/// symmetric `operator`), starting from `x0` or a seeded random point.
#[pyfunction]
#[pyo3(signature = (
    eigenvalues = None, weights = None, *, operator = None, method = "agd-function", x0 = None, seed = 0,
    tol = 1e-10, gamma0 = 0.1, lambda_d = 1.7, c_l = 0.7, c_r = 0.01, max_iter = 2_000_000,
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    eigenvalues: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    operator: Option<Vec<Vec<f64>>>,
    method: &str,
    x0: Option<PyStiefelPoint>,
    seed: u64,
    tol: f64,
    gamma0: f64,
    lambda_d: f64,
    c_l: f64,
    c_r: f64,
    max_iter: usize,
) -> PyResult<PySolveResult> {
    let op = match (eigenvalues, operator) {
        (Some(ev), None) => spectrum(ev)?.diagonal_operator(),
        (None, Some(rows)) => core::Operator::Dense(matrix(&rows)?),
        _ => return Err(PyValueError::new_err("give exactly one of eigenvalues or operator")),
    };
    let weights = weights.unwrap_or_else(|| vec![1.0]);
    let objective = ObjectiveSpec::new(op, weights).map_err(py_err)?;
    let x0 = match x0 {
        Some(p) => p.0,
        None => core::random_point(objective.n(), objective.k(), seed).map_err(py_err)?,
    };
    let config = SolverConfig {
        gamma0,
        lambda_d,
        c_l,
        c_r,
        epsilon: tol,
        max_iter,
        record_history: false,
        ..SolverConfig::default()
    };
    let trace = match method {
        "gd" => core::gradient_descent(&objective, &x0, &config),
        "agd-function" => core::agd_function_restart(&objective, &x0, &config, MomentumSchedule::Linear),
        "agd-gradient" => core::agd_gradient_restart(&objective, &x0, &config, MomentumSchedule::Linear),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
    .map_err(py_err)?;
    Ok(PySolveResult {
        value: trace.final_value,
        relative_grad_norm: trace.relative_grad_norm(),
        iterations: trace.iterations,
        restarts: trace.restarts,
        function_evals: trace.function_evals,
        gradient_evals: trace.gradient_evals,
        termination: trace.termination.to_string(),
        max_orthonormality_error: trace.max_orthonormality_error,
        point: PyStiefelPoint(trace.final_point),
    })
}

#[pymodule]
#[pyo3(name = "stiefel_accel")]
fn stiefel_accel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStiefelPoint>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(random_point, m)?)?;
    m.add_function(wrap_pyfunction!(project_dual, m)?)?;
    m.add_function(wrap_pyfunction!(cayley_retract, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_retract, m)?)?;
    m.add_function(wrap_pyfunction!(retract_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(lerp, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_weights, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_condition_number, m)?)?;
    m.add_function(wrap_pyfunction!(brockett_condition_number, m)?)?;
    m.add_function(wrap_pyfunction!(known_minimum, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
