//! First-order solvers on the Stiefel manifold and Euclidean references.
//!
//! [`gradient_descent`], [`agd_function_restart`] and [`agd_gradient_restart`]
//! share one two-sided Armijo line search ([`line_search`]) built on the
//! Cayley retraction. The accelerated variants form their momentum step by
//! inverting the retraction between consecutive iterates and extrapolating
//! along it.

mod euclidean;
mod line_search;
mod riemannian;

use std::cell::Cell;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::geometry::StiefelPoint;
use crate::objectives::{Evaluation, Objective};

pub use euclidean::{euclidean_agd, lyapunov_value, EuclideanMode, EuclideanTrajectory, StepRule};
pub use line_search::{line_search, LineSearchOutcome};
pub use riemannian::{agd_function_restart, agd_gradient_restart, gradient_descent};

/// Solver tunables.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Initial step size γ₀.
    pub gamma0: f64,
    /// Line-search growth/shrink factor λ_d > 1.
    pub lambda_d: f64,
    /// Grow the step while the decrease beats `c_L·γ‖∇f‖²`; needs `½ < c_L < 1`.
    pub c_l: f64,
    /// Restart unless `f` drops by at least `c_R·γ‖∇f(Y)‖²`.
    pub c_r: f64,
    /// Relative gradient tolerance: stop once `‖∇f(X_t)‖ ≤ ε‖∇f(X₀)‖`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Cap on trials in each of the grow and shrink loops.
    pub max_linesearch_steps: usize,
    /// Keep one [`IterationRecord`] per iteration.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma0: 0.1,
            lambda_d: 1.7,
            c_l: 0.7,
            c_r: 0.01,
            epsilon: 1e-10,
            max_iter: 2_000_000,
            max_linesearch_steps: 60,
            record_history: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad(format!("gamma0 must be positive, got {}", self.gamma0));
        }
        if !(self.lambda_d > 1.0 && self.lambda_d.is_finite()) {
            return bad(format!("lambda_d must exceed 1, got {}", self.lambda_d));
        }
        if !(self.c_l > 0.5 && self.c_l < 1.0) {
            return bad(format!("c_L must lie in (1/2, 1), got {}", self.c_l));
        }
        if !(self.c_r > 0.0 && self.c_r.is_finite()) {
            return bad(format!("c_R must be positive, got {}", self.c_r));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_linesearch_steps == 0 {
            return bad("max_linesearch_steps must be positive".into());
        }
        Ok(())
    }
}

/// Momentum sequence `q_t`; the extrapolation after `k` accepted steps uses
/// `α_k = q_k/(2 + q_{k+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum MomentumSchedule {
    /// `q_t = t`, so `α_k = k/(k + 3)`.
    #[default]
    Linear,
    /// `q_t = c·t` with `0 < c ≤ 1`.
    Scaled(f64),
}

impl MomentumSchedule {
    pub fn q(&self, t: usize) -> f64 {
        match *self {
            MomentumSchedule::Linear => t as f64,
            MomentumSchedule::Scaled(c) => c * t as f64,
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.q(k) / (2.0 + self.q(k + 1))
    }

    /// Multiplier applied to the inverse-retraction vector: `1 + α_k`.
    pub fn extrapolation_factor(&self, k: usize) -> f64 {
        1.0 + self.alpha(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MomentumSchedule::Linear => Ok(()),
            MomentumSchedule::Scaled(c) if c > 0.0 && c <= 1.0 => Ok(()),
            MomentumSchedule::Scaled(c) => Err(Error::InvalidConfig(format!(
                "momentum scale must lie in (0, 1], got {c}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::LineSearchFailed => "line_search_failed",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One iteration `X_t → X_{t+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// `f(X_{t+1})`
    pub value: f64,
    /// `‖∇f(X_{t+1})‖_{g*}`
    pub grad_norm: f64,
    /// Step size accepted by the line search.
    pub gamma: f64,
    /// `‖∇f(Y_t)‖²_{g*}`, the gradient the step was taken along.
    pub step_grad_norm_sq: f64,
    pub restarted: bool,
    /// Momentum counter after this iteration.
    pub momentum_k: usize,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub restarts: usize,
    pub function_evals: usize,
    pub gradient_evals: usize,
    pub wall_time: Duration,
    pub termination: Termination,
    pub final_point: StiefelPoint,
    pub initial_value: f64,
    pub final_value: f64,
    pub initial_grad_norm: f64,
    pub final_grad_norm: f64,
    /// Largest `‖XᵀX − I‖_F` over every `X_t` and `Y_t` of the run.
    pub max_orthonormality_error: f64,
}

impl RunTrace {
    pub fn relative_grad_norm(&self) -> f64 {
        if self.initial_grad_norm == 0.0 {
            0.0
        } else {
            self.final_grad_norm / self.initial_grad_norm
        }
    }
}

/// Objective wrapper that counts calls. Every `value_change` call
/// is one function evaluation; every `evaluate` call is one function and one
/// gradient evaluation.
pub(crate) struct Counted<'a, O: ?Sized> {
    inner: &'a O,
    f_evals: Cell<usize>,
    g_evals: Cell<usize>,
}

impl<'a, O: Objective + ?Sized> Counted<'a, O> {
    pub(crate) fn new(inner: &'a O) -> Self {
        Self {
            inner,
            f_evals: Cell::new(0),
            g_evals: Cell::new(0),
        }
    }

    pub(crate) fn value_change(&self, from: &StiefelPoint, from_value: f64, to: &StiefelPoint) -> Result<f64> {
        self.f_evals.set(self.f_evals.get() + 1);
        self.inner.value_change(from, from_value, to)
    }

    pub(crate) fn evaluate(&self, x: &StiefelPoint) -> Result<Evaluation> {
        self.f_evals.set(self.f_evals.get() + 1);
        self.g_evals.set(self.g_evals.get() + 1);
        self.inner.evaluate(x)
    }

    pub(crate) fn counts(&self) -> (usize, usize) {
        (self.f_evals.get(), self.g_evals.get())
    }
}
