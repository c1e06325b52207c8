use super::{Counted, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{CayleyStep, StiefelPoint};
use crate::objectives::{Evaluation, Objective};

#[derive(Clone, Debug)]
pub struct LineSearchOutcome {
    pub gamma: f64,
    pub point: StiefelPoint,
    pub value: f64,
    /// `f(X₊) − f(Y)`, formed without cancellation where the objective allows.
    pub change: f64,
    /// Objective evaluations spent (one per trial step).
    pub trials: usize,
}

/// Two-sided Armijo search along `X₊(γ) = R(Y, −γ·φ_g(∇f(Y)))`.
///
/// First grows γ by `λ_d` while `f(X₊) < f(Y) − c_L·γ‖∇f(Y)‖²`, then shrinks it
/// by `λ_d` while `f(X₊) > f(Y) − ½γ‖∇f(Y)‖²`. On success the returned point
/// satisfies the Armijo condition with factor ½. `at` must be an evaluation
/// of `objective` at the base point `Y`. Both tests use
/// [`Objective::value_change`] so they stay meaningful near a minimizer.
pub fn line_search<O: Objective + ?Sized>(
    objective: &O,
    at: &Evaluation,
    gamma_in: f64,
    config: &SolverConfig,
) -> Result<LineSearchOutcome> {
    let counted = Counted::new(objective);
    search(&counted, at, gamma_in, config)
}

pub(crate) fn search<O: Objective + ?Sized>(
    objective: &Counted<'_, O>,
    at: &Evaluation,
    gamma_in: f64,
    config: &SolverConfig,
) -> Result<LineSearchOutcome> {
    if !(gamma_in > 0.0 && gamma_in.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {gamma_in}"
        )));
    }
    let f_y = at.value;
    let base = at.gradient.base();
    let norm_sq = at.gradient_norm_sq;
    let step = CayleyStep::new(&at.gradient);
    let mut trials = 0usize;
    let mut try_step = |gamma: f64| -> Result<(StiefelPoint, f64)> {
        trials += 1;
        match step.at(-gamma) {
            Ok(p) => {
                let d = objective.value_change(base, f_y, &p)?;
                Ok((p, if d.is_finite() { d } else { f64::INFINITY }))
            }
            // A step too long for the Cayley solve counts as no decrease.
            Err(Error::RetractionFailed) => Ok((base.clone(), f64::INFINITY)),
            Err(e) => Err(e),
        }
    };

    let mut gamma = gamma_in;
    let (mut point, mut change) = try_step(gamma)?;

    let mut grown = 0;
    while change < -config.c_l * gamma * norm_sq {
        if grown == config.max_linesearch_steps {
            return Err(Error::LineSearchFailed { trials: grown + 1 });
        }
        grown += 1;
        gamma *= config.lambda_d;
        (point, change) = try_step(gamma)?;
    }

    let mut shrunk = 0;
    while change > -0.5 * gamma * norm_sq {
        if shrunk == config.max_linesearch_steps {
            return Err(Error::LineSearchFailed {
                trials: grown + shrunk + 1,
            });
        }
        shrunk += 1;
        gamma /= config.lambda_d;
        (point, change) = try_step(gamma)?;
    }

    Ok(LineSearchOutcome {
        gamma,
        point,
        value: f_y + change,
        change,
        trials,
    })
}
