//! Accelerated gradient descent in `ℝⁿ`, used as a reference for the
//! Lyapunov analysis that the manifold methods mirror.

use super::MomentumSchedule;
use crate::error::{Error, Result};

/// Step size rule for the q-schedule variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Start from `initial`, then carry γ over and shrink it by `shrink` until
    /// `f(y − γ∇f(y)) ≤ f(y) − ½γ‖∇f(y)‖²`. The sequence is non-increasing.
    Backtracking {
        initial: f64,
        shrink: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EuclideanMode {
    /// `α_t = q_t/(2 + q_{t+1})`.
    QSchedule { schedule: MomentumSchedule, step: StepRule },
    /// Constant `α = (√L − √μ)/(√L + √μ)` and `γ = 1/L`.
    StronglyConvex { mu: f64, l: f64 },
}

/// `x[t]` and `y[t]` for `t = 0..=steps`; `gamma[t]` is the step taken from
/// `y[t]`; `q[t]` is the schedule value (zero in strongly convex mode).
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanTrajectory {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub q: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn step_from(y: &[f64], g: &[f64], gamma: f64) -> Vec<f64> {
    y.iter().zip(g).map(|(yi, gi)| yi - gamma * gi).collect()
}

/// `x_{t+1} = y_t − γ_t∇f(y_t)`, `y_{t+1} = x_{t+1} + α_t(x_{t+1} − x_t)`,
/// starting from `y_0 = x_0`.
pub fn euclidean_agd<F, G>(f: F, grad: G, x0: &[f64], mode: EuclideanMode, steps: usize) -> Result<EuclideanTrajectory>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let (mut gamma, schedule) = match mode {
        EuclideanMode::StronglyConvex { mu, l } => {
            if !(mu > 0.0 && l >= mu && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("need 0 < μ ≤ L, got μ={mu}, L={l}")));
            }
            (1.0 / l, None)
        }
        EuclideanMode::QSchedule { schedule, step } => {
            schedule.validate()?;
            let g0 = match step {
                StepRule::Fixed(g) => g,
                StepRule::Backtracking { initial, shrink } => {
                    if !(shrink > 0.0 && shrink < 1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "shrink factor must lie in (0, 1), got {shrink}"
                        )));
                    }
                    initial
                }
            };
            if !(g0 > 0.0 && g0.is_finite()) {
                return Err(Error::InvalidConfig(format!("step size must be positive, got {g0}")));
            }
            (g0, Some((schedule, step)))
        }
    };

    let q_at = |t: usize| schedule.map_or(0.0, |(s, _)| s.q(t));
    let mut traj = EuclideanTrajectory {
        x: vec![x0.to_vec()],
        y: vec![x0.to_vec()],
        gamma: Vec::with_capacity(steps),
        q: vec![q_at(0)],
    };

    for t in 0..steps {
        let y = &traj.y[t];
        let g = grad(y);
        if g.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "gradient has length {}, point has {}",
                g.len(),
                y.len()
            )));
        }
        if let Some((_, StepRule::Backtracking { shrink, .. })) = schedule {
            let fy = f(y);
            let gg = dot(&g, &g);
            let mut tries = 0;
            while f(&step_from(y, &g, gamma)) > fy - 0.5 * gamma * gg {
                tries += 1;
                if tries > 200 {
                    return Err(Error::LineSearchFailed { trials: tries });
                }
                gamma *= shrink;
            }
        }
        let x_next = step_from(y, &g, gamma);
        let alpha = match mode {
            EuclideanMode::StronglyConvex { mu, l } => (l.sqrt() - mu.sqrt()) / (l.sqrt() + mu.sqrt()),
            EuclideanMode::QSchedule { .. } => q_at(t) / (2.0 + q_at(t + 1)),
        };
        let y_next = x_next
            .iter()
            .zip(&traj.x[t])
            .map(|(a, b)| a + alpha * (a - b))
            .collect();
        traj.gamma.push(gamma);
        traj.x.push(x_next);
        traj.y.push(y_next);
        traj.q.push(q_at(t + 1));
    }
    Ok(traj)
}

/// `J_t = γ_t q_t(q_t + 2)(f(x_t) − f*) + ½‖2(y_t − x*) + q_t(y_t − x_t)‖²`.
/// `f_gap` is `f(x_t) − f*`.
pub fn lyapunov_value(x_t: &[f64], y_t: &[f64], f_gap: f64, gamma_t: f64, q_t: f64, x_star: &[f64]) -> f64 {
    let sq: f64 = x_t
        .iter()
        .zip(y_t)
        .zip(x_star)
        .map(|((x, y), s)| {
            let v = 2.0 * (y - s) + q_t * (y - x);
            v * v
        })
        .sum();
    gamma_t * q_t * (q_t + 2.0) * f_gap + 0.5 * sq
}
