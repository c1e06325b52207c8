//! Accelerated first-order optimization on the Stiefel manifold
//! `S(n, k) = {X ∈ ℝ^{n×k} : XᵀX = I}` under the canonical metric.
//!
//! Gradients live in the dual (cotangent) representation, steps are taken
//! with the Cayley retraction, and momentum comes from inverting that
//! retraction between consecutive iterates. Two adaptive restart rules keep
//! the accelerated iteration stable on non-convex problems.
//!
//! ```
//! use stiefel_accel::{agd_function_restart, random_point, MomentumSchedule,
//!     ObjectiveSpec, Operator, SolverConfig, Termination};
//!
//! let objective = ObjectiveSpec::new(Operator::Diagonal(vec![1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0]).unwrap();
//! let x0 = random_point(4, 2, 7).unwrap();
//! let trace = agd_function_restart(&objective, &x0, &SolverConfig::default(), MomentumSchedule::Linear).unwrap();
//! assert_eq!(trace.termination, Termination::Converged);
//! // Largest weight pairs with the smallest eigenvalue: ½(2·1 + 1·2).
//! assert!((trace.final_value - 2.0).abs() < 1e-9);
//! ```

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod objectives;
pub mod optimizers;

pub use error::{Error, Result};
pub use geometry::{
    cayley_retract, geodesic_retract, lerp, random_point, retract_inverse, DualTangentVector, StiefelPoint,
    TangentVector,
};
pub use linalg::DenseMatrix;
pub use objectives::{
    brockett_condition_number, known_minimum, optimal_condition_number, optimal_weights, sphere_condition_number,
    Evaluation, Objective, ObjectiveSpec, Operator, SpectrumInfo, SpectrumSpec,
};
pub use optimizers::{
    agd_function_restart, agd_gradient_restart, gradient_descent, line_search, IterationRecord, MomentumSchedule,
    RunTrace, SolverConfig, Termination,
};
