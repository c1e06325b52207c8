//! Condition-number scaling experiments for the Stiefel solvers in
//! [`stiefel_accel`].
//!
//! An [`ExperimentSpec`] names a problem family, a spectrum shape, a list of
//! sizes and a number of seeded trials. [`run_experiment`] runs every method
//! on every cell from shared start points and fits mean log-iterations
//! against log κ per method.

pub mod error;
pub mod experiment;
pub mod fit;
pub mod output;

pub use error::{BenchError, Result};
pub use experiment::{
    build_problem, fit_rows, run_experiment, run_experiment_with, sort_rows, trial_seed, ExperimentReport,
    ExperimentSpec, Method, Problem, ProblemInstance, TrialFailure, TrialRow, WeightsSpec,
};
pub use fit::{loglog_fit, FitResult};
pub use output::{read_csv, summary, write_csv, Summary, CSV_HEADER};
