//! Condition-number sweeps: problem construction, seeded trials, aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use stiefel_accel::{
    agd_function_restart, agd_gradient_restart, brockett_condition_number, gradient_descent, optimal_weights,
    random_point, sphere_condition_number, MomentumSchedule, ObjectiveSpec, RunTrace, SolverConfig, SpectrumInfo,
    SpectrumSpec, StiefelPoint, Termination,
};

use crate::error::{BenchError, Result};
use crate::fit::{loglog_fit, FitResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Problem {
    /// Rayleigh quotient on the unit sphere (`k = 1`).
    Sphere,
    Brockett {
        k: usize,
    },
}

impl Problem {
    pub fn k(&self) -> usize {
        match *self {
            Problem::Sphere => 1,
            Problem::Brockett { k } => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsSpec {
    Explicit(Vec<f64>),
    /// Weights minimizing the Brockett condition number for the spectrum.
    Optimal,
}

impl FromStr for WeightsSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "optimal" {
            return Ok(WeightsSpec::Optimal);
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| BenchError::InvalidSpec(format!("bad weight {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(WeightsSpec::Explicit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "agd-function")]
    AgdFunction,
    #[serde(rename = "agd-gradient")]
    AgdGradient,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gd, Method::AgdFunction, Method::AgdGradient];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::AgdFunction => "agd-function",
            Method::AgdGradient => "agd-gradient",
        }
    }

    pub fn run(
        &self,
        objective: &ObjectiveSpec,
        x0: &StiefelPoint,
        config: &SolverConfig,
    ) -> stiefel_accel::Result<RunTrace> {
        match self {
            Method::Gd => gradient_descent(objective, x0, config),
            Method::AgdFunction => agd_function_restart(objective, x0, config, MomentumSchedule::Linear),
            Method::AgdGradient => agd_gradient_restart(objective, x0, config, MomentumSchedule::Linear),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BenchError::InvalidSpec(format!("unknown method {s:?}")))
    }
}

/// The objective for one problem size together with its condition number.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub objective: ObjectiveSpec,
    pub spectrum: SpectrumInfo,
    pub weights: Vec<f64>,
    pub kappa: f64,
}

/// Builds the diagonal test operator for `spectrum` and the problem's weights.
pub fn build_problem(problem: Problem, spectrum: SpectrumInfo, weights: &WeightsSpec) -> Result<ProblemInstance> {
    let (weights, kappa) = match problem {
        Problem::Sphere => (vec![1.0], sphere_condition_number(&spectrum)?),
        Problem::Brockett { k } => {
            let w = match weights {
                WeightsSpec::Optimal => optimal_weights(&spectrum, k)?,
                WeightsSpec::Explicit(w) if w.len() == k => w.clone(),
                WeightsSpec::Explicit(w) => {
                    return Err(BenchError::InvalidSpec(format!(
                        "{} weights given for k = {k}",
                        w.len()
                    )))
                }
            };
            let kappa = brockett_condition_number(&spectrum, &w)?;
            (w, kappa)
        }
    };
    let objective = ObjectiveSpec::new(spectrum.diagonal_operator(), weights.clone())?;
    Ok(ProblemInstance {
        objective,
        spectrum,
        weights,
        kappa,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub problem: Problem,
    /// Size-free specifier; each `n` in `n_values` is substituted in.
    pub spectrum: SpectrumSpec,
    pub weights: WeightsSpec,
    pub n_values: Vec<usize>,
    pub trials_per_n: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub solver: SolverConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.n_values.is_empty() {
            return bad("no problem sizes given".into());
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("n values must be strictly ascending: {:?}", self.n_values));
        }
        if self.trials_per_n == 0 {
            return bad("at least one trial per size is required".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return bad(format!("duplicate methods: {:?}", self.methods));
        }
        let k = self.problem.k();
        if k == 0 || k > self.n_values[0] {
            return bad(format!("k = {k} does not fit n = {}", self.n_values[0]));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// One solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub kappa: f64,
    pub trial: usize,
    pub seed: u64,
    pub iterations: usize,
    pub f_evals: usize,
    pub g_evals: usize,
    pub restarts: usize,
    pub final_rel_gradnorm: f64,
    pub termination: Termination,
    pub wall_ms: f64,
    /// Not written to CSV.
    pub max_orthonormality_error: f64,
    pub final_value: f64,
}

/// A run that returned an error instead of a trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialFailure {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    /// Sorted by method, then `n`, then trial.
    pub rows: Vec<TrialRow>,
    pub failures: Vec<TrialFailure>,
    pub fits: BTreeMap<Method, std::result::Result<FitResult, String>>,
}

/// Seed for the start point of trial `trial` at size `n`. All methods share
/// it, so they start from the same `X₀`. The mixing is SplitMix64, fixed here
/// so seeds never change between builds or platforms.
pub fn trial_seed(base_seed: u64, n: usize, trial: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    base_seed.wrapping_add(mix(mix(n as u64) ^ trial as u64))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_experiment_with(spec, |_| {})
}

/// Like [`run_experiment`], calling `progress` after every finished row.
pub fn run_experiment_with(spec: &ExperimentSpec, mut progress: impl FnMut(&TrialRow)) -> Result<ExperimentReport> {
    spec.validate()?;
    let k = spec.problem.k();
    let solver = SolverConfig {
        record_history: false,
        ..spec.solver.clone()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &spec.n_values {
        let instance = build_problem(spec.problem, spec.spectrum.resolve(Some(n))?, &spec.weights)?;
        for trial in 0..spec.trials_per_n {
            let seed = trial_seed(spec.base_seed, n, trial);
            let x0 = random_point(n, k, seed)?;
            for &method in &spec.methods {
                match method.run(&instance.objective, &x0, &solver) {
                    Ok(trace) => {
                        let row = TrialRow {
                            method,
                            n,
                            k,
                            kappa: instance.kappa,
                            trial,
                            seed,
                            iterations: trace.iterations,
                            f_evals: trace.function_evals,
                            g_evals: trace.gradient_evals,
                            restarts: trace.restarts,
                            final_rel_gradnorm: trace.relative_grad_norm(),
                            termination: trace.termination,
                            wall_ms: duration_ms(trace.wall_time),
                            max_orthonormality_error: trace.max_orthonormality_error,
                            final_value: trace.final_value,
                        };
                        progress(&row);
                        rows.push(row);
                    }
                    Err(e) => failures.push(TrialFailure {
                        method,
                        n,
                        trial,
                        seed,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    sort_rows(&mut rows);
    let fits = fit_rows(&rows);
    Ok(ExperimentReport { rows, failures, fits })
}

fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn sort_rows(rows: &mut [TrialRow]) {
    rows.sort_by_key(|r| (r.method, r.n, r.trial));
}

/// Per-method fit of mean `ln(iterations)` against `ln κ`, one point per
/// problem size. Only converged rows count; a run that converged at its
/// start point counts as one iteration so the logarithm stays finite.
///
/// Rows must be in [`sort_rows`] order for the sums to be bit-reproducible.
pub fn fit_rows(rows: &[TrialRow]) -> BTreeMap<Method, std::result::Result<FitResult, String>> {
    let mut cells: BTreeMap<Method, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    for r in rows {
        let cell = cells
            .entry(r.method)
            .or_default()
            .entry(r.n)
            .or_insert((r.kappa, 0.0, 0));
        if r.termination == Termination::Converged {
            cell.1 += (r.iterations.max(1) as f64).ln();
            cell.2 += 1;
        }
    }
    cells
        .into_iter()
        .map(|(method, by_n)| {
            let points: Vec<(f64, f64)> = by_n
                .values()
                .filter(|c| c.2 > 0)
                .map(|&(kappa, sum, count)| (kappa.ln(), sum / count as f64))
                .collect();
            (method, loglog_fit(&points).map_err(|e| e.to_string()))
        })
        .collect()
}
