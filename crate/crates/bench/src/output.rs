//! CSV rows and JSON summaries.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a CSV
//! back yields bit-identical values and refitting reproduces the fit exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;
use stiefel_accel::{SolverConfig, Termination};

use crate::error::{BenchError, Result};
use crate::experiment::{ExperimentReport, ExperimentSpec, Method, Problem, TrialFailure, TrialRow, WeightsSpec};
use crate::fit::FitResult;

pub const CSV_HEADER: [&str; 13] = [
    "method",
    "n",
    "k",
    "kappa",
    "trial",
    "seed",
    "iterations",
    "f_evals",
    "g_evals",
    "restarts",
    "final_rel_gradnorm",
    "termination",
    "wall_ms",
];

/// Writes rows in the given order. `wall_ms` is left empty unless
/// `with_timing` is set, keeping output byte-stable across runs.
pub fn write_csv<W: Write>(rows: &[TrialRow], out: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let wall = if with_timing {
            format!("{:.3}", r.wall_ms)
        } else {
            String::new()
        };
        w.write_record([
            r.method.as_str().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.kappa.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.f_evals.to_string(),
            r.g_evals.to_string(),
            r.restarts.to_string(),
            format!("{:e}", r.final_rel_gradnorm),
            r.termination.as_str().to_string(),
            wall,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_termination(s: &str) -> Result<Termination> {
    [
        Termination::Converged,
        Termination::MaxIterations,
        Termination::LineSearchFailed,
    ]
    .into_iter()
    .find(|t| t.as_str() == s)
    .ok_or_else(|| BenchError::Parse(format!("unknown termination {s:?}")))
}

/// Reads rows written by [`write_csv`]. Fields not stored in the CSV come
/// back as NaN, and so does an empty `wall_ms`.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(BenchError::Parse(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |i: usize| BenchError::Parse(format!("row {}: bad {} {:?}", line + 1, CSV_HEADER[i], field(i)));
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        rows.push(TrialRow {
            method: field(0).parse::<Method>().map_err(|_| bad(0))?,
            n: int(1)?,
            k: int(2)?,
            kappa: float(3)?,
            trial: int(4)?,
            seed: field(5).parse::<u64>().map_err(|_| bad(5))?,
            iterations: int(6)?,
            f_evals: int(7)?,
            g_evals: int(8)?,
            restarts: int(9)?,
            final_rel_gradnorm: float(10)?,
            termination: parse_termination(field(11))?,
            wall_ms: if field(12).is_empty() { f64::NAN } else { float(12)? },
            max_orthonormality_error: f64::NAN,
            final_value: f64::NAN,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum FitEntry {
    Fit(FitResult),
    Undefined { error: String },
}

pub fn fit_entries(fits: &BTreeMap<Method, std::result::Result<FitResult, String>>) -> BTreeMap<String, FitEntry> {
    fits.iter()
        .map(|(m, f)| {
            let entry = match f {
                Ok(fit) => FitEntry::Fit(fit.clone()),
                Err(e) => FitEntry::Undefined { error: e.clone() },
            };
            (m.as_str().to_string(), entry)
        })
        .collect()
}

#[derive(Serialize)]
pub struct SolverEcho {
    pub gamma0: f64,
    pub lambda_d: f64,
    pub c_l: f64,
    pub c_r: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_linesearch_steps: usize,
}

impl From<&SolverConfig> for SolverEcho {
    fn from(c: &SolverConfig) -> Self {
        Self {
            gamma0: c.gamma0,
            lambda_d: c.lambda_d,
            c_l: c.c_l,
            c_r: c.c_r,
            tol: c.epsilon,
            max_iter: c.max_iter,
            max_linesearch_steps: c.max_linesearch_steps,
        }
    }
}

#[derive(Serialize)]
pub struct ConfigEcho {
    pub problem: Problem,
    pub spectrum: String,
    pub weights: WeightsSpec,
    pub n_values: Vec<usize>,
    pub trials_per_n: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub solver: SolverEcho,
}

impl From<&ExperimentSpec> for ConfigEcho {
    fn from(s: &ExperimentSpec) -> Self {
        Self {
            problem: s.problem,
            spectrum: s.spectrum.to_string(),
            weights: s.weights.clone(),
            n_values: s.n_values.clone(),
            trials_per_n: s.trials_per_n,
            base_seed: s.base_seed,
            methods: s.methods.clone(),
            solver: SolverEcho::from(&s.solver),
        }
    }
}

#[derive(Serialize)]
pub struct Summary {
    pub config: ConfigEcho,
    pub rows: usize,
    pub failures: Vec<TrialFailure>,
    pub fits: BTreeMap<String, FitEntry>,
}

pub fn summary(spec: &ExperimentSpec, report: &ExperimentReport) -> Summary {
    Summary {
        config: ConfigEcho::from(spec),
        rows: report.rows.len(),
        failures: report.failures.clone(),
        fits: fit_entries(&report.fits),
    }
}
