use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stiefel_accel::{random_point, RunTrace, SolverConfig, SpectrumSpec, StiefelPoint};
use stiefel_bench::output::fit_entries;
use stiefel_bench::{
    build_problem, fit_rows, read_csv, run_experiment_with, summary, write_csv, BenchError, ExperimentSpec, Method,
    Problem, WeightsSpec,
};

#[derive(Parser)]
#[command(
    name = "stiefel-bench",
    version,
    about = "Accelerated gradient descent on the Stiefel manifold"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem instance and report the result.
    Solve(SolveArgs),
    /// Sweep problem sizes with seeded trials and fit log-iterations against log κ.
    Scaling(ScalingArgs),
    /// Refit a CSV written by `scaling`.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Sphere,
    Brockett,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    problem: ProblemKind,
    /// Number of columns for the Brockett problem.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// `linear[:n]`, `quadratic[:n]` or `file:<path>`.
    #[arg(long, value_parser = parse_spectrum)]
    spectrum: SpectrumSpec,
    /// `optimal` or a comma-separated list of k weights.
    #[arg(long, default_value = "optimal", value_parser = parse_weights)]
    weights: WeightsSpec,
}

impl ProblemArgs {
    fn problem(&self) -> Problem {
        match self.problem {
            ProblemKind::Sphere => Problem::Sphere,
            ProblemKind::Brockett => Problem::Brockett { k: self.k },
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Relative gradient tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma0: f64,
    #[arg(long, default_value_t = 1.7)]
    lambda_d: f64,
    #[arg(long, default_value_t = 0.7)]
    c_l: f64,
    #[arg(long, default_value_t = 0.01)]
    c_r: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            gamma0: self.gamma0,
            lambda_d: self.lambda_d,
            c_l: self.c_l,
            c_r: self.c_r,
            epsilon: self.tol,
            max_iter: self.max_iter,
            record_history: false,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// A method name or `all`.
    #[arg(long, default_value = "agd-function", value_parser = parse_methods)]
    method: Methods,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the final point as CSV, one matrix row per line.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: `csv` prints a text table, `json` an object per method.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Ascending, comma-separated problem sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n_values: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated method names or `all`.
    #[arg(long, default_value = "all", value_parser = parse_methods)]
    method: Methods,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` writes one row per run, `json` the fits and a config echo.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Fill the `wall_ms` column. Output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
    /// Print each finished run to standard error.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct FitArgs {
    /// CSV written by `scaling`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Methods(Vec<Method>);

fn parse_spectrum(s: &str) -> Result<SpectrumSpec, String> {
    s.parse().map_err(|e: stiefel_accel::Error| e.to_string())
}

fn parse_weights(s: &str) -> Result<WeightsSpec, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

fn parse_methods(s: &str) -> Result<Methods, String> {
    if s == "all" {
        return Ok(Methods(Method::ALL.to_vec()));
    }
    s.split(',')
        .map(|m| m.trim().parse::<Method>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()
        .map(Methods)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Scaling(args) => scaling(args),
        Command::Fit(args) => fit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct SolveReport {
    method: Method,
    n: usize,
    k: usize,
    kappa: f64,
    seed: u64,
    termination: String,
    final_value: f64,
    final_rel_gradnorm: f64,
    iterations: usize,
    restarts: usize,
    f_evals: usize,
    g_evals: usize,
    wall_ms: f64,
    max_orthonormality_error: f64,
}

fn report(method: Method, kappa: f64, seed: u64, trace: &RunTrace) -> SolveReport {
    SolveReport {
        method,
        n: trace.final_point.n(),
        k: trace.final_point.k(),
        kappa,
        seed,
        termination: trace.termination.to_string(),
        final_value: trace.final_value,
        final_rel_gradnorm: trace.relative_grad_norm(),
        iterations: trace.iterations,
        restarts: trace.restarts,
        f_evals: trace.function_evals,
        g_evals: trace.gradient_evals,
        wall_ms: trace.wall_time.as_secs_f64() * 1e3,
        max_orthonormality_error: trace.max_orthonormality_error,
    }
}

fn write_point(path: &Path, x: &StiefelPoint) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in x.matrix().to_rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), BenchError> {
    let methods = args.method.0;
    if args.out.is_some() && methods.len() != 1 {
        return Err(BenchError::InvalidSpec("--out needs a single --method".into()));
    }
    let config = args.solver.config();
    config.validate()?;
    let problem = args.problem.problem();
    let instance = build_problem(problem, args.problem.spectrum.resolve(None)?, &args.problem.weights)?;
    let x0 = random_point(instance.spectrum.n(), problem.k(), args.seed)?;

    let mut reports = Vec::new();
    for &method in &methods {
        let trace = method.run(&instance.objective, &x0, &config)?;
        if let Some(path) = &args.out {
            write_point(path, &trace.final_point)?;
        }
        reports.push(report(method, instance.kappa, args.seed, &trace));
    }

    let mut out = io::stdout().lock();
    match args.format {
        Format::Json if reports.len() == 1 => serde_json::to_writer_pretty(&mut out, &reports[0])?,
        Format::Json => serde_json::to_writer_pretty(&mut out, &reports)?,
        Format::Csv if reports.len() == 1 => {
            let r = &reports[0];
            writeln!(out, "method          {}", r.method)?;
            writeln!(out, "problem         n = {}, k = {}, kappa = {:.6e}", r.n, r.k, r.kappa)?;
            writeln!(out, "termination     {}", r.termination)?;
            writeln!(out, "final f         {:.15e}", r.final_value)?;
            writeln!(out, "rel grad norm   {:.3e}", r.final_rel_gradnorm)?;
            writeln!(out, "iterations      {}", r.iterations)?;
            writeln!(out, "restarts        {}", r.restarts)?;
            writeln!(out, "f evals         {}", r.f_evals)?;
            writeln!(out, "g evals         {}", r.g_evals)?;
            writeln!(out, "wall time       {:.1} ms", r.wall_ms)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "{:<14} {:>20} {:>11} {:>10} {:>9} {:>9} {:>9} {:>10}  termination",
                "method", "final f", "rel grad", "iters", "restarts", "f evals", "g evals", "wall ms"
            )?;
            for r in &reports {
                writeln!(
                    out,
                    "{:<14} {:>20.12e} {:>11.3e} {:>10} {:>9} {:>9} {:>9} {:>10.1}  {}",
                    r.method.as_str(),
                    r.final_value,
                    r.final_rel_gradnorm,
                    r.iterations,
                    r.restarts,
                    r.f_evals,
                    r.g_evals,
                    r.wall_ms,
                    r.termination
                )?;
            }
        }
    }
    if args.format == Format::Json {
        writeln!(out)?;
    }
    Ok(())
}

fn scaling(args: ScalingArgs) -> Result<(), BenchError> {
    let spec = ExperimentSpec {
        problem: args.problem.problem(),
        spectrum: args.problem.spectrum.clone(),
        weights: args.problem.weights.clone(),
        n_values: args.n_values.clone(),
        trials_per_n: args.trials,
        base_seed: args.seed,
        methods: args.method.0.clone(),
        solver: args.solver.config(),
    };
    let report = run_experiment_with(&spec, |row| {
        if args.progress {
            eprintln!(
                "{:<13} n = {:<6} trial {:<3} {:>8} iterations  {}",
                row.method.as_str(),
                row.n,
                row.trial,
                row.iterations,
                row.termination
            );
        }
    })?;
    for f in &report.failures {
        eprintln!("failed: {} n = {} trial {}: {}", f.method, f.n, f.trial, f.error);
    }

    let mut out = sink(args.out.as_deref())?;
    match args.format {
        Format::Csv => {
            write_csv(&report.rows, &mut out, args.timing)?;
            for (method, fit) in &report.fits {
                match fit {
                    Ok(fit) => eprintln!(
                        "{:<13} slope {:.4}  intercept {:.4}  r² {:.4}",
                        method.as_str(),
                        fit.slope,
                        fit.intercept,
                        fit.r_squared
                    ),
                    Err(e) => eprintln!("{:<13} no fit: {e}", method.as_str()),
                }
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &summary(&spec, &report))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Refit {
    rows: usize,
    fits: std::collections::BTreeMap<String, stiefel_bench::output::FitEntry>,
}

fn fit(args: FitArgs) -> Result<(), BenchError> {
    let mut rows = read_csv(File::open(&args.input)?)?;
    stiefel_bench::sort_rows(&mut rows);
    let refit = Refit {
        rows: rows.len(),
        fits: fit_entries(&fit_rows(&rows)),
    };
    let mut out = sink(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &refit)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
