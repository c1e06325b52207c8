//! End-to-end acceptance checks. Each test prints one `PASS` or `FAIL` line
//! to standard error (visible even when output is captured) and then asserts.

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiefel_accel::geometry::{dual_metric, lower_indices, metric, project_dual, raise_indices};
use stiefel_accel::linalg::{jacobi_eigh, matmul};
use stiefel_accel::optimizers::{euclidean_agd, lyapunov_value, EuclideanMode, StepRule};
use stiefel_accel::{
    cayley_retract, geodesic_retract, known_minimum, lerp, random_point, retract_inverse, DenseMatrix,
    DualTangentVector, MomentumSchedule, ObjectiveSpec, SolverConfig, SpectrumInfo, StiefelPoint, Termination,
};
use stiefel_bench::{run_experiment, write_csv, ExperimentReport, ExperimentSpec, Method, Problem, WeightsSpec};

fn verdict(id: u32, name: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "criterion {id} {status}: {name} ({detail})");
    assert!(failures.is_empty(), "criterion {id} failed:\n{}", failures.join("\n"));
}

fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
}

/// A random dual tangent vector at `x` with unit dual norm.
fn unit_direction(rng: &mut ChaCha8Rng, x: &StiefelPoint) -> DualTangentVector {
    let w = project_dual(x, &uniform_matrix(rng, x.n(), x.k())).unwrap();
    w.scaled(1.0 / w.norm())
}

fn diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    diff(a, b) / a.frobenius_norm().max(b.frobenius_norm()).max(1.0)
}

fn default_solver() -> SolverConfig {
    SolverConfig {
        gamma0: 0.1,
        lambda_d: 1.7,
        c_l: 0.7,
        c_r: 0.01,
        epsilon: 1e-10,
        record_history: false,
        ..SolverConfig::default()
    }
}

#[test]
fn criterion_1_geometry_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_fd: f64 = 0.0;
    let mut worst_order: f64 = 0.0;
    for &(n, k) in &[(20usize, 3usize), (200, 10)] {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        for i in 0..100 {
            let mut check = |ok: bool, what: String| {
                if !ok {
                    failures.push(format!("({n},{k}) instance {i}: {what}"));
                }
            };
            let x = random_point(n, k, rng.random()).unwrap();
            let w = unit_direction(&mut rng, &x);
            let w2 = unit_direction(&mut rng, &x);

            let back = lower_indices(&raise_indices(&w));
            let e = rel_diff(back.matrix(), w.matrix());
            check(e <= 1e-13, format!("index maps not inverse: {e:e}"));

            let dual = dual_metric(&w, &w2).unwrap();
            let primal = metric(&raise_indices(&w), &raise_indices(&w2)).unwrap();
            check(
                (dual - primal).abs() <= 1e-12,
                format!("raising is not an isometry: {dual} vs {primal}"),
            );

            let p = project_dual(&x, w.matrix()).unwrap();
            let raw = uniform_matrix(&mut rng, n, k);
            let once = project_dual(&x, &raw).unwrap();
            let twice = project_dual(&x, once.matrix()).unwrap();
            let e = rel_diff(p.matrix(), w.matrix()).max(rel_diff(twice.matrix(), once.matrix()));
            check(e <= 1e-13, format!("projection not idempotent: {e:e}"));

            let c0 = cayley_retract(&x, &w, 0.0).unwrap();
            let g0 = geodesic_retract(&x, &w, 0.0).unwrap();
            let e = diff(c0.matrix(), x.matrix()).max(diff(g0.matrix(), x.matrix()));
            check(e <= 1e-15, format!("retraction at zero moved the point: {e:e}"));

            // Central difference of the Cayley curve against the raised direction.
            let v = raise_indices(&w);
            let h = 1e-5;
            for (name, plus, minus) in [
                (
                    "cayley",
                    cayley_retract(&x, &w, h).unwrap(),
                    cayley_retract(&x, &w, -h).unwrap(),
                ),
                (
                    "geodesic",
                    geodesic_retract(&x, &w, h).unwrap(),
                    geodesic_retract(&x, &w, -h).unwrap(),
                ),
            ] {
                let fd = plus.matrix().sub(minus.matrix()).unwrap().scale(0.5 / h);
                let e = diff(&fd, v.matrix()) / v.matrix().frobenius_norm();
                worst_fd = worst_fd.max(e);
                check(e <= 1e-6, format!("{name} first-order error {e:e}"));
            }

            // Cayley and the geodesic differ at third order: halving t cuts
            // the gap by about 8, never by less than the 4 of a first-order
            // mismatch in the second derivative.
            let gap = |t: f64| {
                diff(
                    cayley_retract(&x, &w, t).unwrap().matrix(),
                    geodesic_retract(&x, &w, t).unwrap().matrix(),
                )
            };
            let (g1, g2) = (gap(0.02), gap(0.01));
            let ratio = g2 / g1;
            worst_order = worst_order.max(ratio);
            check(
                ratio <= 0.16,
                format!("cayley/geodesic gap ratio {ratio} ({g1:e} -> {g2:e})"),
            );

            // Equivariance under O(n) on the left and O(k) on the right.
            let scale = rng.random_range(-2.0..2.0);
            let y = cayley_retract(&x, &w, scale).unwrap();
            let q = random_point(n, n, rng.random()).unwrap();
            let qx = StiefelPoint::new(matmul(q.matrix(), x.matrix()).unwrap()).unwrap();
            let qw = project_dual(&qx, &matmul(q.matrix(), w.matrix()).unwrap()).unwrap();
            let left = cayley_retract(&qx, &qw, scale).unwrap();
            let e = rel_diff(left.matrix(), &matmul(q.matrix(), y.matrix()).unwrap());
            check(e <= 1e-12, format!("left equivariance error {e:e}"));
            let o = random_point(k, k, rng.random()).unwrap();
            let xo = StiefelPoint::new(matmul(x.matrix(), o.matrix()).unwrap()).unwrap();
            let wo = project_dual(&xo, &matmul(w.matrix(), o.matrix()).unwrap()).unwrap();
            let right = cayley_retract(&xo, &wo, scale).unwrap();
            let e = rel_diff(right.matrix(), &matmul(y.matrix(), o.matrix()).unwrap());
            check(e <= 1e-12, format!("right equivariance error {e:e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    verdict(
        1,
        "geometry identities",
        &failures,
        &format!("200 instances, worst fd error {worst_fd:.1e}, worst gap ratio {worst_order:.3}, {secs:.1} s"),
    );
}

#[test]
fn criterion_2_extrapolation_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let shapes = [(5usize, 1usize), (20, 3), (60, 6), (200, 10)];
    for i in 0..1000 {
        let (n, k) = shapes[i % shapes.len()];
        let x = random_point(n, k, rng.random()).unwrap();
        let w = unit_direction(&mut rng, &x);
        let y = cayley_retract(&x, &w, rng.random_range(0.01..1.0)).unwrap();
        let back = cayley_retract(&x, &retract_inverse(&x, &y).unwrap(), 1.0).unwrap();
        let e = diff(back.matrix(), y.matrix());
        worst = worst.max(e);
        if e > 1e-12 {
            failures.push(format!("pair {i} ({n},{k}): roundtrip error {e:e}"));
        }
        let at0 = lerp(&x, &y, 0.0).unwrap();
        if at0.matrix() != x.matrix() {
            failures.push(format!("pair {i}: lerp at 0 is not X"));
        }
        let e = diff(lerp(&x, &y, 1.0).unwrap().matrix(), y.matrix());
        if e > 1e-12 {
            failures.push(format!("pair {i}: lerp at 1 misses Y by {e:e}"));
        }
    }
    verdict(
        2,
        "extrapolation roundtrip",
        &failures,
        &format!("1000 pairs, worst {worst:.1e}"),
    );
}

#[test]
fn criterion_3_conditioning_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut pairs = 0;
    let mut tightest: f64 = 0.0;
    let shapes = [(2usize, 1usize), (6, 2), (20, 3), (50, 5)];
    let mut attempt = 0;
    while pairs < 1000 {
        let (n, k) = shapes[attempt % shapes.len()];
        attempt += 1;
        let x = random_point(n, k, rng.random()).unwrap();
        // Half of the pairs come from long Cayley steps, half are independent.
        let y = if attempt % 2 == 0 {
            let w = unit_direction(&mut rng, &x);
            cayley_retract(&x, &w, rng.random_range(0.0..4.0)).unwrap()
        } else {
            random_point(n, k, rng.random()).unwrap()
        };
        let d2 = diff(x.matrix(), y.matrix()).powi(2);
        if d2 >= 3.0 {
            continue;
        }
        pairs += 1;
        let m = matmul(&x.matrix().transpose(), y.matrix())
            .unwrap()
            .add(&DenseMatrix::identity(k))
            .unwrap();
        let (ev, _) = jacobi_eigh(&matmul(&m.transpose(), &m).unwrap()).unwrap();
        let kappa = (ev[k - 1] / ev[0]).sqrt();
        let bound = 2.0 / (3.0 - d2).sqrt();
        tightest = tightest.max(kappa / bound);
        if kappa > bound * (1.0 + 1e-12) {
            failures.push(format!("({n},{k}): κ = {kappa} > {bound} at ‖X−Y‖² = {d2}"));
        }
    }
    verdict(
        3,
        "conditioning bound",
        &failures,
        &format!("{pairs} pairs, max κ/bound {tightest:.4}"),
    );
}

/// `f(x) = ½xᵀAx` with `A = Q diag(d) Qᵀ`. The minimizer sits at the origin,
/// which keeps the function gap free of cancellation down to tiny values.
struct Quadratic {
    a: DenseMatrix,
    mu: f64,
    l: f64,
}

impl Quadratic {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let dim = rng.random_range(1..=64);
        let l = rng.random_range(0.5..10.0);
        let kappa = 10f64.powf(rng.random_range(0.0..4.0));
        let mut d: Vec<f64> = (0..dim).map(|_| l / kappa.powf(rng.random::<f64>())).collect();
        d[0] = l;
        if dim > 1 {
            d[1] = l / kappa;
        }
        let q = random_point(dim, dim, rng.random()).unwrap();
        let a = matmul(
            &matmul(q.matrix(), &DenseMatrix::from_diagonal(&d)).unwrap(),
            &q.matrix().transpose(),
        )
        .unwrap();
        let a = a.add(&a.transpose()).unwrap().scale(0.5);
        let mu = d.iter().copied().fold(f64::INFINITY, f64::min);
        let l = d.iter().copied().fold(0.0, f64::max);
        Quadratic { a, mu, l }
    }

    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let v = DenseMatrix::from_column_major(x.len(), 1, x.to_vec()).unwrap();
        matmul(&self.a, &v).unwrap().as_slice().to_vec()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(self.grad(x)).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[test]
fn criterion_4_euclidean_theory() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let steps = 200;
    let mut failures = Vec::new();
    for case in 0..50 {
        let quad = Quadratic::random(&mut rng);
        let x0: Vec<f64> = (0..quad.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r0: f64 = x0.iter().map(|v| v * v).sum();
        let f = |x: &[f64]| quad.value(x);
        let g = |x: &[f64]| quad.grad(x);
        let star = vec![0.0; quad.dim()];

        // Lyapunov function along the backtracking q-schedule run.
        let mode = EuclideanMode::QSchedule {
            schedule: MomentumSchedule::Linear,
            step: StepRule::Backtracking {
                initial: 10.0 / quad.l,
                shrink: 0.5,
            },
        };
        let traj = euclidean_agd(f, g, &x0, mode, steps).unwrap();
        let j = |t: usize| lyapunov_value(&traj.x[t], &traj.y[t], f(&traj.x[t]), traj.gamma[t], traj.q[t], &star);
        let j0 = j(0);
        for t in 0..steps - 1 {
            if j(t + 1) > j(t) + 1e-10 * j0 {
                failures.push(format!("case {case}: J rose at t = {t}: {} -> {}", j(t), j(t + 1)));
                break;
            }
        }

        // q-schedule with γ = 1/L.
        let mode = EuclideanMode::QSchedule {
            schedule: MomentumSchedule::Linear,
            step: StepRule::Fixed(1.0 / quad.l),
        };
        let traj = euclidean_agd(f, g, &x0, mode, steps).unwrap();
        for t in 1..=steps {
            let bound = 2.0 * quad.l * r0 / (t * t) as f64;
            if f(&traj.x[t]) > bound {
                failures.push(format!("case {case}: q-schedule bound broken at t = {t}"));
                break;
            }
        }

        // Constant momentum with known μ and L.
        let traj = euclidean_agd(
            f,
            g,
            &x0,
            EuclideanMode::StronglyConvex { mu: quad.mu, l: quad.l },
            steps,
        )
        .unwrap();
        let f0 = f(&x0);
        let rate = 1.0 - (quad.mu / quad.l).sqrt();
        for t in 0..=steps {
            let bound = 2.0 * rate.powi(t as i32) * f0;
            if f(&traj.x[t]) > bound {
                failures.push(format!("case {case}: strongly convex bound broken at t = {t}"));
                break;
            }
        }
    }
    verdict(4, "euclidean theory", &failures, "50 quadratics, 200 steps");
}

struct BrockettRuns {
    max_orthonormality_error: f64,
    failures: Vec<String>,
    runs: usize,
}

fn brockett_runs() -> &'static BrockettRuns {
    static RUNS: OnceLock<BrockettRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let (n, k) = (200, 10);
        let spectrum = SpectrumInfo::linear(n).unwrap();
        let weights: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let objective = ObjectiveSpec::new(spectrum.diagonal_operator(), weights.clone()).unwrap();
        let fmin = known_minimum(&spectrum, &weights).unwrap();
        let config = default_solver();
        let mut out = BrockettRuns {
            max_orthonormality_error: 0.0,
            failures: Vec::new(),
            runs: 0,
        };
        for seed in 0..10 {
            let x0 = random_point(n, k, seed).unwrap();
            for method in Method::ALL {
                let trace = method.run(&objective, &x0, &config).unwrap();
                out.runs += 1;
                out.max_orthonormality_error = out.max_orthonormality_error.max(trace.max_orthonormality_error);
                let tag = format!("{method} seed {seed}");
                if trace.termination != Termination::Converged {
                    out.failures.push(format!("{tag}: {}", trace.termination));
                }
                let gap = (trace.final_value - fmin).abs();
                if gap > 1e-7 {
                    out.failures.push(format!("{tag}: value off by {gap:e}"));
                }
                // Weight α_j = j + 1 belongs with eigenvalue λ = k − j.
                let x = trace.final_point.matrix();
                for j in 0..k {
                    let align = x.get(k - 1 - j, j).abs();
                    if align < 1.0 - 1e-6 {
                        out.failures.push(format!("{tag}: column {j} alignment {align}"));
                    }
                }
            }
        }
        out
    })
}

#[test]
fn criterion_5_brockett_solutions() {
    let runs = brockett_runs();
    verdict(
        5,
        "Brockett n=200 k=10 solutions",
        &runs.failures,
        &format!("{} runs across 10 seeds and 3 methods", runs.runs),
    );
}

fn sphere_spec() -> ExperimentSpec {
    ExperimentSpec {
        problem: Problem::Sphere,
        spectrum: "linear".parse().unwrap(),
        weights: WeightsSpec::Optimal,
        n_values: vec![100, 178, 316, 562, 1000],
        trials_per_n: 10,
        base_seed: 0,
        methods: Method::ALL.to_vec(),
        solver: default_solver(),
    }
}

fn brockett_spec() -> ExperimentSpec {
    ExperimentSpec {
        problem: Problem::Brockett { k: 10 },
        n_values: vec![100, 316, 1000],
        trials_per_n: 5,
        ..sphere_spec()
    }
}

fn sphere_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| run_experiment(&sphere_spec()).unwrap())
}

fn brockett_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| run_experiment(&brockett_spec()).unwrap())
}

/// Slope bounds plus per-size dominance of both AGD variants over GD.
fn scaling_failures(report: &ExperimentReport, spec: &ExperimentSpec) -> (Vec<String>, String) {
    let mut failures: Vec<String> = report.failures.iter().map(|f| format!("{f:?}")).collect();
    for r in report.rows.iter().filter(|r| r.termination != Termination::Converged) {
        failures.push(format!("{} n = {} trial {}: {}", r.method, r.n, r.trial, r.termination));
    }
    let expected = spec.n_values.len() * spec.trials_per_n * spec.methods.len();
    if report.rows.len() != expected {
        failures.push(format!("{} rows, expected {expected}", report.rows.len()));
    }
    let mut summary = Vec::new();
    let fit = |m: Method| report.fits[&m].as_ref().map_err(|e| format!("{m}: {e}"));
    match (fit(Method::Gd), fit(Method::AgdFunction), fit(Method::AgdGradient)) {
        (Ok(gd), Ok(agd_f), Ok(agd_g)) => {
            summary.push(format!(
                "slopes gd {:.3}, agd-function {:.3}, agd-gradient {:.3}",
                gd.slope, agd_f.slope, agd_g.slope
            ));
            if gd.slope < 0.85 {
                failures.push(format!("gd slope {} < 0.85", gd.slope));
            }
            for (m, f) in [(Method::AgdFunction, agd_f), (Method::AgdGradient, agd_g)] {
                if f.slope > 0.75 {
                    failures.push(format!("{m} slope {} > 0.75", f.slope));
                }
                if f.points.len() != gd.points.len() {
                    failures.push(format!("{m} has {} sizes, gd {}", f.points.len(), gd.points.len()));
                    continue;
                }
                for (i, (a, b)) in f.points.iter().zip(&gd.points).enumerate() {
                    if a.1 >= b.1 {
                        failures.push(format!(
                            "{m} mean ln iterations {:.4} not below gd {:.4} at n = {}",
                            a.1, b.1, spec.n_values[i]
                        ));
                    }
                }
            }
        }
        (a, b, c) => {
            for e in [a.err(), b.err(), c.err()].into_iter().flatten() {
                failures.push(e);
            }
        }
    }
    (failures, summary.join("; "))
}

#[test]
fn criterion_6_sphere_scaling() {
    let start = Instant::now();
    let report = sphere_report();
    let (failures, summary) = scaling_failures(report, &sphere_spec());
    verdict(
        6,
        "sphere scaling",
        &failures,
        &format!("{summary}, {:.0} s", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_7_brockett_scaling() {
    let start = Instant::now();
    let report = brockett_report();
    let (failures, summary) = scaling_failures(report, &brockett_spec());
    verdict(
        7,
        "Brockett scaling",
        &failures,
        &format!("{summary}, {:.0} s", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_8_orthonormality_drift() {
    let mut worst = brockett_runs().max_orthonormality_error;
    let mut rows = 0;
    for report in [sphere_report(), brockett_report()] {
        for r in &report.rows {
            worst = worst.max(r.max_orthonormality_error);
            rows += 1;
        }
    }
    let failures = if worst <= 1e-8 {
        Vec::new()
    } else {
        vec![format!("max ‖XᵀX − I‖_F = {worst:e}")]
    };
    verdict(
        8,
        "orthonormality drift",
        &failures,
        &format!("{} runs, max error {worst:.1e}", rows + brockett_runs().runs),
    );
}

#[test]
fn criterion_9_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stiefel-bench"))
            .args([
                "scaling",
                "--problem",
                "sphere",
                "--spectrum",
                "linear",
                "--n-values",
                "100,178,316,562,1000",
                "--trials",
                "10",
                "--seed",
                "0",
                "--method",
                "all",
                "--tol",
                "1e-10",
                "--gamma0",
                "0.1",
                "--lambda-d",
                "1.7",
                "--c-l",
                "0.7",
                "--c-r",
                "0.01",
                "--format",
                "csv",
                "--out",
            ])
            .arg(&path)
            .stderr(Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let first = run("first.csv");
    let second = run("second.csv");
    let mut failures = Vec::new();
    if first != second {
        failures.push("two CLI runs differ".to_string());
    }
    // The library sweep with the same spec serializes to the same bytes.
    let mut library = Vec::new();
    write_csv(&sphere_report().rows, &mut library, false).unwrap();
    if library != first {
        failures.push("CLI output differs from the library sweep".to_string());
    }
    verdict(9, "deterministic CSV", &failures, &format!("{} bytes", first.len()));
}
