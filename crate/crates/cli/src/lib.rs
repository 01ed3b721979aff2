//! Batch front-end for `momentrelax`: certify, solve and compare problem
//! files, producing JSON reports and trajectory CSVs.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (all certificates pass, extraction succeeds, comparison consistent) |
//! | 1 | a certificate fails or errors; a comparison finds a relaxation violation |
//! | 2 | no failure, but at least one boundary verdict |
//! | 3 | input error (malformed or inconsistent problem file, unusable options) |
//! | 4 | relaxed solve succeeded but classical extraction failed |
//! | 5 | the state diverged |

mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use momentrelax::certificates::{
    example_wrapper_check, geom_m1_check, ncq_subset_check, over_states, p2_check,
    p3_monotone_check, p3_zero_linear_check, theorem_sec_check, Certificate, NcqOptions, Statement,
    GEOM_GRID, ROOT_SCAN, STRICT_MARGIN,
};
use momentrelax::moments::DEFAULT_MEMBERSHIP_TOL;
use momentrelax::oracle::{dp_value_original, orientor_convexity_probe, DpConfig};
use momentrelax::problem::{applicable_certificates, Problem};
use momentrelax::relaxed::{
    extract_classical, simulate_controls, solve_relaxed, write_trajectory_csv, SolverOptions,
    TrajectoryResult,
};
use momentrelax::{moments::ControlBasis, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use report::{
    CertificateEntry, Comparison, DpArm, ProblemSummary, RelaxationArm, Report, SolverSummary,
    Timing, REPORT_SCHEMA,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BOUNDARY: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_EXTRACTION: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

/// Relative gap allowed between the relaxed cost and the DP value.
pub const DP_GAP_TOL: f64 = 1e-2;
/// Amount by which a classical control may beat the relaxed optimum.
pub const RELAXATION_TOL: f64 = 1e-6;

/// Command-line overrides of the `run` section.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    /// Control-side grid resolution: certificate u-grid, DP control grid
    /// and atom grid.
    pub grid: Option<usize>,
    /// Extraction tolerance.
    pub tol: Option<f64>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Exit code and report of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Report,
}

struct Run {
    report: Report,
    started: Instant,
}

impl Run {
    fn new(command: &str, path: &Path) -> Run {
        Run {
            report: Report {
                report_schema: REPORT_SCHEMA,
                command: command.to_string(),
                file: path.display().to_string(),
                status: "error".into(),
                exit_code: EXIT_INPUT,
                problem: None,
                input_error: None,
                certificates: Vec::new(),
                solver: None,
                extraction: None,
                comparison: None,
                errors: Vec::new(),
                tolerances: BTreeMap::new(),
                reproducibility: BTreeMap::new(),
                timing: Timing {
                    threads: rayon::current_num_threads(),
                    ..Timing::default()
                },
            },
            started: Instant::now(),
        }
    }

    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.report
            .timing
            .phases
            .insert(name.to_string(), t.elapsed().as_secs_f64());
        out
    }

    fn finish(mut self, code: i32, status: &str) -> Outcome {
        self.report.exit_code = code;
        self.report.status = status.to_string();
        self.report.timing.total_seconds = self.started.elapsed().as_secs_f64();
        Outcome {
            code,
            report: self.report,
        }
    }

    /// Loads and validates the file, applying option overrides.
    fn load(&mut self, path: &Path, opts: &Options) -> Option<Problem> {
        match load_problem(path, opts) {
            Ok(p) => {
                self.report.problem = Some(summary(&p));
                self.report.tolerances = tolerances(&p);
                self.report.reproducibility = reproducibility(&p);
                Some(p)
            }
            Err(e) => {
                self.report.input_error = Some(e);
                None
            }
        }
    }
}

/// Reads a problem file and applies `--seed`, `--steps`, `--grid` and
/// `--tol`.
pub fn load_problem(
    path: &Path,
    opts: &Options,
) -> Result<Problem, momentrelax::problem::ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|e| momentrelax::problem::ProblemError {
        path: ".".into(),
        line: None,
        column: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut file = momentrelax::problem::ProblemFile::parse(&text)?;
    let run = &mut file.run;
    if let Some(seed) = opts.seed {
        run.seed = seed;
    }
    if let Some(steps) = opts.steps {
        run.solver.steps = steps;
    }
    if let Some(grid) = opts.grid {
        run.oracle.u_grid = grid;
        run.oracle.control_points = grid;
        run.oracle.atom_grid = grid;
    }
    if let Some(tol) = opts.tol {
        run.tol = tol;
    }
    file.validate()
}

fn summary(p: &Problem) -> ProblemSummary {
    let b = &p.spec.basis;
    ProblemSummary {
        name: p.file.name.clone(),
        basis: b.label(),
        state_dim: p.spec.state_dim(),
        control_dim: b.control_dim(),
        moment_dim: b.moment_dim(),
        horizon: p.spec.horizon,
        constant_coefficients: p.shape.constant_coefficients,
        examples: p
            .shape
            .examples
            .iter()
            .map(|s| s.name().to_string())
            .collect(),
    }
}

fn tolerances(p: &Problem) -> BTreeMap<String, f64> {
    let solver = SolverOptions::default();
    BTreeMap::from([
        ("strict_margin".to_string(), STRICT_MARGIN),
        ("extraction_tol".to_string(), p.file.run.tol),
        ("solver_rel_tol".to_string(), p.file.run.solver.rel_tol),
        ("fd_step".to_string(), solver.fd_step),
        ("membership_tol".to_string(), DEFAULT_MEMBERSHIP_TOL),
        ("dp_gap_tol".to_string(), DP_GAP_TOL),
        ("relaxation_tol".to_string(), RELAXATION_TOL),
    ])
}

fn reproducibility(p: &Problem) -> BTreeMap<String, u64> {
    let run = &p.file.run;
    let o = &run.oracle;
    BTreeMap::from([
        ("seed".to_string(), run.seed),
        ("steps".to_string(), run.solver.steps as u64),
        ("starts".to_string(), run.solver.starts as u64),
        (
            "max_iterations".to_string(),
            run.solver.max_iterations as u64,
        ),
        (
            "max_atoms".to_string(),
            run.solver
                .max_atoms
                .unwrap_or(p.spec.basis.moment_dim() + 1) as u64,
        ),
        ("x_samples".to_string(), p.x_samples().len() as u64),
        ("u_grid".to_string(), o.u_grid as u64),
        ("v_samples".to_string(), o.v_samples as u64),
        ("geom_grid".to_string(), GEOM_GRID as u64),
        ("root_scan".to_string(), ROOT_SCAN as u64),
        ("dp_state_points".to_string(), o.state_points as u64),
        ("dp_control_points".to_string(), o.control_points as u64),
        ("atom_grid".to_string(), o.atom_grid as u64),
        ("xi_grid".to_string(), o.xi_grid as u64),
        ("random_controls".to_string(), o.random_controls as u64),
    ])
}

fn fixed<const K: usize>(v: &[f64]) -> [f64; K] {
    let mut out = [0.0; K];
    out.copy_from_slice(&v[..K]);
    out
}

/// Runs one certificate on the problem, sampling states where the
/// coefficients depend on `x`.
pub fn run_certificate(problem: &Problem, statement: Statement) -> Result<Certificate, String> {
    let spec = &problem.spec;
    let k = &spec.k;
    let xs = problem.x_samples();
    let scalar = spec.state_dim() == 1;
    let row = |x: &[f64]| -> Vec<f64> { (spec.dynamics)(x).row(0).iter().copied().collect() };
    let degree = match spec.basis {
        ControlBasis::Power { degree } => Some(degree),
        ControlBasis::QuadraticDiag { .. } => None,
    };
    let needs = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(format!("not applicable: {what}"))
        }
    };
    let result = match statement {
        Statement::P2 => {
            needs(
                scalar && degree == Some(2),
                "needs power1d(2) and a scalar state",
            )?;
            over_states(statement, &xs, |x| {
                p2_check(fixed((spec.cost)(x).as_slice()), fixed(&row(x)), k)
            })
        }
        Statement::P3Monotone => {
            needs(
                scalar && degree == Some(3),
                "needs power1d(3) and a scalar state",
            )?;
            over_states(statement, &xs, |x| {
                Ok(p3_monotone_check(
                    fixed((spec.cost)(x).as_slice()),
                    fixed(&row(x)),
                ))
            })
        }
        Statement::P3ZeroLinear => {
            needs(
                scalar && degree == Some(3),
                "needs power1d(3) and a scalar state",
            )?;
            over_states(statement, &xs, |x| {
                p3_zero_linear_check(fixed((spec.cost)(x).as_slice()), fixed(&row(x)), k)
            })
        }
        Statement::GeomM1 => {
            needs(
                scalar && degree == Some(3),
                "needs power1d(3) and a scalar state",
            )?;
            over_states(statement, &xs, |x| {
                geom_m1_check(
                    fixed((spec.cost)(x).as_slice()),
                    fixed(&row(x)),
                    k,
                    GEOM_GRID,
                )
            })
        }
        Statement::NcqSubset => {
            let o = &problem.file.run.oracle;
            let opts = NcqOptions {
                v_samples: o.v_samples,
                u_grid_n: o.u_grid,
                seed: problem.file.run.seed,
            };
            over_states(statement, &xs, |x| {
                ncq_subset_check(&(spec.cost)(x), &(spec.dynamics)(x), &spec.basis, k, &opts)
            })
        }
        Statement::TheoremSec => {
            let sp = problem
                .structured_problem()
                .ok_or("not applicable: needs quadratic_diag(n) with an n-dimensional state")?;
            theorem_sec_check(&sp, k, &xs, problem.file.run.oracle.u_grid)
        }
        Statement::Ex1 | Statement::Ex2 | Statement::Ex3 | Statement::Corollary3 => {
            let variant = problem.example_variant(statement).ok_or_else(|| {
                format!(
                    "not applicable: coefficients do not match the {} pattern",
                    statement.name()
                )
            })?;
            example_wrapper_check(&variant, &xs)
        }
    };
    result.map_err(|e| e.to_string())
}

/// The requested certificates, or every applicable one.
pub fn requested_certificates(problem: &Problem) -> Vec<Statement> {
    match &problem.file.run.certificates {
        Some(names) => names.iter().filter_map(|n| Statement::parse(n)).collect(),
        None => applicable_certificates(problem),
    }
}

/// Runs the requested certificates. Exit 0 when all pass, 1 on any fail or
/// error, 2 when the only non-passes are boundary verdicts, 3 on input
/// errors.
pub fn cmd_certify(path: &Path, opts: &Options) -> Outcome {
    let mut run = Run::new("certify", path);
    let Some(problem) = run.load(path, opts) else {
        return run.finish(EXIT_INPUT, "error");
    };
    let statements = requested_certificates(&problem);
    if statements.is_empty() {
        run.report
            .errors
            .push("no certificate applies to this problem".into());
        return run.finish(EXIT_INPUT, "error");
    }
    for st in statements {
        let entry = run.phase(
            &format!("certificate.{}", st.name()),
            || match run_certificate(&problem, st) {
                Ok(c) => CertificateEntry::from_certificate(c),
                Err(e) => CertificateEntry::error(st.name(), e),
            },
        );
        run.report.certificates.push(entry);
    }
    let verdicts: Vec<&str> = run
        .report
        .certificates
        .iter()
        .map(|c| c.verdict.as_str())
        .collect();
    let (code, status) = if verdicts.iter().any(|v| *v == "fail" || *v == "error") {
        (
            EXIT_FAIL,
            if verdicts.contains(&"fail") {
                "fail"
            } else {
                "error"
            },
        )
    } else if verdicts.contains(&"boundary") {
        (EXIT_BOUNDARY, "boundary")
    } else {
        (EXIT_OK, "pass")
    };
    run.finish(code, status)
}

fn solver_options(problem: &Problem) -> SolverOptions {
    let s = &problem.file.run.solver;
    SolverOptions {
        starts: s.starts,
        max_atoms: s.max_atoms,
        max_iterations: s.max_iterations,
        rel_tol: s.rel_tol,
        seed: problem.file.run.seed,
        ..SolverOptions::default()
    }
}

fn solver_summary(traj: &TrajectoryResult) -> SolverSummary {
    SolverSummary {
        steps: traj.steps(),
        cost: traj.cost,
        best_start: traj.best_start,
        max_distance_to_curve: traj.distances.iter().copied().fold(0.0, f64::max),
        distances: traj.distances.clone(),
        moments: traj.moments.iter().map(|m| m.0.clone()).collect(),
        final_state: traj.states.last().cloned().unwrap_or_default(),
        starts: traj.starts.clone(),
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_INPUT,
    }
}

fn relaxed(run: &mut Run, problem: &Problem) -> Result<TrajectoryResult, Error> {
    let steps = problem.file.run.solver.steps;
    let opts = solver_options(problem);
    let traj = run.phase("solve", || solve_relaxed(&problem.spec, steps, &opts))?;
    run.report.solver = Some(solver_summary(&traj));
    Ok(traj)
}

/// Solves the relaxed problem and extracts a classical control. Exit 0 on
/// successful extraction, 4 when extraction fails, 5 on divergence.
pub fn cmd_solve(path: &Path, opts: &Options) -> Outcome {
    let mut run = Run::new("solve", path);
    let Some(problem) = run.load(path, opts) else {
        return run.finish(EXIT_INPUT, "error");
    };
    let traj = match relaxed(&mut run, &problem) {
        Ok(t) => t,
        Err(e) => {
            run.report.errors.push(e.to_string());
            return run.finish(error_code(&e), "error");
        }
    };
    let extraction = match run.phase("extract", || {
        extract_classical(&problem.spec, &traj, problem.file.run.tol)
    }) {
        Ok(x) => x,
        Err(e) => {
            run.report.errors.push(e.to_string());
            return run.finish(error_code(&e), "error");
        }
    };
    if let Some(csv) = &opts.csv {
        let written = File::create(csv).map_err(|e| e.to_string()).and_then(|f| {
            write_trajectory_csv(&traj, Some(&extraction), BufWriter::new(f))
                .map_err(|e| e.to_string())
        });
        if let Err(e) = written {
            run.report
                .errors
                .push(format!("cannot write {}: {e}", csv.display()));
            run.report.extraction = Some(extraction);
            return run.finish(EXIT_INPUT, "error");
        }
    }
    let ok = extraction.is_success();
    run.report.extraction = Some(extraction);
    if ok {
        run.finish(EXIT_OK, "pass")
    } else {
        run.finish(EXIT_EXTRACTION, "fail")
    }
}

/// Costs of `count` random piecewise-constant classical controls, each step
/// drawn uniformly from `K`.
pub fn random_classical_costs(
    problem: &Problem,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, Error> {
    let k = &problem.spec.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut costs = Vec::with_capacity(count);
    for _ in 0..count {
        let controls: Vec<Vec<f64>> = (0..steps)
            .map(|_| {
                k.lower()
                    .iter()
                    .zip(k.upper())
                    .map(|(&lo, &hi)| {
                        if lo == hi {
                            lo
                        } else {
                            rng.random_range(lo..=hi)
                        }
                    })
                    .collect()
            })
            .collect();
        match simulate_controls(&problem.spec, &controls) {
            Ok(sim) => costs.push(sim.cost),
            Err(Error::Divergence { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(costs)
}

/// Relaxed solve against grid DP, the orientor-field probe and random
/// classical controls. Exit 1 when a classical control beats the relaxed
/// optimum by more than the tolerance.
pub fn cmd_compare(path: &Path, opts: &Options) -> Outcome {
    let mut run = Run::new("compare", path);
    let Some(problem) = run.load(path, opts) else {
        return run.finish(EXIT_INPUT, "error");
    };
    let traj = match relaxed(&mut run, &problem) {
        Ok(t) => t,
        Err(e) => {
            run.report.errors.push(e.to_string());
            return run.finish(error_code(&e), "error");
        }
    };
    let spec = &problem.spec;
    let cfg = &problem.file.run;
    let mut notes = Vec::new();

    let dp = if spec.state_dim() == 1 {
        let dp_cfg = DpConfig {
            state_range: cfg.oracle.dp_state_range.map(|[lo, hi]| (lo, hi)),
            state_points: cfg.oracle.state_points,
            control_points: cfg.oracle.control_points,
            steps: cfg.solver.steps,
        };
        match run.phase("dp", || dp_value_original(spec, &dp_cfg)) {
            Ok(r) => {
                let gap = (traj.cost - r.value).abs();
                let gap_tolerance = DP_GAP_TOL * (1.0 + r.value.abs());
                Some(DpArm {
                    value: r.value,
                    path_cost: r.path_cost,
                    state_range: r.state_range,
                    gap,
                    gap_tolerance,
                    within_tolerance: gap <= gap_tolerance,
                })
            }
            Err(e) => {
                notes.push(format!("dp arm failed: {e}"));
                None
            }
        }
    } else {
        notes.push(format!(
            "dp arm skipped: grid dynamic programming needs a scalar state, got N = {}",
            spec.state_dim()
        ));
        None
    };

    let probe = match (spec.state_dim(), spec.basis) {
        (1, ControlBasis::Power { .. }) => match run.phase("probe", || {
            orientor_convexity_probe(spec, &spec.x0, cfg.oracle.xi_grid)
        }) {
            Ok(p) => Some(p),
            Err(e) => {
                notes.push(format!("probe failed: {e}"));
                None
            }
        },
        _ => {
            notes.push("probe skipped: needs a scalar state and a power basis".into());
            None
        }
    };

    let costs = match run.phase("relaxation", || {
        random_classical_costs(
            &problem,
            cfg.solver.steps,
            cfg.oracle.random_controls,
            cfg.seed,
        )
    }) {
        Ok(c) => c,
        Err(e) => {
            run.report.errors.push(e.to_string());
            return run.finish(error_code(&e), "error");
        }
    };
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut violations = costs
        .iter()
        .filter(|c| **c < traj.cost - RELAXATION_TOL)
        .count();
    if let Some(d) = &dp {
        if d.path_cost < traj.cost - RELAXATION_TOL {
            notes.push(format!(
                "dp path cost {} beats the relaxed cost {}",
                d.path_cost, traj.cost
            ));
            violations += 1;
        }
    }
    run.report.comparison = Some(Comparison {
        relaxed_cost: traj.cost,
        dp,
        probe,
        relaxation: RelaxationArm {
            samples: costs.len(),
            best_classical_cost: best,
            min_margin: best - traj.cost,
            violations,
        },
        notes,
    });
    if violations > 0 {
        run.finish(EXIT_FAIL, "fail")
    } else {
        run.finish(EXIT_OK, "pass")
    }
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
