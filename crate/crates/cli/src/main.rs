use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use momentrelax_cli::{
    cmd_certify, cmd_compare, cmd_solve, report_json, Options, Outcome, EXIT_INPUT,
};

/// Thread count for the internal pools; all cores when unset.
const THREADS_ENV: &str = "MOMENTRELAX_THREADS";

#[derive(Parser)]
#[command(
    name = "momentrelax",
    version,
    about = "Existence certificates and relaxed solves for polynomial-in-control problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the existence certificates that apply to the problem.
    Certify {
        /// Problem file (JSON).
        file: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the relaxed problem and extract a classical control.
    Solve {
        /// Problem file (JSON).
        file: PathBuf,
        /// Write the trajectory table here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the relaxed optimum with grid DP, the orientor probe and
    /// random classical controls.
    Compare {
        /// Problem file (JSON).
        file: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Seed for solver starts, direction sampling and random controls.
    #[arg(long)]
    seed: Option<u64>,
    /// Time steps of the relaxed solve and the DP.
    #[arg(long)]
    steps: Option<usize>,
    /// Control-side grid points (certificate u-grid, DP controls, atom grid).
    #[arg(long)]
    grid: Option<usize>,
    /// Extraction tolerance on the distance to the moment curve.
    #[arg(long)]
    tol: Option<f64>,
}

fn options(common: Common, report: Option<PathBuf>, csv: Option<PathBuf>) -> Options {
    Options {
        seed: common.seed,
        steps: common.steps,
        grid: common.grid,
        tol: common.tol,
        report,
        csv,
    }
}

fn emit(outcome: &Outcome, opts: &Options) -> i32 {
    let json = report_json(&outcome.report);
    if let Some(err) = &outcome.report.input_error {
        eprintln!("error: {err}");
    }
    for e in &outcome.report.errors {
        eprintln!("error: {e}");
    }
    match &opts.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INPUT;
            }
            println!(
                "{}: {} (exit {})",
                outcome.report.command, outcome.report.status, outcome.code
            );
            for c in &outcome.report.certificates {
                println!("  {}: {}", c.statement, c.verdict);
            }
        }
        None => print!("{json}"),
    }
    outcome.code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_INPUT as u8);
            }
        }
    }
    let code = match cli.command {
        Command::Certify {
            file,
            report,
            common,
        } => {
            let opts = options(common, report, None);
            emit(&cmd_certify(&file, &opts), &opts)
        }
        Command::Solve {
            file,
            csv,
            report,
            common,
        } => {
            let opts = options(common, report, csv);
            emit(&cmd_solve(&file, &opts), &opts)
        }
        Command::Compare {
            file,
            report,
            common,
        } => {
            let opts = options(common, report, None);
            emit(&cmd_compare(&file, &opts), &opts)
        }
    };
    ExitCode::from(code as u8)
}
