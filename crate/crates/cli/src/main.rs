//! `asd`: batch driver for the boundary-region experiments.
//!
//! Every subcommand writes a JSON result document (schema version 1) and,
//! where the experiment produces tabular data, CSV files next to it. All
//! lengths are dimensionless patch units.
//!
//! Exit codes: 0 success, 2 validation failure, 3 certificate failure,
//! 4 solver non-convergence.

mod error;
mod output;
mod run;
mod spec;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, EXIT_VALIDATION};
use crate::output::{default_output, run_and_write};
use crate::spec::*;

#[derive(Debug, Parser)]
#[command(name = "asd", version, about = "Intersection counts and fiber integrals for charge-one bubbles (lengths in patch units)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Seed for every random choice of the experiment.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Path of the JSON result document; CSV files are written next to it.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Decompose 3x3 matrices as rank one minus a positive multiple of a rotation.
    Reduce(ReduceParams),
    /// Count gluing configurations reducible at both marked points.
    Count(CountParams),
    /// Counts for backgrounds with two equal singular values.
    Degenerate(DegenerateParams),
    /// Follow the solutions from the model (t = 1) to the glued family (t = 0).
    Continuation(ContinuationParams),
    /// Scaling of the solution displacements under a rotation of the background.
    Sensitivity(SensitivityParams),
    /// Half-plane integral of two angle forms.
    Toy(ToyParams),
    /// The fiber integral I_p.
    Ip(IpParams),
    /// Fiber integrals over the truncated regions.
    Fiber(FiberParams),
    /// Distribution of the fiber integrand in the scale lambda.
    Concentration(ConcentrationParams),
    /// Boundary and fiber ratios.
    Report(ReportParams),
    /// Run every experiment listed in a JSON suite file.
    Suite {
        path: PathBuf,
        /// Directory for results when the suite file names none.
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn single(params: Params, seed: u64, output: Option<PathBuf>) -> ExitCode {
    let kind = params.kind();
    let out = output.unwrap_or_else(|| default_output(kind));
    let checked = params.validate().map(|()| params);
    let doc = run_and_write(kind, checked, seed, &out);
    println!("{}: {} -> {}", kind.name(), doc.summary, out.display());
    ExitCode::from(doc.exit_code())
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let params = match cli.command {
        Cmd::Reduce(p) => Params::Reduce(p),
        Cmd::Count(p) => Params::Count(p),
        Cmd::Degenerate(p) => Params::Degenerate(p),
        Cmd::Continuation(p) => Params::Continuation(p),
        Cmd::Sensitivity(p) => Params::Sensitivity(p),
        Cmd::Toy(p) => Params::Toy(p),
        Cmd::Ip(p) => Params::Ip(p),
        Cmd::Fiber(p) => Params::Fiber(p),
        Cmd::Concentration(p) => Params::Concentration(p),
        Cmd::Report(p) => Params::Report(p),
        Cmd::Suite { path, out_dir } => return run_suite_file(&path, &out_dir),
    };
    single(params, cli.seed, cli.output)
}

fn run_suite_file(path: &std::path::Path, out_dir: &std::path::Path) -> ExitCode {
    let cfg = match suite::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let summary = suite::run_suite(&cfg, out_dir);
    let dir = cfg.output_dir.clone().unwrap_or_else(|| out_dir.to_path_buf());
    for e in &summary.entries {
        println!("[{}] {}: {}", e.exit_code, e.command.name(), e.summary);
    }
    for line in &summary.headline {
        println!("{line}");
    }
    match suite::write_summary(&dir, &summary) {
        Ok(p) => println!("summary -> {}", p.display()),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(summary.exit_code.max(CliError::from(e).exit_code()));
        }
    }
    ExitCode::from(summary.exit_code)
}
