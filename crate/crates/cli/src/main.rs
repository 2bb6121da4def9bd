//! Command-line pipeline: scene generation, occupancy-field construction,
//! placement scoring, placement optimization, and correlation reporting.
//!
//! Every command is deterministic given its configuration and seed, writes a
//! run manifest alongside its outputs, and respects the `--threads` cap (or
//! the `SOGRID_THREADS` environment variable).

mod commands;
mod config;
mod errors;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{eval, optimize, psog, report, scene};
use errors::CliResult;

#[derive(Debug, Parser)]
#[command(name = "sogrid", version, about = "Occupancy-grid LiDAR placement toolkit")]
struct Cli {
    /// Worker thread cap; defaults to SOGRID_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a procedural labeled point-cloud scene.
    Scene(scene::SceneArgs),
    /// Build a probabilistic occupancy field from a scene.
    Psog(psog::PsogArgs),
    /// Score placements against a field.
    Eval(eval::EvalArgs),
    /// Optimize a placement and certify the result.
    Optimize(optimize::OptimizeArgs),
    /// Join metric rows with external performance numbers.
    Report(report::ReportArgs),
}

fn init_threads(cap: Option<usize>) {
    let threads = cap.or_else(|| {
        std::env::var("SOGRID_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            // Ignore failure: the global pool can only be set once (tests).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Scene(args) => scene::run(args),
        Command::Psog(args) => psog::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Optimize(args) => optimize::run(args),
        Command::Report(args) => report::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
