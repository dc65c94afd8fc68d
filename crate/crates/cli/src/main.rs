//! Command line front end: model visibility curves and comparisons,
//! electron-optics beamline traces, the Wien-filter round trip, the full
//! synthetic-experiment pipeline, and stand-alone image analysis.
//!
//! Exit codes: 0 success, 2 configuration, 3 convergence, 4 degraded
//! analysis output, 1 anything else. All outputs are byte-deterministic
//! for a fixed config and seed.

mod analyze;
mod common;
mod failure;
mod models;
mod optics;
mod pipeline;
mod wien;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aloof",
    version,
    about = "Decoherence visibility curves, beamline traces, and synthetic interference experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate V(z) for selected models and separations, with a comparison CSV
    Models(models::ModelsArgs),
    /// Trace both partial beams through a beamline; report marker separations
    Optics(optics::OpticsArgs),
    /// Synthesize a Wien-filter contrast scan and extract the path separation
    Wien(wien::WienArgs),
    /// Full synthetic experiment: curve, image, analysis, comparison
    Pipeline(pipeline::PipelineArgs),
    /// Analyze an existing PGM image into a contrast profile
    Analyze(analyze::AnalyzeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Models(args) => models::run(args),
        Command::Optics(args) => optics::run(args),
        Command::Wien(args) => wien::run(args),
        Command::Pipeline(args) => pipeline::run(args),
        Command::Analyze(args) => analyze::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
