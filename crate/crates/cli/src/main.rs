//! `toruslab`: command line for the torus laboratory.
//!
//! Every subcommand prints one JSON report on stdout (tables and progress go
//! to stderr) and exits 0 when the report's `pass` field is true, 1 when a
//! check failed, 2 on usage errors, and 3 on numerical failures. Reruns with
//! the same flags produce byte-identical reports.

mod commands;
mod descriptor;
mod render;
mod report;

use clap::{Parser, Subcommand};
use commands::{classify, holder, project, scan, spectrum, verify};
use report::{Failure, Outcome};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "toruslab",
    version,
    about = "Numerical laboratory for tori immersed in the unit 3-sphere",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the square torus against its closed-form identities.
    VerifyClifford(verify::VerifyArgs),
    /// Trace one equatorial slice and classify it.
    Classify(classify::ClassifyArgs),
    /// Sample random equators against the exactly-two-pieces property.
    Scan(scan::ScanArgs),
    /// Solve for the low end of the Laplace-Beltrami spectrum.
    Spectrum(spectrum::SpectrumArgs),
    /// Export the stereographic picture: PLY mesh and SVG slice.
    Project(project::ProjectArgs),
    /// Sampled Holder norms and displacement of a sphere map.
    Holder(holder::HolderArgs),
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::VerifyClifford(args) => verify::run(args),
        Command::Classify(args) => classify::run(args),
        Command::Scan(args) => scan::run(args),
        Command::Spectrum(args) => spectrum::run(args),
        Command::Project(args) => project::run(args),
        Command::Holder(args) => holder::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFail) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
