//! `scan`: seeded random equators against the exactly-two-pieces property.

use crate::commands::slice_failure;
use crate::descriptor::{check_resolution, parse_surface, ResolvedSurface};
use crate::report::{emit, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::intersection::scan_two_piece;

#[derive(Args)]
pub struct ScanArgs {
    /// Surface descriptor (inline form or file path).
    #[arg(long)]
    pub surface: String,
    /// Number of random equators.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Counting grid resolution (power of two in [32, 512]).
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScanConfig {
    surface: String,
    resolved: ResolvedSurface,
    samples: usize,
    seed: u64,
    resolution: usize,
    json: Option<String>,
}

#[derive(Serialize)]
struct FailureJson {
    index: usize,
    pole: [f64; 4],
    count: Option<usize>,
    message: Option<String>,
}

#[derive(Serialize)]
struct ScanBody {
    samples: usize,
    resolution: usize,
    seed: u64,
    curvature_negative: bool,
    /// Slice classes seen: unclassified, type 1, type 2, type 3, type 4.
    histogram: [usize; 5],
    failures: Vec<FailureJson>,
}

pub fn run(args: &ScanArgs) -> Result<Outcome, Failure> {
    let resolution = check_resolution(args.resolution)?;
    let spec = parse_surface(&args.surface)?;

    let report = scan_two_piece(&spec.surface, args.samples, args.seed, resolution)
        .map_err(slice_failure)?;
    eprintln!(
        "scan: {} equators, histogram [unclassified {}, type1 {}, type2 {}, type3 {}, type4 {}], {} failures",
        report.samples,
        report.histogram[0],
        report.histogram[1],
        report.histogram[2],
        report.histogram[3],
        report.histogram[4],
        report.failures.len()
    );

    let pass = report.pass;
    let body = ScanBody {
        samples: report.samples,
        resolution: report.resolution,
        seed: report.seed,
        curvature_negative: report.curvature_negative,
        histogram: report.histogram,
        failures: report
            .failures
            .iter()
            .map(|f| FailureJson {
                index: f.index,
                pole: f.pole,
                count: f.count,
                message: f.message.clone(),
            })
            .collect(),
    };
    let config = ScanConfig {
        surface: args.surface.clone(),
        resolved: spec.resolved,
        samples: args.samples,
        seed: args.seed,
        resolution,
        json: args.json.as_ref().map(|p| p.display().to_string()),
    };
    emit("scan", config, body, pass, args.json.as_deref())
}
