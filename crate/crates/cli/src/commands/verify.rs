//! `verify-clifford`: the square torus against its closed-form identities.
//!
//! Five checks run in sequence: pointwise curvature identities at random
//! parameters, the seeded two-piece scan, the slice-type histogram, the
//! first nonzero eigenvalue with its multiplicity, and the coordinate
//! eigenresidual. The command passes only when every check does.

use crate::commands::{slice_failure, spectral_failure};
use crate::descriptor::check_resolution;
use crate::report::{emit, Check, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::intersection::scan_two_piece;
use toruslab_core::sample::{random_uv, rng_from_seed};
use toruslab_core::spectral::{coordinate_eigenresidual, first_eigenpairs};
use toruslab_core::torus::Surface;

/// Equator scan inside the verification pipeline: sample count and grid.
const SCAN_SAMPLES: usize = 200;
const SCAN_RESOLUTION: usize = 64;
/// Eigenpairs solved: constant mode, the four coordinate modes, one spare.
const EIGEN_COUNT: usize = 6;

#[derive(Args)]
pub struct VerifyArgs {
    /// Spectral grid resolution (power of two in [32, 512]).
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Random parameter points for the curvature identities.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Bound on every pointwise curvature identity.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_curvature: f64,
    /// Relative bound on the first nonzero eigenvalue against 2.
    #[arg(long, default_value_t = 0.02)]
    pub tol_lambda: f64,
    /// Bound on the coordinate eigenresidual.
    #[arg(long, default_value_t = 0.05)]
    pub tol_residual: f64,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyConfig {
    surface: &'static str,
    resolution: usize,
    samples: usize,
    scan_samples: usize,
    scan_resolution: usize,
    seed: u64,
    eigen_count: usize,
    tol_curvature: f64,
    tol_lambda: f64,
    tol_residual: f64,
    json: Option<String>,
}

#[derive(Serialize)]
struct VerifyBody {
    checks: Vec<Check>,
    curvature_deviation: f64,
    histogram: [usize; 5],
    scan_failures: usize,
    eigenvalues: Vec<f64>,
    multiplicity_groups: Vec<usize>,
    solver_residuals: Vec<f64>,
    lambda1: f64,
    lambda1_relative_error: f64,
    coordinate_eigenresidual: f64,
}

pub fn run(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let resolution = check_resolution(args.resolution)?;
    let surface = Surface::clifford();

    // Pointwise identities: the square torus is minimal and intrinsically
    // flat with principal curvatures +1 and -1 everywhere.
    let mut rng = rng_from_seed(args.seed);
    let mut deviation = 0.0f64;
    for _ in 0..args.samples {
        let (u, v) = random_uv(&mut rng);
        let g = surface.geometry_at(u, v);
        let (hi, lo) = if g.k1 >= g.k2 { (g.k1, g.k2) } else { (g.k2, g.k1) };
        deviation = deviation
            .max(g.mean.abs())
            .max(g.intrinsic.abs())
            .max((hi - 1.0).abs())
            .max((lo + 1.0).abs());
    }

    let scan = scan_two_piece(&surface, SCAN_SAMPLES, args.seed, SCAN_RESOLUTION)
        .map_err(slice_failure)?;
    // Every transversal slice of the square torus is a pair of essential
    // circles or a tangent pair crossing twice; anything else in the
    // histogram is a defect.
    let off_types = scan.histogram[0] + scan.histogram[1] + scan.histogram[3];

    let mesh = surface.sample_mesh(resolution, resolution);
    let spectrum = first_eigenpairs(&mesh, EIGEN_COUNT).map_err(spectral_failure)?;
    let lambda1 = spectrum.eigenvalues[1];
    let lambda1_err = (lambda1 - 2.0).abs() / 2.0;
    let group = spectrum.multiplicity_groups.get(1).copied().unwrap_or(0);
    let residual = coordinate_eigenresidual(&mesh).map_err(spectral_failure)?;

    let checks = vec![
        Check::bounded("curvature_identities", deviation, args.tol_curvature),
        Check::verdict(
            "two_piece_scan",
            scan.failures.len() as f64,
            0.0,
            scan.pass && scan.curvature_negative,
        ),
        Check::verdict("type_histogram", off_types as f64, 0.0, off_types == 0),
        Check::bounded("lambda1", lambda1_err, args.tol_lambda),
        Check::verdict("eigen_group_dimension", group as f64, 4.0, group == 4),
        Check::bounded("coordinate_eigenresidual", residual, args.tol_residual),
    ];
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        eprintln!(
            "{:<26} {}  value {:.3e}  tolerance {:.3e}",
            c.name,
            if c.pass { "ok  " } else { "FAIL" },
            c.value,
            c.tolerance
        );
    }

    let config = VerifyConfig {
        surface: "clifford",
        resolution,
        samples: args.samples,
        scan_samples: SCAN_SAMPLES,
        scan_resolution: SCAN_RESOLUTION,
        seed: args.seed,
        eigen_count: EIGEN_COUNT,
        tol_curvature: args.tol_curvature,
        tol_lambda: args.tol_lambda,
        tol_residual: args.tol_residual,
        json: args.json.as_ref().map(|p| p.display().to_string()),
    };
    let body = VerifyBody {
        checks,
        curvature_deviation: deviation,
        histogram: scan.histogram,
        scan_failures: scan.failures.len(),
        eigenvalues: spectrum.eigenvalues.clone(),
        multiplicity_groups: spectrum.multiplicity_groups.clone(),
        solver_residuals: spectrum.residuals.clone(),
        lambda1,
        lambda1_relative_error: lambda1_err,
        coordinate_eigenresidual: residual,
    };
    emit("verify-clifford", config, body, pass, args.json.as_deref())
}
