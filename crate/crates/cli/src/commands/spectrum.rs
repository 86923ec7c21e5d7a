//! `spectrum`: low end of the Laplace-Beltrami spectrum of a sampled torus.
//!
//! Prints a lambda table on stderr, emits the spectral result as JSON, and
//! runs the eigenvalue comparison test when the surface is discretely
//! minimal. Eigenfunctions can be dumped as a binary grid file.

use crate::commands::spectral_failure;
use crate::descriptor::{check_resolution, parse_surface, ResolvedSurface};
use crate::render;
use crate::report::{emit, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::spectral::{
    first_eigenpairs, montiel_ros_test, SpectralError, SpectralVerdict,
};

#[derive(Args)]
pub struct SpectrumArgs {
    /// Surface descriptor (inline form or file path).
    #[arg(long)]
    pub surface: String,
    /// Grid resolution (power of two in [32, 512]).
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Number of eigenpairs, constant mode included. Counts that stop in
    /// the middle of a degenerate cluster can stall the solver; the default
    /// covers the constant mode plus the first two groups of the reference
    /// surfaces.
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    /// Margin for the eigenvalue comparison verdict.
    #[arg(long, default_value_t = 0.02)]
    pub margin: f64,
    /// Bound on each solver residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_residual: f64,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Dump eigenfunctions as a binary grid file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Serialize)]
struct SpectrumConfig {
    surface: String,
    resolved: ResolvedSurface,
    resolution: usize,
    count: usize,
    margin: f64,
    tol_residual: f64,
    json: Option<String>,
    dump: Option<String>,
}

#[derive(Serialize)]
struct MontielRosJson {
    verdict: &'static str,
    lambda1: f64,
    margin: f64,
    coordinate_residual: f64,
    lower_bound_violated: bool,
}

#[derive(Serialize)]
struct SpectrumBody {
    eigenvalues: Vec<f64>,
    multiplicity_groups: Vec<usize>,
    residuals: Vec<f64>,
    resolution: [usize; 2],
    lambda1: f64,
    /// Absent when the surface is not discretely minimal, where the
    /// eigenvalue comparison test does not apply.
    montiel_ros: Option<MontielRosJson>,
}

pub fn run(args: &SpectrumArgs) -> Result<Outcome, Failure> {
    let resolution = check_resolution(args.resolution)?;
    let spec = parse_surface(&args.surface)?;

    let mesh = spec.surface.sample_mesh(resolution, resolution);
    let result = first_eigenpairs(&mesh, args.count).map_err(spectral_failure)?;

    let comparison = match montiel_ros_test(&mesh, args.margin) {
        Ok(r) => Some(MontielRosJson {
            verdict: match r.verdict {
                SpectralVerdict::BelowTwo => "below_two",
                SpectralVerdict::CliffordConsistent => "clifford_consistent",
                SpectralVerdict::Inconclusive => "inconclusive",
            },
            lambda1: r.lambda1,
            margin: r.margin,
            coordinate_residual: r.coordinate_residual,
            lower_bound_violated: r.lower_bound_violated,
        }),
        Err(SpectralError::NotMinimal { .. }) => None,
        Err(e) => return Err(spectral_failure(e)),
    };

    eprintln!("  #   lambda               residual");
    let mut group_start = 0;
    for (gi, &size) in result.multiplicity_groups.iter().enumerate() {
        for i in group_start..group_start + size {
            eprintln!(
                "{i:>3}   {:<18.12}   {:.3e}   group {gi} (x{size})",
                result.eigenvalues[i], result.residuals[i]
            );
        }
        group_start += size;
    }

    if let Some(path) = &args.dump {
        render::write_eigenfunctions(path, mesh.n_u, mesh.n_v, &result.eigenfunctions)?;
    }

    let pass = result
        .residuals
        .iter()
        .all(|r| r.is_finite() && *r <= args.tol_residual)
        && comparison
            .as_ref()
            .map(|c| !c.lower_bound_violated)
            .unwrap_or(true);

    let body = SpectrumBody {
        eigenvalues: result.eigenvalues.clone(),
        multiplicity_groups: result.multiplicity_groups.clone(),
        residuals: result.residuals.clone(),
        resolution: [result.resolution.0, result.resolution.1],
        lambda1: result.eigenvalues[1],
        montiel_ros: comparison,
    };
    let config = SpectrumConfig {
        surface: args.surface.clone(),
        resolved: spec.resolved,
        resolution,
        count: args.count,
        margin: args.margin,
        tol_residual: args.tol_residual,
        json: args.json.as_ref().map(|p| p.display().to_string()),
        dump: args.dump.as_ref().map(|p| p.display().to_string()),
    };
    emit("spectrum", config, body, pass, args.json.as_deref())
}
