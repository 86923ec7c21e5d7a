//! `project`: stereographic export of a surface together with one slice.
//!
//! The projection pole is chosen automatically on the equator sphere, as far
//! from the surface as the candidate spiral allows. The surface mesh goes to
//! a y-up ASCII PLY with the projected equator samples appended as loose
//! vertices; the slice curves go to an SVG drawn in the plane that carries
//! the projected equator sphere.

use crate::commands::{pole_coords, slice_failure};
use crate::descriptor::{check_resolution, parse_pole, parse_surface, ResolvedSurface};
use crate::render;
use crate::report::{emit, numerical, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::intersection::classify;
use toruslab_core::sphere::{intrinsic_distance, Equator, SpherePoint};

/// Spiral candidates auditioned for the projection pole.
const POLE_CANDIDATES: usize = 2048;
/// Equator samples closer to the projection pole than this are dropped so
/// the chart stays bounded.
const POLE_EXCLUSION: f64 = 0.05;
/// Hard floor on the pole-to-surface distance.
const MIN_CLEARANCE: f64 = 1e-3;

#[derive(Args)]
pub struct ProjectArgs {
    /// Surface descriptor (inline form or file path).
    #[arg(long)]
    pub surface: String,
    /// Equator pole as `x,y,z,w`; normalized internally.
    #[arg(long, allow_hyphen_values = true)]
    pub pole: String,
    /// Mesh and trace resolution (power of two in [32, 512]).
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Equator sphere sample count for the coplanarity record.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Bound on the RMS plane residual of the projected equator samples.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_coplanar: f64,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the projected surface mesh here.
    #[arg(long)]
    pub ply: Option<PathBuf>,
    /// Write the projected slice curves here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Serialize)]
struct ProjectConfig {
    surface: String,
    resolved: ResolvedSurface,
    pole: [f64; 4],
    resolution: usize,
    samples: usize,
    tol_coplanar: f64,
    json: Option<String>,
    ply: Option<String>,
    svg: Option<String>,
}

#[derive(Serialize)]
struct ProjectBody {
    equator: [f64; 4],
    #[serde(rename = "type")]
    class: Option<u8>,
    curve_count: usize,
    projection_pole: [f64; 4],
    /// Least distance from the projection pole to a mesh vertex.
    pole_clearance: f64,
    plane_normal: [f64; 3],
    coplanarity_residual: f64,
    equator_samples: usize,
}

pub fn run(args: &ProjectArgs) -> Result<Outcome, Failure> {
    let resolution = check_resolution(args.resolution)?;
    let spec = parse_surface(&args.surface)?;
    let pole = parse_pole(&args.pole)?;
    let equator = Equator::new(pole);

    let mesh = spec.surface.sample_mesh(resolution, resolution);
    let report = classify(&spec.surface, &equator, resolution).map_err(slice_failure)?;

    let (view, clearance) =
        render::farthest_spiral_pole(&equator, &mesh.positions, POLE_CANDIDATES);
    if clearance <= MIN_CLEARANCE {
        return Err(numerical(format!(
            "projection pole sits on the surface: clearance {clearance:.3e} <= {MIN_CLEARANCE:.0e}"
        )));
    }

    // Projected equator sphere samples; their plane is the figure canvas.
    let mut samples3 = Vec::new();
    for p in render::equator_spiral(&equator, args.samples) {
        if intrinsic_distance(&view, &p) > POLE_EXCLUSION {
            samples3.push(render::project_point(&view, &p)?);
        }
    }
    if samples3.len() < 3 {
        return Err(numerical("too few equator samples away from the pole".to_string()));
    }
    let (normal, residual, to2d) = render::figure_plane(&samples3);

    if let Some(path) = &args.ply {
        let mut grid = Vec::with_capacity(mesh.positions.len());
        for p in &mesh.positions {
            let q = SpherePoint::new(*p)
                .map_err(|e| numerical(format!("mesh vertex off sphere: {e}")))?;
            grid.push(render::project_point(&view, &q)?);
        }
        render::write_grid_ply(path, mesh.n_u, mesh.n_v, &grid, &samples3, "equator samples")?;
    }

    if let Some(path) = &args.svg {
        let mut curves2d = Vec::new();
        for c in &report.curves {
            let mut flat = Vec::with_capacity(c.points.len());
            for p in &c.points {
                let q = SpherePoint::new(*p)
                    .map_err(|e| numerical(format!("curve point off sphere: {e}")))?;
                flat.push(to2d(&render::project_point(&view, &q)?));
            }
            curves2d.push((flat, c.closed));
        }
        let mut markers = Vec::new();
        for t in &report.tangencies.points {
            let q = SpherePoint::new(t.position)
                .map_err(|e| numerical(format!("tangency off sphere: {e}")))?;
            markers.push(to2d(&render::project_point(&view, &q)?));
        }
        render::write_svg(path, &curves2d, &markers)?;
    }

    let pass = residual <= args.tol_coplanar;
    let body = ProjectBody {
        equator: pole_coords(&equator.pole()),
        class: report.class.code(),
        curve_count: report.curves.len(),
        projection_pole: pole_coords(&view),
        pole_clearance: clearance,
        plane_normal: normal,
        coplanarity_residual: residual,
        equator_samples: samples3.len(),
    };
    let config = ProjectConfig {
        surface: args.surface.clone(),
        resolved: spec.resolved,
        pole: pole_coords(&equator.pole()),
        resolution,
        samples: args.samples,
        tol_coplanar: args.tol_coplanar,
        json: args.json.as_ref().map(|p| p.display().to_string()),
        ply: args.ply.as_ref().map(|p| p.display().to_string()),
        svg: args.svg.as_ref().map(|p| p.display().to_string()),
    };
    emit("project", config, body, pass, args.json.as_deref())
}
