//! `classify`: trace one equatorial slice and name its type.
//!
//! Emits the intersection report as JSON and optionally renders the curves
//! as a PLY polyline set and the stereographic picture as SVG. The picture
//! projects the slice from a point of the equator sphere far away from the
//! curves, so the whole figure lands in one plane.

use crate::commands::{pole_coords, slice_failure, CurveJson, TangencyJson};
use crate::descriptor::{check_resolution, parse_pole, parse_surface, ResolvedSurface};
use crate::render;
use crate::report::{emit, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::intersection::{classify, IntersectionReport};
use toruslab_core::sphere::{Equator, SpherePoint};

#[derive(Args)]
pub struct ClassifyArgs {
    /// Surface descriptor (inline form or file path).
    #[arg(long)]
    pub surface: String,
    /// Equator pole as `x,y,z,w`; normalized internally.
    #[arg(long, allow_hyphen_values = true)]
    pub pole: String,
    /// Trace grid resolution (power of two in [32, 512]).
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the slice curves as PLY polylines.
    #[arg(long)]
    pub ply: Option<PathBuf>,
    /// Write the stereographic picture of the slice as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Serialize)]
struct ClassifyConfig {
    surface: String,
    resolved: ResolvedSurface,
    pole: [f64; 4],
    resolution: usize,
    json: Option<String>,
    ply: Option<String>,
    svg: Option<String>,
}

#[derive(Serialize)]
struct ClassifyBody {
    equator: [f64; 4],
    #[serde(rename = "type")]
    class: Option<u8>,
    curves: Vec<CurveJson>,
    tangencies: Vec<TangencyJson>,
    component_count: usize,
    resolution: usize,
}

pub fn run(args: &ClassifyArgs) -> Result<Outcome, Failure> {
    let resolution = check_resolution(args.resolution)?;
    let spec = parse_surface(&args.surface)?;
    let pole = parse_pole(&args.pole)?;
    let equator = Equator::new(pole);

    let report = classify(&spec.surface, &equator, resolution).map_err(slice_failure)?;

    if let Some(path) = &args.ply {
        let curves = frame_curves(&report, &equator);
        render::write_curves_ply(path, &curves)?;
    }
    if let Some(path) = &args.svg {
        write_picture(path, &report, &equator)?;
    }

    let body = ClassifyBody {
        equator: pole_coords(&equator.pole()),
        class: report.class.code(),
        curves: report.curves.iter().map(CurveJson::from_curve).collect(),
        tangencies: report
            .tangencies
            .points
            .iter()
            .map(TangencyJson::from_point)
            .collect(),
        component_count: report.component_count,
        resolution: report.resolution,
    };
    let config = ClassifyConfig {
        surface: args.surface.clone(),
        resolved: spec.resolved,
        pole: pole_coords(&equator.pole()),
        resolution,
        json: args.json.as_ref().map(|p| p.display().to_string()),
        ply: args.ply.as_ref().map(|p| p.display().to_string()),
        svg: args.svg.as_ref().map(|p| p.display().to_string()),
    };
    let pass = body.class.is_some();
    emit("classify", config, body, pass, args.json.as_deref())
}

/// Curve polylines in the orthonormal frame of the equator sphere, where
/// they live on the unit 2-sphere.
fn frame_curves(report: &IntersectionReport, equator: &Equator) -> Vec<(Vec<[f64; 3]>, bool)> {
    report
        .curves
        .iter()
        .map(|c| {
            let pts = c.points.iter().map(|p| equator.to_frame(p)).collect();
            (pts, c.closed)
        })
        .collect()
}

/// Stereographic picture: project every curve point from a spiral point of
/// the equator sphere chosen far from the slice, then draw in the image
/// plane fitted through the projected sphere samples.
fn write_picture(
    path: &std::path::Path,
    report: &IntersectionReport,
    equator: &Equator,
) -> Result<(), Failure> {
    let avoid: Vec<[f64; 4]> = report
        .curves
        .iter()
        .flat_map(|c| c.points.iter().copied())
        .chain(report.tangencies.points.iter().map(|t| t.position))
        .collect();
    let (view, _) = render::farthest_spiral_pole(equator, &avoid, 1024);

    // The plane is fitted from spread-out sphere samples rather than the
    // curves themselves so that near-circular slices cannot skew it.
    let mut plane_samples = Vec::new();
    for p in render::equator_spiral(equator, 256) {
        if toruslab_core::sphere::intrinsic_distance(&view, &p) > 0.35 {
            plane_samples.push(render::project_point(&view, &p)?);
        }
    }
    let (_, _, to2d) = render::figure_plane(&plane_samples);

    let mut curves2d = Vec::new();
    for c in &report.curves {
        let mut flat = Vec::with_capacity(c.points.len());
        for p in &c.points {
            let q = SpherePoint::new(*p)
                .map_err(|e| crate::report::numerical(format!("curve point off sphere: {e}")))?;
            flat.push(to2d(&render::project_point(&view, &q)?));
        }
        curves2d.push((flat, c.closed));
    }
    let mut markers = Vec::new();
    for t in &report.tangencies.points {
        let q = SpherePoint::new(t.position)
            .map_err(|e| crate::report::numerical(format!("tangency off sphere: {e}")))?;
        markers.push(to2d(&render::project_point(&view, &q)?));
    }
    render::write_svg(path, &curves2d, &markers)
}
