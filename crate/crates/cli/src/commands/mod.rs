//! One submodule per subcommand plus the JSON shapes they share.

pub mod classify;
pub mod holder;
pub mod project;
pub mod scan;
pub mod spectrum;
pub mod verify;

use crate::report::{numerical, usage, Failure};
use serde::Serialize;
use toruslab_core::intersection::{
    IntersectionCurve, SliceError, TangencyPoint, TangencySignature,
};
use toruslab_core::spectral::SpectralError;
use toruslab_core::SpherePoint;

/// One traced slice curve in report form.
#[derive(Serialize)]
pub struct CurveJson {
    pub winding: [i32; 2],
    pub length: f64,
    pub max_curvature: f64,
    pub min_curvature: f64,
    pub points: Vec<[f64; 4]>,
}

impl CurveJson {
    pub fn from_curve(curve: &IntersectionCurve) -> CurveJson {
        let mut max_curvature = f64::NEG_INFINITY;
        let mut min_curvature = f64::INFINITY;
        for &k in &curve.vertex_curvature {
            max_curvature = max_curvature.max(k);
            min_curvature = min_curvature.min(k);
        }
        if curve.vertex_curvature.is_empty() {
            max_curvature = 0.0;
            min_curvature = 0.0;
        }
        CurveJson {
            winding: [curve.winding.0, curve.winding.1],
            length: curve.length(),
            max_curvature,
            min_curvature,
            points: curve.points.clone(),
        }
    }
}

/// One tangential contact point in report form.
#[derive(Serialize)]
pub struct TangencyJson {
    pub u: f64,
    pub v: f64,
    pub position: [f64; 4],
    pub signature: &'static str,
    pub crossing_angle: Option<f64>,
}

impl TangencyJson {
    pub fn from_point(t: &TangencyPoint) -> TangencyJson {
        TangencyJson {
            u: t.u,
            v: t.v,
            position: t.position,
            signature: match t.signature {
                TangencySignature::Saddle => "saddle",
                TangencySignature::Definite => "definite",
                TangencySignature::Degenerate => "degenerate",
            },
            crossing_angle: t.crossing_angle,
        }
    }
}

/// Slice errors keep their library wording; everything is a numerical
/// failure by the time the flags have validated.
pub fn slice_failure(e: SliceError) -> Failure {
    numerical(format!("slice analysis failed: {e}"))
}

/// Spectral errors: a bad eigenpair count is the caller's mistake, the rest
/// are numerical.
pub fn spectral_failure(e: SpectralError) -> Failure {
    match e {
        SpectralError::BadCount { count, vertices } => usage(format!(
            "eigenpair count {count} must lie in [2, {}]",
            vertices - 1
        )),
        other => numerical(format!("spectral solve failed: {other}")),
    }
}

pub fn pole_coords(p: &SpherePoint) -> [f64; 4] {
    p.coords()
}
