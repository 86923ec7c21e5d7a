//! `holder`: sampled Holder norms and the displacement functional of a
//! sphere map, via its canonical degree-one extension to the annulus.
//!
//! The report carries both summands of the functional (forward and inverse
//! deviation from the identity), the functional itself, and the lattice
//! minimality residuals of the pushed-forward square torus.

use crate::descriptor::parse_float;
use crate::report::{emit, numerical, usage, Failure, Outcome};
use clap::Args;
use serde::Serialize;
use std::path::PathBuf;
use toruslab_core::deform::{
    c2alpha_norm, canonical_extend, minimality_residual_at_lattice, tau_with_budget,
    DeformError, HolderReport, SphereMap,
};
use toruslab_core::sphere::Congruence;

/// Lattice sizes whose minimality residuals go into every report.
const LATTICE_SIZES: [usize; 4] = [1, 2, 4, 8];

#[derive(Args)]
pub struct HolderArgs {
    /// Sphere map: identity, rotation:<angle>, twist:<rate>, bump:<amplitude>.
    #[arg(long)]
    pub map: String,
    /// Holder exponent in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Annulus point samples for the sup terms.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Point pairs for the seminorm term.
    #[arg(long, default_value_t = 1_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Mirror the report into this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct HolderConfig {
    map: String,
    alpha: f64,
    samples: usize,
    pairs: usize,
    seed: u64,
    json: Option<String>,
}

#[derive(Serialize)]
struct MapJson {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    parameter: Option<f64>,
}

#[derive(Serialize)]
struct NormJson {
    alpha: f64,
    sup_term: f64,
    grad_term: f64,
    hess_term: f64,
    seminorm_term: f64,
    total: f64,
    samples: usize,
    pairs: usize,
    seed: u64,
}

impl NormJson {
    fn from_report(r: &HolderReport) -> NormJson {
        NormJson {
            alpha: r.alpha,
            sup_term: r.sup_term,
            grad_term: r.grad_term,
            hess_term: r.hess_term,
            seminorm_term: r.seminorm_term,
            total: r.total,
            samples: r.samples,
            pairs: r.pairs,
            seed: r.seed,
        }
    }
}

#[derive(Serialize)]
struct LatticeJson {
    n: usize,
    residual: f64,
}

#[derive(Serialize)]
struct HolderBody {
    map: MapJson,
    forward: NormJson,
    inverse: NormJson,
    tau: f64,
    lattice_residuals: Vec<LatticeJson>,
}

fn deform_failure(e: DeformError) -> Failure {
    match e {
        DeformError::BadExponent { .. } | DeformError::BudgetTooSmall { .. } => {
            usage(format!("bad norm request: {e}"))
        }
        other => numerical(format!("deformation analysis failed: {other}")),
    }
}

fn parse_map(text: &str) -> Result<(SphereMap, MapJson), Failure> {
    if text == "identity" {
        return Ok((SphereMap::Identity, MapJson { kind: "identity", parameter: None }));
    }
    if let Some(rest) = text.strip_prefix("rotation:") {
        let angle = parse_float(rest, "rotation angle")?;
        let (c, s) = (angle.cos(), angle.sin());
        let q = Congruence::from_matrix([
            [c, -s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .expect("rotation block is orthogonal");
        return Ok((
            SphereMap::Rotation(q),
            MapJson { kind: "rotation", parameter: Some(angle) },
        ));
    }
    if let Some(rest) = text.strip_prefix("twist:") {
        let rate = parse_float(rest, "twist rate")?;
        return Ok((
            SphereMap::Twist { rate },
            MapJson { kind: "twist", parameter: Some(rate) },
        ));
    }
    if let Some(rest) = text.strip_prefix("bump:") {
        let amplitude = parse_float(rest, "bump amplitude")?;
        return Ok((
            SphereMap::NormalBump { amplitude },
            MapJson { kind: "bump", parameter: Some(amplitude) },
        ));
    }
    Err(usage(format!(
        "unknown map '{text}': expected identity, rotation:<angle>, twist:<rate>, bump:<amplitude>"
    )))
}

pub fn run(args: &HolderArgs) -> Result<Outcome, Failure> {
    let (map, map_json) = parse_map(&args.map)?;

    let forward = canonical_extend(map.clone()).minus_identity();
    let forward_norm =
        c2alpha_norm(&forward, args.alpha, args.samples, args.pairs, args.seed)
            .map_err(deform_failure)?;

    let inverse_map = map.inverse().ok_or_else(|| {
        numerical(format!("map '{}' has no closed-form inverse", args.map))
    })?;
    let inverse = canonical_extend(inverse_map).minus_identity();
    let inverse_norm =
        c2alpha_norm(&inverse, args.alpha, args.samples, args.pairs, args.seed)
            .map_err(deform_failure)?;

    let extension = canonical_extend(map.clone());
    let tau = tau_with_budget(&extension, args.alpha, args.samples, args.pairs, args.seed)
        .map_err(deform_failure)?;

    let mut lattice_residuals = Vec::new();
    for n in LATTICE_SIZES {
        let residual = minimality_residual_at_lattice(&map, n).map_err(deform_failure)?;
        lattice_residuals.push(LatticeJson { n, residual });
    }

    eprintln!(
        "tau = {tau:.6e}, forward norm {:.6e}, inverse norm {:.6e}",
        forward_norm.total, inverse_norm.total
    );

    let body = HolderBody {
        map: map_json,
        forward: NormJson::from_report(&forward_norm),
        inverse: NormJson::from_report(&inverse_norm),
        tau,
        lattice_residuals,
    };
    let config = HolderConfig {
        map: args.map.clone(),
        alpha: args.alpha,
        samples: args.samples,
        pairs: args.pairs,
        seed: args.seed,
        json: args.json.as_ref().map(|p| p.display().to_string()),
    };
    emit("holder", config, body, true, args.json.as_deref())
}
