//! File renderers: PLY meshes, SVG slice figures, binary eigenfunction grids.
//!
//! Everything here is deterministic formatting; geometry decisions (which
//! pole to project from, which plane carries the figure) live in small
//! helpers so classify and project share one picture pipeline.

use crate::report::{write_atomic, Failure};
use std::fmt::Write as _;
use std::path::Path;
use toruslab_core::fit::plane_fit_origin;
use toruslab_core::sphere::{stereographic_project, Equator, SpherePoint};
use toruslab_core::vec4::{dot, Vec4};

/// Golden angle used by the sphere spiral, in radians.
const GOLDEN_ANGLE: f64 = 2.399963229728653;

/// Rotates chart coordinates into the y-up convention used by the PLY files:
/// the chart's vertical axis becomes +y, and orientation is preserved.
pub fn to_y_up(p: [f64; 3]) -> [f64; 3] {
    [p[0], p[2], -p[1]]
}

/// Evenly spread unit vectors expressed in the frame of `equator`, embedded
/// back into the 3-sphere. Point `k` of `n` sits at height `1 - 2(k+1/2)/n`
/// on a golden-angle spiral.
pub fn equator_spiral(equator: &Equator, n: usize) -> Vec<SpherePoint> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let theta = GOLDEN_ANGLE * k as f64;
        let q = equator.from_frame(&[r * theta.cos(), r * theta.sin(), z]);
        out.push(SpherePoint::new(q).expect("frame embedding is unit length"));
    }
    out
}

/// Picks the spiral point of `S(v)` farthest from every vector in `avoid`
/// (chordal scoring, which orders the same as intrinsic distance). Returns
/// the point and its intrinsic distance to the nearest avoided vector.
pub fn farthest_spiral_pole(
    equator: &Equator,
    avoid: &[Vec4],
    candidates: usize,
) -> (SpherePoint, f64) {
    let mut best: Option<(SpherePoint, f64)> = None;
    for p in equator_spiral(equator, candidates) {
        let c = p.coords();
        let mut closest_dot = -1.0f64;
        for a in avoid {
            closest_dot = closest_dot.max(dot(&c, a));
        }
        let keep = match &best {
            Some((_, d)) => closest_dot < *d,
            None => true,
        };
        if keep {
            best = Some((p, closest_dot));
        }
    }
    let (pole, closest_dot) = best.expect("spiral is nonempty");
    (pole, closest_dot.clamp(-1.0, 1.0).acos())
}

/// Projects a sphere point from `pole`, or reports the failure as exit 3.
pub fn project_point(pole: &SpherePoint, p: &SpherePoint) -> Result<[f64; 3], Failure> {
    stereographic_project(pole, p)
        .map_err(|e| crate::report::numerical(format!("stereographic projection failed: {e}")))
}

/// Orthonormal basis of the plane through the origin with normal `w`,
/// chosen deterministically from the least aligned coordinate axis.
pub fn plane_basis(w: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = if w[0].abs() <= w[1].abs() && w[0].abs() <= w[2].abs() {
        [1.0, 0.0, 0.0]
    } else if w[1].abs() <= w[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let d = axis[0] * w[0] + axis[1] * w[1] + axis[2] * w[2];
    let mut a = [axis[0] - d * w[0], axis[1] - d * w[1], axis[2] - d * w[2]];
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    for x in &mut a {
        *x /= n;
    }
    let b = [
        w[1] * a[2] - w[2] * a[1],
        w[2] * a[0] - w[0] * a[2],
        w[0] * a[1] - w[1] * a[0],
    ];
    (a, b)
}

/// Fits the figure plane through the origin from projected `S(v)` samples
/// and returns (normal, residual, in-plane coordinate map).
pub fn figure_plane(samples: &[[f64; 3]]) -> ([f64; 3], f64, impl Fn(&[f64; 3]) -> [f64; 2]) {
    let (normal, residual) = plane_fit_origin(samples);
    let (a, b) = plane_basis(normal);
    let to2d = move |p: &[f64; 3]| {
        [
            p[0] * a[0] + p[1] * a[1] + p[2] * a[2],
            p[0] * b[0] + p[1] * b[1] + p[2] * b[2],
        ]
    };
    (normal, residual, to2d)
}

/// ASCII PLY of a closed quad grid plus optional loose marker vertices.
/// Coordinates are written y-up in double precision; the comment lines
/// record how many vertices belong to the mesh and how many are markers.
pub fn write_grid_ply(
    path: &Path,
    n_u: usize,
    n_v: usize,
    grid: &[[f64; 3]],
    markers: &[[f64; 3]],
    marker_label: &str,
) -> Result<(), Failure> {
    assert_eq!(grid.len(), n_u * n_v);
    let mut text = String::new();
    let _ = writeln!(text, "ply");
    let _ = writeln!(text, "format ascii 1.0");
    let _ = writeln!(text, "comment projected torus grid, y-up");
    let _ = writeln!(text, "comment mesh vertices {}", grid.len());
    let _ = writeln!(text, "comment {} {}", marker_label, markers.len());
    let _ = writeln!(text, "element vertex {}", grid.len() + markers.len());
    for axis in ["x", "y", "z"] {
        let _ = writeln!(text, "property double {axis}");
    }
    let _ = writeln!(text, "element face {}", n_u * n_v);
    let _ = writeln!(text, "property list uchar int vertex_indices");
    let _ = writeln!(text, "end_header");
    for p in grid.iter().chain(markers) {
        let q = to_y_up(*p);
        let _ = writeln!(text, "{:.17e} {:.17e} {:.17e}", q[0], q[1], q[2]);
    }
    for iu in 0..n_u {
        for iv in 0..n_v {
            let a = iu * n_v + iv;
            let b = ((iu + 1) % n_u) * n_v + iv;
            let c = ((iu + 1) % n_u) * n_v + (iv + 1) % n_v;
            let d = iu * n_v + (iv + 1) % n_v;
            let _ = writeln!(text, "4 {a} {b} {c} {d}");
        }
    }
    write_atomic(path, text.as_bytes())
}

/// ASCII PLY of polylines (vertex + edge elements), y-up.
pub fn write_curves_ply(path: &Path, curves: &[(Vec<[f64; 3]>, bool)]) -> Result<(), Failure> {
    let n_vertices: usize = curves.iter().map(|(c, _)| c.len()).sum();
    let n_edges: usize = curves
        .iter()
        .map(|(c, closed)| if *closed { c.len() } else { c.len().saturating_sub(1) })
        .sum();
    let mut text = String::new();
    let _ = writeln!(text, "ply");
    let _ = writeln!(text, "format ascii 1.0");
    let _ = writeln!(text, "comment slice curves, y-up");
    let _ = writeln!(text, "comment curves {}", curves.len());
    let _ = writeln!(text, "element vertex {n_vertices}");
    for axis in ["x", "y", "z"] {
        let _ = writeln!(text, "property double {axis}");
    }
    let _ = writeln!(text, "element edge {n_edges}");
    let _ = writeln!(text, "property int vertex1");
    let _ = writeln!(text, "property int vertex2");
    let _ = writeln!(text, "end_header");
    for (curve, _) in curves {
        for p in curve {
            let q = to_y_up(*p);
            let _ = writeln!(text, "{:.17e} {:.17e} {:.17e}", q[0], q[1], q[2]);
        }
    }
    let mut offset = 0usize;
    for (curve, closed) in curves {
        for i in 0..curve.len().saturating_sub(1) {
            let _ = writeln!(text, "{} {}", offset + i, offset + i + 1);
        }
        if *closed && curve.len() > 1 {
            let _ = writeln!(text, "{} {}", offset + curve.len() - 1, offset);
        }
        offset += curve.len();
    }
    write_atomic(path, text.as_bytes())
}

const CURVE_COLORS: [&str; 4] = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df"];

/// SVG figure of planar curves with optional point markers. The vertical
/// axis is flipped so the plane's orientation matches the picture.
pub fn write_svg(
    path: &Path,
    curves: &[(Vec<[f64; 2]>, bool)],
    markers: &[[f64; 2]],
) -> Result<(), Failure> {
    let flipped: Vec<(Vec<[f64; 2]>, bool)> = curves
        .iter()
        .map(|(c, closed)| (c.iter().map(|p| [p[0], -p[1]]).collect(), *closed))
        .collect();
    let marks: Vec<[f64; 2]> = markers.iter().map(|p| [p[0], -p[1]]).collect();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in flipped.iter().flat_map(|(c, _)| c.iter()).chain(marks.iter()) {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    if !(lo[0].is_finite() && hi[0].is_finite()) {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let margin = 0.05 * span;
    let (x0, y0) = (lo[0] - margin, lo[1] - margin);
    let (w, h) = (hi[0] - lo[0] + 2.0 * margin, hi[1] - lo[1] + 2.0 * margin);
    let stroke = 0.008 * span;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\" width=\"720\" height=\"{:.0}\">",
        720.0 * h / w
    );
    let _ = writeln!(
        text,
        "  <rect x=\"{x0:.6}\" y=\"{y0:.6}\" width=\"{w:.6}\" height=\"{h:.6}\" fill=\"white\"/>"
    );
    for (i, (curve, closed)) in flipped.iter().enumerate() {
        if curve.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (j, p) in curve.iter().enumerate() {
            let c = if j == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{c} {:.6},{:.6} ", p[0], p[1]);
        }
        if *closed {
            d.push('Z');
        }
        let color = CURVE_COLORS[i % CURVE_COLORS.len()];
        let _ = writeln!(
            text,
            "  <path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke:.6}\"/>",
            d.trim_end()
        );
    }
    for p in &marks {
        let _ = writeln!(
            text,
            "  <circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" fill=\"black\"/>",
            p[0],
            p[1],
            1.6 * stroke
        );
    }
    let _ = writeln!(text, "</svg>");
    write_atomic(path, text.as_bytes())
}

/// Magic number of the binary eigenfunction dump ("TLEF", little endian).
pub const EIGENFUNCTION_MAGIC: u32 = u32::from_le_bytes(*b"TLEF");

/// Binary grid dump: a 16-byte header (magic, n_u, n_v, count as little
/// endian u32) followed by each function's vertex values as little endian
/// f64 in mesh index order (u outer, v inner).
pub fn write_eigenfunctions(
    path: &Path,
    n_u: usize,
    n_v: usize,
    functions: &[Vec<f64>],
) -> Result<(), Failure> {
    let mut bytes = Vec::with_capacity(16 + functions.len() * n_u * n_v * 8);
    bytes.extend_from_slice(&EIGENFUNCTION_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(n_u as u32).to_le_bytes());
    bytes.extend_from_slice(&(n_v as u32).to_le_bytes());
    bytes.extend_from_slice(&(functions.len() as u32).to_le_bytes());
    for f in functions {
        assert_eq!(f.len(), n_u * n_v);
        for x in f {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}
