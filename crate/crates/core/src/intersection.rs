//! Slicing an immersed torus by equatorial 2-spheres.
//!
//! An equator `S(v)` meets the surface where the height `f(u, v) = <X(u,v), v>`
//! vanishes. This module traces that zero set on the parameter torus, detects
//! tangential contact, classifies the slice configuration, and reduces traced
//! curves to curvature-versus-arclength signatures that are invariant under
//! rotations of the ambient sphere.
//!
//! Everything downstream of the grid scan is deterministic: node order, root
//! refinement, loop orientation, and start vertex are all canonicalized, so a
//! rerun with identical inputs reproduces identical output bytes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{PI, TAU};
use core::fmt;

use crate::curve::{profiles_match, SphericalPolyline};
use crate::fit::spherical_circumcurvature;
use crate::sample::{random_sphere_point, rng_from_seed};
use crate::sphere::{rotation_about_geodesic, Equator, GeodesicCircle, SpherePoint};
use crate::torus::{height_jet, Surface};
use crate::vec4::{acos_clamped, cross4, dot, normalize, Vec4};

/// Coarsest admissible sampling grid. Below this the marching pass can step
/// over an entire intersection lobe without seeing a sign change.
pub const MIN_GRID: usize = 32;

/// Traced points are polished until `|f| < ROOT_TOLERANCE`.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// A critical point of the height counts as tangential contact when the
/// height is below this bound...
pub const TANGENCY_HEIGHT_TOLERANCE: f64 = 1e-8;

/// ...and the parameter-space gradient is below this one.
pub const TANGENCY_GRADIENT_TOLERANCE: f64 = 1e-6;

/// Converged tangency candidates closer than this merge into one point.
pub const TANGENCY_MERGE_DISTANCE: f64 = 1e-6;

/// A grid node with `|f|` below this and a vanishing gradient is reported as
/// a degenerate node rather than traced through.
pub const NODE_ZERO_TOLERANCE: f64 = 1e-12;

/// Winding numbers must sit within this distance of an integer.
pub const WINDING_RESIDUAL_LIMIT: f64 = 0.1;

/// Adaptive refinement splits a segment while curvature times chord length
/// exceeds this turn budget.
const ADAPTIVE_TURN_LIMIT: f64 = 0.25;

/// Refinement stops subdividing below this parameter spacing.
const MIN_PARAM_SPACING: f64 = 1e-7;

/// Every traced curve is globally subdivided until it has at least this many
/// vertices, so downstream resampling always has material to work with.
const CURVE_MIN_POINTS: usize = 64;

/// Equal-arclength stations in a curvature signature by default.
pub const PROFILE_STATIONS: usize = 512;

/// Self-intersection gate used when building curvature signatures.
const SELF_INTERSECTION_TOLERANCE: f64 = 1e-8;

/// Everything that can go wrong while slicing.
#[derive(Clone, Debug, PartialEq)]
pub enum SliceError {
    /// Grid resolution below [`MIN_GRID`].
    ResolutionTooCoarse { n: usize },
    /// A grid node sits on the zero set with a vanishing gradient; marching
    /// cannot assign it a side. Retry on a grid that misses the point.
    DegenerateNode { u: f64, v: f64 },
    /// Cell bookkeeping contradicted itself; indicates sign flips from
    /// rounding right at a node. Treated like a degenerate node by retries.
    TraceInconsistency { u: f64, v: f64 },
    /// A closed loop's accumulated parameter drift was too far from an
    /// integer number of turns.
    WindingResidual { residual: f64 },
    /// The surface has a point with non-negative extrinsic curvature, so the
    /// two-piece classification machinery does not apply.
    PositiveCurvature { u: f64, v: f64, value: f64 },
    /// Component counting was asked for a slice with tangential contact.
    TangentEquator { u: f64, v: f64 },
    /// A curvature signature was requested from too sparse a polyline.
    ProfileTooShort { points: usize },
    /// The projected curve crosses itself, so arclength parametrization is
    /// ambiguous.
    SelfIntersectingCurve,
    /// Two signatures with different station counts were compared.
    SignatureMismatch { a: usize, b: usize },
    /// The rotation sweep failed to produce a transversal two-curve slice.
    NoTransversalSlice { attempts: usize, best_class: SliceClass },
}

impl fmt::Display for SliceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceError::ResolutionTooCoarse { n } => {
                write!(f, "grid resolution {n} is below the minimum of {MIN_GRID}")
            }
            SliceError::DegenerateNode { u, v } => write!(
                f,
                "degenerate zero at grid node (u, v) = ({u:.6}, {v:.6}): height and gradient both vanish"
            ),
            SliceError::TraceInconsistency { u, v } => write!(
                f,
                "inconsistent cell crossing near (u, v) = ({u:.6}, {v:.6})"
            ),
            SliceError::WindingResidual { residual } => write!(
                f,
                "winding residual {residual:.3} exceeds {WINDING_RESIDUAL_LIMIT}; trace is unreliable"
            ),
            SliceError::PositiveCurvature { u, v, value } => write!(
                f,
                "extrinsic curvature {value:.3e} >= 0 at (u, v) = ({u:.6}, {v:.6}); slice taxonomy needs negative curvature"
            ),
            SliceError::TangentEquator { u, v } => write!(
                f,
                "equator is tangent to the surface near (u, v) = ({u:.6}, {v:.6}); component count is ill-defined"
            ),
            SliceError::ProfileTooShort { points } => write!(
                f,
                "curve has {points} vertices; need at least {CURVE_MIN_POINTS} for a curvature signature"
            ),
            SliceError::SelfIntersectingCurve => {
                write!(f, "curve self-intersects; arclength profile is ambiguous")
            }
            SliceError::SignatureMismatch { a, b } => write!(
                f,
                "cannot compare signatures with {a} and {b} stations"
            ),
            SliceError::NoTransversalSlice { attempts, best_class } => write!(
                f,
                "no transversal two-curve slice found after {attempts} classifications (best: {best_class:?})"
            ),
        }
    }
}

/// Height samples of one equator over the `n x n` parameter grid, nodes at
/// `(2 pi i / n, 2 pi j / n)`.
#[derive(Clone, Debug)]
pub struct HeightGrid {
    n: usize,
    values: Vec<f64>,
}

impl HeightGrid {
    pub fn resolution(&self) -> usize {
        self.n
    }

    /// Height at node `(iu, iv)`; indices wrap.
    pub fn value(&self, iu: usize, iv: usize) -> f64 {
        self.values[(iu % self.n) * self.n + (iv % self.n)]
    }

    /// Parameter coordinates of node `(iu, iv)`.
    pub fn node(&self, iu: usize, iv: usize) -> (f64, f64) {
        let h = TAU / self.n as f64;
        ((iu % self.n) as f64 * h, (iv % self.n) as f64 * h)
    }

    /// Smallest absolute height over the grid.
    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    fn class(&self, iu: usize, iv: usize) -> bool {
        self.value(iu, iv) >= 0.0
    }
}

/// Sample the height of `equator` over the parameter grid.
pub fn height_grid(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<HeightGrid, SliceError> {
    if n < MIN_GRID {
        return Err(SliceError::ResolutionTooCoarse { n });
    }
    let pole = equator.pole().coords();
    let h = TAU / n as f64;
    let mut values = Vec::with_capacity(n * n);
    for iu in 0..n {
        let u = iu as f64 * h;
        for iv in 0..n {
            let v = iv as f64 * h;
            values.push(dot(&surface.position_at(u, v), &pole));
        }
    }
    Ok(HeightGrid { n, values })
}

/// One connected component of a transversal slice.
#[derive(Clone, Debug)]
pub struct IntersectionCurve {
    /// Closed parameter loop, unwrapped: consecutive entries differ by the
    /// true step, so the net drift over one traversal reads off the winding.
    pub params: Vec<[f64; 2]>,
    /// Ambient positions on the equator, one per parameter vertex.
    pub points: Vec<Vec4>,
    /// Traced loops are always closed; open arcs only arise from surgery
    /// elsewhere.
    pub closed: bool,
    /// Net turns of the loop around the (u, v) torus directions.
    pub winding: (i32, i32),
    /// Cumulative arclength; entry `i` is the length up to vertex `i`, and
    /// the final extra entry closes the loop, so it equals the total length.
    pub arclength: Vec<f64>,
    /// Curvature of the curve inside the equator sphere at each vertex,
    /// estimated from circumscribed circles of vertex triples.
    pub vertex_curvature: Vec<f64>,
}

impl IntersectionCurve {
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    /// Largest vertex curvature along the trace. Trace vertices are spaced a
    /// fixed fraction of the local curvature radius apart, so narrow spikes
    /// are resolved by construction.
    pub fn max_curvature(&self) -> f64 {
        self.vertex_curvature.iter().fold(0.0f64, |m, k| m.max(*k))
    }

    pub fn min_curvature(&self) -> f64 {
        self.vertex_curvature
            .iter()
            .fold(f64::INFINITY, |m, k| m.min(*k))
    }

    fn frame_polyline(&self, equator: &Equator) -> SphericalPolyline {
        let pts: Vec<[f64; 3]> = self.points.iter().map(|p| equator.to_frame(p)).collect();
        SphericalPolyline::new(pts)
    }
}

/// Curvature versus arclength at equal-arclength stations, plus the total
/// length. Two slice curves are congruent in the ambient sphere exactly when
/// these agree up to a cyclic shift and possibly a reversal.
#[derive(Clone, Debug)]
pub struct CurvatureSignature {
    pub stations: usize,
    pub length: f64,
    pub samples: Vec<f64>,
}

impl CurvatureSignature {
    pub fn max(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, k| m.max(*k))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().fold(f64::INFINITY, |m, k| m.min(*k))
    }
}

/// Curvature of a traced curve at `stations` equal-arclength stations: the
/// circle-fit curvature at each trace vertex, interpolated linearly in
/// arclength. Fails if the curve is too sparse or if it crosses itself.
pub fn curvature_profile(
    curve: &IntersectionCurve,
    equator: &Equator,
    stations: usize,
) -> Result<CurvatureSignature, SliceError> {
    if curve.points.len() < CURVE_MIN_POINTS {
        return Err(SliceError::ProfileTooShort {
            points: curve.points.len(),
        });
    }
    let poly = curve.frame_polyline(equator);
    if poly.has_self_intersection(SELF_INTERSECTION_TOLERANCE) {
        return Err(SliceError::SelfIntersectingCurve);
    }
    // Recompute arclength and curvature from the points themselves so that
    // hand-built curves profile the same way as traced ones.
    let m = curve.points.len();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0f64);
    for i in 0..m {
        let j = (i + 1) % m;
        let step = acos_clamped(dot(&curve.points[i], &curve.points[j]));
        cumulative.push(cumulative[i] + step);
    }
    let total = cumulative[m];
    let kappa = poly.vertex_curvatures();
    let mut samples = Vec::with_capacity(stations);
    let mut seg = 0usize;
    for s in 0..stations {
        let target = total * s as f64 / stations as f64;
        while seg + 1 < m && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let t = if span > 0.0 {
            (target - cumulative[seg]) / span
        } else {
            0.0
        };
        let k0 = kappa[seg];
        let k1 = kappa[(seg + 1) % m];
        samples.push(k0 + t * (k1 - k0));
    }
    Ok(CurvatureSignature {
        stations,
        length: total,
        samples,
    })
}

/// Signature-level congruence test: lengths within `tol`, profiles within
/// `tol` in sup norm under cyclic shift and/or reversal.
pub fn curves_congruent(
    a: &CurvatureSignature,
    b: &CurvatureSignature,
    tol: f64,
) -> Result<bool, SliceError> {
    if a.stations != b.stations {
        return Err(SliceError::SignatureMismatch {
            a: a.stations,
            b: b.stations,
        });
    }
    if (a.length - b.length).abs() > tol {
        return Ok(false);
    }
    Ok(profiles_match(&a.samples, &b.samples, tol))
}

/// Second-order type of an isolated tangency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TangencySignature {
    /// Indefinite Hessian: two zero branches cross here.
    Saddle,
    /// Definite Hessian: isolated contact point of the zero set.
    Definite,
    /// Singular Hessian within tolerance; second order does not decide.
    Degenerate,
}

/// A point where the equator meets the surface tangentially.
#[derive(Clone, Debug)]
pub struct TangencyPoint {
    pub u: f64,
    pub v: f64,
    pub position: Vec4,
    /// Parameter-space Hessian of the height at the tangency.
    pub hessian: [[f64; 2]; 2],
    pub signature: TangencySignature,
    /// Angle between the two zero branches measured in the induced metric,
    /// in `[0, pi/2]`. Present only for saddles.
    pub crossing_angle: Option<f64>,
}

/// Tangency sweep result. `dropped` counts Newton starts that left their
/// basin or failed to converge; it is diagnostic only.
#[derive(Clone, Debug)]
pub struct TangencyScan {
    pub points: Vec<TangencyPoint>,
    pub dropped: usize,
}

/// Slice taxonomy for negatively curved tori.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SliceClass {
    /// One contractible curve bounding a disk.
    Type1,
    /// Two disjoint essential curves with the same winding.
    Type2,
    /// Two curves through one common tangency.
    Type3,
    /// Two curves through two common tangencies.
    Type4,
    /// Anything else: empty slices, extra components, stray tangencies.
    Unclassified,
}

impl SliceClass {
    /// Numeric code used by reports; `None` for unclassified slices.
    pub fn code(&self) -> Option<u8> {
        match self {
            SliceClass::Type1 => Some(1),
            SliceClass::Type2 => Some(2),
            SliceClass::Type3 => Some(3),
            SliceClass::Type4 => Some(4),
            SliceClass::Unclassified => None,
        }
    }
}

/// Full description of one slice.
#[derive(Clone, Debug)]
pub struct IntersectionReport {
    pub equator: Equator,
    pub class: SliceClass,
    pub curves: Vec<IntersectionCurve>,
    pub tangencies: TangencyScan,
    /// Total number of connected sign regions in the parameter torus.
    pub component_count: usize,
    /// Grid resolution the accepted trace actually used (retries may bump it).
    pub resolution: usize,
}

// ---------------------------------------------------------------------------
// tracing

fn wrap_tau(x: f64) -> f64 {
    let mut y = x % TAU;
    if y < 0.0 {
        y += TAU;
    }
    y
}

/// Signed representative of `x` modulo 2 pi in (-pi, pi].
fn wrap_pi(x: f64) -> f64 {
    let y = x - TAU * libm::round(x / TAU);
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

fn param_dist_periodic(a: [f64; 2], b: [f64; 2]) -> f64 {
    let du = wrap_pi(a[0] - b[0]);
    let dv = wrap_pi(a[1] - b[1]);
    libm::sqrt(du * du + dv * dv)
}

fn height_at(surface: &Surface, pole: &Vec4, u: f64, v: f64) -> f64 {
    dot(&surface.position_at(u, v), pole)
}

/// Root of the height along the straight parameter segment from `a` to `b`,
/// assuming the sign classes at the ends differ. Exact zeros at an endpoint
/// are returned verbatim, so node-aligned roots stay node-exact.
fn edge_root(surface: &Surface, pole: &Vec4, a: [f64; 2], fa: f64, b: [f64; 2], fb: f64) -> [f64; 2] {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let class_a = fa >= 0.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = [a[0] + mid * (b[0] - a[0]), a[1] + mid * (b[1] - a[1])];
        let fm = height_at(surface, pole, p[0], p[1]);
        if fm == 0.0 {
            return p;
        }
        if (fm >= 0.0) == class_a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

#[derive(Clone, Copy)]
struct EdgeData {
    root: [f64; 2],
    visited: bool,
}

/// kind 0 = horizontal (node to node+u), kind 1 = vertical (node to node+v).
fn edge_id(kind: usize, iu: usize, iv: usize, n: usize) -> u32 {
    (kind * n * n + (iu % n) * n + (iv % n)) as u32
}

/// Local edges of cell (ci, cj): 0 bottom, 1 right, 2 top, 3 left.
fn cell_edge(ci: usize, cj: usize, local: usize, n: usize) -> u32 {
    match local {
        0 => edge_id(0, ci, cj, n),
        1 => edge_id(1, ci + 1, cj, n),
        2 => edge_id(0, ci, cj + 1, n),
        3 => edge_id(1, ci, cj, n),
        _ => unreachable!(),
    }
}

/// Cell on the other side of a local edge.
fn neighbor_cell(ci: usize, cj: usize, local: usize, n: usize) -> (usize, usize) {
    match local {
        0 => (ci, (cj + n - 1) % n),
        1 => ((ci + 1) % n, cj),
        2 => (ci, (cj + 1) % n),
        3 => ((ci + n - 1) % n, cj),
        _ => unreachable!(),
    }
}

/// Which local edges of the cell carry a crossing, paired into arcs. Saddle
/// cells are resolved by the actual sign of the height at the cell center,
/// not by a fixed convention, so the topology matches the surface.
fn cell_pairing(
    grid: &HeightGrid,
    surface: &Surface,
    pole: &Vec4,
    ci: usize,
    cj: usize,
) -> Result<Vec<(usize, usize)>, SliceError> {
    let n = grid.resolution();
    let b0 = grid.class(ci, cj);
    let b1 = grid.class(ci + 1, cj);
    let b2 = grid.class(ci + 1, cj + 1);
    let b3 = grid.class(ci, cj + 1);
    let crossed = [b0 != b1, b1 != b2, b3 != b2, b0 != b3];
    let count = crossed.iter().filter(|c| **c).count();
    match count {
        2 => {
            let mut pair = [0usize; 2];
            let mut k = 0;
            for (local, c) in crossed.iter().enumerate() {
                if *c {
                    pair[k] = local;
                    k += 1;
                }
            }
            Ok(vec![(pair[0], pair[1])])
        }
        4 => {
            let h = TAU / n as f64;
            let center = height_at(
                surface,
                pole,
                (ci as f64 + 0.5) * h,
                (cj as f64 + 0.5) * h,
            );
            // Corner classes alternate; the center sign decides which
            // diagonal pair of corners the interior region connects.
            if (center >= 0.0) == b0 {
                Ok(vec![(0, 1), (2, 3)])
            } else {
                Ok(vec![(0, 3), (1, 2)])
            }
        }
        _ => {
            let (u, v) = grid.node(ci, cj);
            Err(SliceError::TraceInconsistency { u, v })
        }
    }
}

/// Trace the zero set of the height over the sampled grid. Returns closed
/// loops, each refined until bounded turning per segment, canonically
/// oriented, and with winding numbers attached.
///
/// The grid must have been sampled from the same surface and equator; the
/// surface is re-evaluated for cell centers, root polishing, and refinement.
pub fn trace_zero_set(
    grid: &HeightGrid,
    surface: &Surface,
    equator: &Equator,
) -> Result<Vec<IntersectionCurve>, SliceError> {
    let n = grid.resolution();
    let pole = equator.pole().coords();

    // A node lying exactly on the zero set with no gradient cannot be given
    // a side; the caller retries on a grid that misses the point.
    for iu in 0..n {
        for iv in 0..n {
            if grid.value(iu, iv).abs() < NODE_ZERO_TOLERANCE {
                let (u, v) = grid.node(iu, iv);
                let jet = height_jet(surface, &pole, u, v);
                let gn = libm::sqrt(jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1]);
                if gn < TANGENCY_GRADIENT_TOLERANCE {
                    return Err(SliceError::DegenerateNode { u, v });
                }
            }
        }
    }

    // Collect crossed edges with polished roots.
    let mut edges: BTreeMap<u32, EdgeData> = BTreeMap::new();
    for iu in 0..n {
        for iv in 0..n {
            let (u, v) = grid.node(iu, iv);
            let f00 = grid.value(iu, iv);
            let fu = grid.value(iu + 1, iv);
            if (f00 >= 0.0) != (fu >= 0.0) {
                let h = TAU / n as f64;
                let root = edge_root(surface, &pole, [u, v], f00, [u + h, v], fu);
                edges.insert(
                    edge_id(0, iu, iv, n),
                    EdgeData {
                        root,
                        visited: false,
                    },
                );
            }
            let fv = grid.value(iu, iv + 1);
            if (f00 >= 0.0) != (fv >= 0.0) {
                let h = TAU / n as f64;
                let root = edge_root(surface, &pole, [u, v], f00, [u, v + h], fv);
                edges.insert(
                    edge_id(1, iu, iv, n),
                    EdgeData {
                        root,
                        visited: false,
                    },
                );
            }
        }
    }

    let keys: Vec<u32> = edges.keys().copied().collect();
    let mut curves = Vec::new();
    for start in keys {
        if edges[&start].visited {
            continue;
        }
        let loop_roots = walk_loop(start, &mut edges, grid, surface, &pole)?;
        if loop_roots.len() < 2 {
            continue;
        }
        let curve = build_curve(loop_roots, surface, equator)?;
        curves.push(curve);
    }
    sort_curves(&mut curves);
    Ok(curves)
}

/// Follow the zero set cell to cell starting from a crossed edge until the
/// walk returns to it. Marks traversed edges visited and returns their
/// roots in traversal order.
fn walk_loop(
    start: u32,
    edges: &mut BTreeMap<u32, EdgeData>,
    grid: &HeightGrid,
    surface: &Surface,
    pole: &Vec4,
) -> Result<Vec<[f64; 2]>, SliceError> {
    let n = grid.resolution();
    let nn = (n * n) as u32;
    // Deterministic initial cell: both edge kinds are the bottom or left
    // edge of the cell with their own (iu, iv) index.
    let rem = (start % nn) as usize;
    let mut cell = (rem / n, rem % n);
    let mut current = start;
    let mut roots = Vec::new();

    let max_steps = 8 * n * n;
    for _ in 0..max_steps {
        let data = edges.get_mut(&current).expect("walk reached unknown edge");
        data.visited = true;
        roots.push(data.root);

        let pairing = cell_pairing(grid, surface, pole, cell.0, cell.1)?;
        let mut entry_local = None;
        for local in 0..4 {
            if cell_edge(cell.0, cell.1, local, n) == current {
                entry_local = Some(local);
                break;
            }
        }
        let entry = match entry_local {
            Some(e) => e,
            None => {
                let (u, v) = grid.node(cell.0, cell.1);
                return Err(SliceError::TraceInconsistency { u, v });
            }
        };
        let mut exit = None;
        for (a, b) in &pairing {
            if *a == entry {
                exit = Some(*b);
            } else if *b == entry {
                exit = Some(*a);
            }
        }
        let exit = match exit {
            Some(e) => e,
            None => {
                let (u, v) = grid.node(cell.0, cell.1);
                return Err(SliceError::TraceInconsistency { u, v });
            }
        };
        let exit_edge = cell_edge(cell.0, cell.1, exit, n);
        if exit_edge == start {
            return Ok(roots);
        }
        cell = neighbor_cell(cell.0, cell.1, exit, n);
        current = exit_edge;
    }
    let (u, v) = grid.node(cell.0, cell.1);
    Err(SliceError::TraceInconsistency { u, v })
}

// ---------------------------------------------------------------------------
// curve construction

/// Winding numbers of a closed parameter loop, with a consistency residual.
/// Steps between consecutive vertices are wrapped to the nearest
/// representative, so the loop must be sampled finer than half a period.
pub fn winding_class(params: &[[f64; 2]]) -> Result<(i32, i32), SliceError> {
    let m = params.len();
    if m < 2 {
        return Ok((0, 0));
    }
    let mut total = [0.0f64; 2];
    for i in 0..m {
        let a = params[i];
        let b = params[(i + 1) % m];
        total[0] += wrap_pi(b[0] - a[0]);
        total[1] += wrap_pi(b[1] - a[1]);
    }
    let wu = libm::round(total[0] / TAU);
    let wv = libm::round(total[1] / TAU);
    // For genuinely closed loops the wrapped steps sum to an exact multiple
    // of 2 pi, so this residual only fires on malformed input or extreme
    // accumulation.
    let residual = ((total[0] / TAU - wu).abs()).max((total[1] / TAU - wv).abs());
    if residual >= WINDING_RESIDUAL_LIMIT {
        return Err(SliceError::WindingResidual { residual });
    }
    Ok((wu as i32, wv as i32))
}

/// Newton projection onto the zero set along the gradient. Returns `None`
/// when the gradient degenerates or the height refuses to drop below the
/// root tolerance.
fn project_to_zero(surface: &Surface, pole: &Vec4, p: [f64; 2]) -> Option<[f64; 2]> {
    let mut q = p;
    for _ in 0..25 {
        let jet = height_jet(surface, pole, q[0], q[1]);
        if jet.v.abs() < 1e-13 {
            return Some(q);
        }
        let g2 = jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1];
        if g2 < 1e-30 {
            return None;
        }
        let s = jet.v / g2;
        q[0] -= s * jet.g[0];
        q[1] -= s * jet.g[1];
    }
    let f = height_at(surface, pole, q[0], q[1]);
    if f.abs() < ROOT_TOLERANCE {
        Some(q)
    } else {
        None
    }
}

fn dedup_loop(points: &mut Vec<[f64; 2]>) {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points.iter() {
        if let Some(last) = out.last() {
            if param_dist_periodic(*last, *p) < 1e-12 {
                continue;
            }
        }
        out.push(*p);
    }
    while out.len() > 1 && param_dist_periodic(out[0], *out.last().unwrap()) < 1e-12 {
        out.pop();
    }
    *points = out;
}

/// Unwrap a wrapped closed loop into a continuous parameter path.
fn unwrap_loop(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(points.len());
    let mut prev = points[0];
    let mut acc = points[0];
    out.push(acc);
    for p in points.iter().skip(1) {
        acc = [acc[0] + wrap_pi(p[0] - prev[0]), acc[1] + wrap_pi(p[1] - prev[1])];
        out.push(acc);
        prev = *p;
    }
    out
}

/// Canonical orientation and start vertex for a wrapped loop: orient so the
/// first nonzero winding component is positive (or, for null windings, so the
/// parameter-plane area is positive), then rotate the loop so it starts at
/// its lexicographically smallest wrapped vertex.
fn canonicalize_loop(points: &mut Vec<[f64; 2]>, winding: (i32, i32)) {
    let reverse = if winding != (0, 0) {
        if winding.0 != 0 {
            winding.0 < 0
        } else {
            winding.1 < 0
        }
    } else {
        let unwrapped = unwrap_loop(points);
        let m = unwrapped.len();
        let mut area = 0.0;
        for i in 0..m {
            let a = unwrapped[i];
            let b = if i + 1 < m {
                unwrapped[i + 1]
            } else {
                // Close through the wrapped gap back to the start.
                let d = [
                    wrap_pi(unwrapped[0][0] - unwrapped[m - 1][0]),
                    wrap_pi(unwrapped[0][1] - unwrapped[m - 1][1]),
                ];
                [unwrapped[m - 1][0] + d[0], unwrapped[m - 1][1] + d[1]]
            };
            area += a[0] * b[1] - b[0] * a[1];
        }
        area < 0.0
    };
    if reverse {
        points.reverse();
    }
    let mut best = 0usize;
    for i in 1..points.len() {
        let a = [wrap_tau(points[i][0]), wrap_tau(points[i][1])];
        let b = [wrap_tau(points[best][0]), wrap_tau(points[best][1])];
        if (a[0], a[1]) < (b[0], b[1]) {
            best = i;
        }
    }
    points.rotate_left(best);
}

/// Insert midpoints until every segment turns by a bounded angle, then
/// subdivide globally until the loop has at least [`CURVE_MIN_POINTS`]
/// vertices. Works on an unwrapped loop; `winding` supplies the closing
/// parameter shift.
fn refine_loop(
    params: &mut Vec<[f64; 2]>,
    winding: (i32, i32),
    surface: &Surface,
    equator: &Equator,
) {
    let pole = equator.pole().coords();
    let shift = [TAU * winding.0 as f64, TAU * winding.1 as f64];

    for _pass in 0..40 {
        let m = params.len();
        if m < 2 {
            break;
        }
        let pts3: Vec<[f64; 3]> = params
            .iter()
            .map(|p| equator.to_frame(&surface.position_at(p[0], p[1])))
            .collect();
        let mut kappa = vec![0.0f64; m];
        if m >= 3 {
            for i in 0..m {
                let a = pts3[(i + m - 1) % m];
                let b = pts3[i];
                let c = pts3[(i + 1) % m];
                kappa[i] = spherical_circumcurvature(&a, &b, &c);
            }
        }
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(2 * m);
        let mut split_any = false;
        for i in 0..m {
            out.push(params[i]);
            let j = (i + 1) % m;
            let next = if j == 0 {
                [params[0][0] + shift[0], params[0][1] + shift[1]]
            } else {
                params[j]
            };
            let du = next[0] - params[i][0];
            let dv = next[1] - params[i][1];
            let pd = libm::sqrt(du * du + dv * dv);
            let chord = {
                let a = pts3[i];
                let b = pts3[j];
                let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
            };
            let k_seg = kappa[i].max(kappa[j]).max(1e-9);
            if k_seg * chord > ADAPTIVE_TURN_LIMIT && pd > 2.0 * MIN_PARAM_SPACING {
                let mid = [params[i][0] + 0.5 * du, params[i][1] + 0.5 * dv];
                if let Some(q) = project_to_zero(surface, &pole, mid) {
                    out.push(q);
                    split_any = true;
                }
            }
        }
        *params = out;
        if !split_any {
            break;
        }
    }

    while params.len() < CURVE_MIN_POINTS {
        let m = params.len();
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(2 * m);
        for i in 0..m {
            out.push(params[i]);
            let j = (i + 1) % m;
            let next = if j == 0 {
                [params[0][0] + shift[0], params[0][1] + shift[1]]
            } else {
                params[j]
            };
            let mid = [
                0.5 * (params[i][0] + next[0]),
                0.5 * (params[i][1] + next[1]),
            ];
            out.push(project_to_zero(surface, &pole, mid).unwrap_or(mid));
        }
        *params = out;
    }
}

fn sort_curves(curves: &mut [IntersectionCurve]) {
    curves.sort_by(|a, b| {
        let ka = (a.winding.0, a.winding.1);
        let kb = (b.winding.0, b.winding.1);
        ka.cmp(&kb).then_with(|| {
            let pa = a.params.first().copied().unwrap_or([0.0; 2]);
            let pb = b.params.first().copied().unwrap_or([0.0; 2]);
            (wrap_tau(pa[0]), wrap_tau(pa[1]))
                .partial_cmp(&(wrap_tau(pb[0]), wrap_tau(pb[1])))
                .unwrap_or(core::cmp::Ordering::Equal)
        })
    });
}

/// Assemble a full curve record from a wrapped closed loop of on-set points.
fn build_curve(
    mut wrapped: Vec<[f64; 2]>,
    surface: &Surface,
    equator: &Equator,
) -> Result<IntersectionCurve, SliceError> {
    dedup_loop(&mut wrapped);
    if wrapped.len() < 2 {
        return Err(SliceError::TraceInconsistency {
            u: wrapped.first().map(|p| p[0]).unwrap_or(0.0),
            v: wrapped.first().map(|p| p[1]).unwrap_or(0.0),
        });
    }
    let winding = winding_class(&wrapped)?;
    canonicalize_loop(&mut wrapped, winding);
    let winding = winding_class(&wrapped)?;

    let mut params = unwrap_loop(&wrapped);
    refine_loop(&mut params, winding, surface, equator);

    let points: Vec<Vec4> = params
        .iter()
        .map(|p| surface.position_at(p[0], p[1]))
        .collect();
    let m = points.len();
    let mut arclength = Vec::with_capacity(m + 1);
    arclength.push(0.0);
    for i in 0..m {
        let j = (i + 1) % m;
        let step = acos_clamped(dot(&points[i], &points[j]));
        arclength.push(arclength[i] + step);
    }
    let frame: Vec<[f64; 3]> = points.iter().map(|p| equator.to_frame(p)).collect();
    let mut vertex_curvature = vec![0.0f64; m];
    if m >= 3 {
        for i in 0..m {
            vertex_curvature[i] = spherical_circumcurvature(
                &frame[(i + m - 1) % m],
                &frame[i],
                &frame[(i + 1) % m],
            );
        }
    }
    Ok(IntersectionCurve {
        params,
        points,
        closed: true,
        winding,
        arclength,
        vertex_curvature,
    })
}

// ---------------------------------------------------------------------------
// tangencies

/// Locate tangential contact between the equator and the surface: score the
/// grid by `f^2 + |grad f|^2`, run Newton on the gradient from each local
/// minimum of the score, and accept converged critical points whose height
/// and gradient are both below the contact tolerances.
pub fn find_tangencies(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<TangencyScan, SliceError> {
    if n < MIN_GRID {
        return Err(SliceError::ResolutionTooCoarse { n });
    }
    let pole = equator.pole().coords();
    let h = TAU / n as f64;

    let mut score = vec![0.0f64; n * n];
    let mut max_hess = 0.0f64;
    for iu in 0..n {
        for iv in 0..n {
            let jet = height_jet(surface, &pole, iu as f64 * h, iv as f64 * h);
            score[iu * n + iv] = jet.v * jet.v + jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1];
            let hn = jet.h[0][0].abs() + 2.0 * jet.h[0][1].abs() + jet.h[1][1].abs();
            max_hess = max_hess.max(hn);
        }
    }

    // A true tangency pulls the score below (C h)^2 at the nearest node,
    // with C controlled by the largest Hessian seen on the grid. Scoring
    // plateaus of transversal slices sit far above this cutoff.
    let cutoff = {
        let c = 2.0 * h * max_hess.max(1e-6);
        c * c
    };

    let mut accepted: Vec<TangencyPoint> = Vec::new();
    let mut dropped = 0usize;
    for iu in 0..n {
        for iv in 0..n {
            let s = score[iu * n + iv];
            if s >= cutoff {
                continue;
            }
            let mut is_min = true;
            'nb: for du in [n - 1, 0, 1] {
                for dv in [n - 1, 0, 1] {
                    if du == 0 && dv == 0 {
                        continue;
                    }
                    if score[((iu + du) % n) * n + ((iv + dv) % n)] < s {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min {
                continue;
            }

            match newton_critical(surface, &pole, [iu as f64 * h, iv as f64 * h], h) {
                CandidateOutcome::Accepted(p) => {
                    let wrapped = [wrap_tau(p[0]), wrap_tau(p[1])];
                    let dup = accepted
                        .iter()
                        .any(|t| param_dist_periodic([t.u, t.v], wrapped) < TANGENCY_MERGE_DISTANCE);
                    if !dup {
                        accepted.push(build_tangency_point(surface, &pole, wrapped));
                    }
                }
                CandidateOutcome::NotTangency => {}
                CandidateOutcome::Dropped => dropped += 1,
            }
        }
    }

    accepted.sort_by(|a, b| {
        (a.u, a.v)
            .partial_cmp(&(b.u, b.v))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(TangencyScan {
        points: accepted,
        dropped,
    })
}

enum CandidateOutcome {
    Accepted([f64; 2]),
    NotTangency,
    Dropped,
}

/// Newton iteration on the gradient of the height. Leaves the basin (step
/// larger than two grid cells) or stalls: dropped. Converges to a critical
/// point that fails the contact tolerances: not a tangency.
fn newton_critical(surface: &Surface, pole: &Vec4, start: [f64; 2], h: f64) -> CandidateOutcome {
    let mut q = start;
    for _ in 0..30 {
        let jet = height_jet(surface, pole, q[0], q[1]);
        let g = jet.g;
        let gn = libm::sqrt(g[0] * g[0] + g[1] * g[1]);
        if gn < 1e-12 {
            return accept_or_reject(q, jet.v, gn);
        }
        let [[a, b], [_, d]] = jet.h;
        let det = a * d - b * b;
        let scale = a * a + 2.0 * b * b + d * d;
        if det.abs() < 1e-14 * scale.max(1e-30) {
            // Rank-deficient Hessian: the score minimum does not isolate a
            // critical point (for example a slice with a translational
            // symmetry). Nothing to polish.
            return CandidateOutcome::NotTangency;
        }
        let step = [(d * g[0] - b * g[1]) / det, (a * g[1] - b * g[0]) / det];
        let sn = libm::sqrt(step[0] * step[0] + step[1] * step[1]);
        if sn > 2.0 * h {
            return CandidateOutcome::Dropped;
        }
        q[0] -= step[0];
        q[1] -= step[1];
        if sn < 1e-14 {
            let jet = height_jet(surface, pole, q[0], q[1]);
            let gn = libm::sqrt(jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1]);
            return accept_or_reject(q, jet.v, gn);
        }
    }
    CandidateOutcome::Dropped
}

fn accept_or_reject(q: [f64; 2], f: f64, grad_norm: f64) -> CandidateOutcome {
    if f.abs() < TANGENCY_HEIGHT_TOLERANCE && grad_norm < TANGENCY_GRADIENT_TOLERANCE {
        CandidateOutcome::Accepted(q)
    } else {
        CandidateOutcome::NotTangency
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix: returns eigenvalues in
/// descending order plus the unit eigenvector of the larger one.
fn sym_eigen2(a: f64, b: f64, d: f64) -> (f64, f64, [f64; 2]) {
    let tr = a + d;
    let diff = a - d;
    let disc = libm::sqrt(diff * diff + 4.0 * b * b);
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    // Pick the better-conditioned formula for the eigenvector.
    let v1 = [b, l1 - a];
    let v2 = [l1 - d, b];
    let n1 = v1[0] * v1[0] + v1[1] * v1[1];
    let n2 = v2[0] * v2[0] + v2[1] * v2[1];
    let v = if n1 >= n2 { v1 } else { v2 };
    let n = libm::sqrt(v[0] * v[0] + v[1] * v[1]);
    let e = if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        [1.0, 0.0]
    };
    (l1, l2, e)
}

fn build_tangency_point(surface: &Surface, pole: &Vec4, p: [f64; 2]) -> TangencyPoint {
    let jet = height_jet(surface, pole, p[0], p[1]);
    let hess = [[jet.h[0][0], jet.h[0][1]], [jet.h[1][0], jet.h[1][1]]];
    let (l1, l2, e1) = sym_eigen2(hess[0][0], hess[0][1], hess[1][1]);
    let det = l1 * l2;
    let scale = l1 * l1 + l2 * l2;
    let eps = 1e-9 * scale.max(1e-30);
    let geom = surface.geometry_at(p[0], p[1]);
    let (signature, crossing_angle) = if det < -eps {
        // Indefinite: the zero set has two branches with null directions
        // sqrt(-l2) e1 +- sqrt(l1) e2 in the Hessian eigenbasis. Measure
        // their angle in the induced metric.
        let e2 = [-e1[1], e1[0]];
        let (c1, c2) = (libm::sqrt(-l2), libm::sqrt(l1));
        let w_plus = [c1 * e1[0] + c2 * e2[0], c1 * e1[1] + c2 * e2[1]];
        let w_minus = [c1 * e1[0] - c2 * e2[0], c1 * e1[1] - c2 * e2[1]];
        let [ee, ff, gg] = geom.first;
        let ip = |x: [f64; 2], y: [f64; 2]| ee * x[0] * y[0] + ff * (x[0] * y[1] + x[1] * y[0]) + gg * x[1] * y[1];
        let cosang = ip(w_plus, w_minus).abs()
            / libm::sqrt(ip(w_plus, w_plus) * ip(w_minus, w_minus));
        (
            TangencySignature::Saddle,
            Some(acos_clamped(cosang.min(1.0))),
        )
    } else if det > eps {
        (TangencySignature::Definite, None)
    } else {
        (TangencySignature::Degenerate, None)
    };
    TangencyPoint {
        u: p[0],
        v: p[1],
        position: geom.position,
        hessian: hess,
        signature,
        crossing_angle,
    }
}

// ---------------------------------------------------------------------------
// tangent-slice surgery

/// Index of each vertex where `curve` passes through the `assoc`-ball around
/// a tangency: one representative (the closest vertex) per contiguous run.
fn passages(curve: &IntersectionCurve, t: &TangencyPoint, assoc: f64) -> Vec<usize> {
    let m = curve.params.len();
    let tp = [t.u, t.v];
    let near: Vec<bool> = curve
        .params
        .iter()
        .map(|p| param_dist_periodic([wrap_tau(p[0]), wrap_tau(p[1])], tp) < assoc)
        .collect();
    if near.iter().all(|b| *b) || near.iter().all(|b| !*b) {
        return Vec::new();
    }
    // Walk cyclic runs of `near`, starting just after a far vertex.
    let mut start = 0;
    while near[start] {
        start += 1;
    }
    let mut result = Vec::new();
    let mut i = 0;
    while i < m {
        let idx = (start + i) % m;
        if near[idx] {
            let mut best = idx;
            let mut best_d = param_dist_periodic(
                [wrap_tau(curve.params[idx][0]), wrap_tau(curve.params[idx][1])],
                tp,
            );
            let mut j = i;
            while j < m && near[(start + j) % m] {
                let k = (start + j) % m;
                let d = param_dist_periodic(
                    [wrap_tau(curve.params[k][0]), wrap_tau(curve.params[k][1])],
                    tp,
                );
                if d < best_d {
                    best_d = d;
                    best = k;
                }
                j += 1;
            }
            result.push(best);
            i = j;
        } else {
            i += 1;
        }
    }
    result
}

struct Arc {
    /// Unwrapped parameter run; first and last vertices sit exactly on their
    /// junction tangencies.
    params: Vec<[f64; 2]>,
    head_tangency: usize,
    tail_tangency: usize,
}

/// Shift `t` by whole periods so it continues the unwrapped frame of `anchor`.
fn align_to(anchor: [f64; 2], t: [f64; 2]) -> [f64; 2] {
    [
        t[0] + TAU * libm::round((anchor[0] - t[0]) / TAU),
        t[1] + TAU * libm::round((anchor[1] - t[1]) / TAU),
    ]
}

/// Cut every traced loop at the tangencies it passes through and rejoin the
/// arcs so that each junction continues smoothly (incoming and outgoing
/// directions as opposite as possible). Marching squares cannot split the
/// branches of a saddle sitting exactly on the zero set; this surgery
/// restores the geometric curves. Returns `None` when no curve passes a
/// tangency or the junction degrees do not pair up.
fn rejoin_at_tangencies(
    curves: &[IntersectionCurve],
    tangencies: &[TangencyPoint],
    assoc: f64,
) -> Option<Vec<Vec<[f64; 2]>>> {
    // (curve, vertex, tangency) passages, grouped per curve.
    let mut any = false;
    let mut per_curve: Vec<Vec<(usize, usize)>> = Vec::with_capacity(curves.len());
    for curve in curves {
        let mut cuts: Vec<(usize, usize)> = Vec::new();
        for (ti, t) in tangencies.iter().enumerate() {
            for vi in passages(curve, t, assoc) {
                cuts.push((vi, ti));
            }
        }
        cuts.sort();
        cuts.dedup_by_key(|c| c.0);
        if !cuts.is_empty() {
            any = true;
        }
        per_curve.push(cuts);
    }
    if !any {
        return None;
    }

    let mut arcs: Vec<Arc> = Vec::new();
    let mut whole_loops: Vec<Vec<[f64; 2]>> = Vec::new();
    for (curve, cuts) in curves.iter().zip(&per_curve) {
        if cuts.is_empty() {
            whole_loops.push(curve.params.clone());
            continue;
        }
        let m = curve.params.len();
        let shift = [
            TAU * curve.winding.0 as f64,
            TAU * curve.winding.1 as f64,
        ];
        for (k, &(vi, ti)) in cuts.iter().enumerate() {
            let (vj, tj) = cuts[(k + 1) % cuts.len()];
            // Unwrapped run from vertex vi to vertex vj (cyclic).
            let mut run: Vec<[f64; 2]> = Vec::new();
            let mut idx = vi;
            let mut offset = [0.0f64; 2];
            loop {
                let p = curve.params[idx];
                run.push([p[0] + offset[0], p[1] + offset[1]]);
                if idx == vj && run.len() > 1 {
                    break;
                }
                if idx + 1 == m {
                    offset[0] += shift[0];
                    offset[1] += shift[1];
                    idx = 0;
                } else {
                    idx += 1;
                }
                if run.len() > m + 1 {
                    return None;
                }
            }
            // Snap the junction endpoints onto the exact tangency parameters.
            let t_head = &tangencies[ti];
            let t_tail = &tangencies[tj];
            let first = run[0];
            let last = *run.last().unwrap();
            run[0] = align_to(first, [t_head.u, t_head.v]);
            let l = run.len() - 1;
            run[l] = align_to(last, [t_tail.u, t_tail.v]);
            // Refinement hugs the corner of the saddle with vertices that sit
            // between the two branches; drop everything too close to a
            // junction so each arc leaves it along its own branch.
            let prune = assoc / 4.0;
            let near = |a: [f64; 2], b: [f64; 2]| {
                libm::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
                    < prune
            };
            let head = run[0];
            let tail = run[l];
            let mut pruned = Vec::with_capacity(run.len());
            pruned.push(head);
            for p in run[1..l].iter() {
                if !near(*p, head) && !near(*p, tail) {
                    pruned.push(*p);
                }
            }
            pruned.push(tail);
            if pruned.len() < 3 {
                return None;
            }
            arcs.push(Arc {
                params: pruned,
                head_tangency: ti,
                tail_tangency: tj,
            });
        }
    }

    // Junction ends per tangency: (arc, is_head, unit direction into the
    // tangency in parameter space).
    #[derive(Clone, Copy)]
    struct End {
        arc: usize,
        head: bool,
        dir: [f64; 2],
    }
    let mut junction: BTreeMap<usize, Vec<End>> = BTreeMap::new();
    for (ai, arc) in arcs.iter().enumerate() {
        let m = arc.params.len();
        if m < 2 {
            return None;
        }
        let din = {
            let a = arc.params[1];
            let b = arc.params[0];
            let d = [b[0] - a[0], b[1] - a[1]];
            let n = libm::sqrt(d[0] * d[0] + d[1] * d[1]);
            if n == 0.0 {
                return None;
            }
            [d[0] / n, d[1] / n]
        };
        junction.entry(arc.head_tangency).or_default().push(End {
            arc: ai,
            head: true,
            dir: din,
        });
        let dout = {
            let a = arc.params[m - 2];
            let b = arc.params[m - 1];
            let d = [b[0] - a[0], b[1] - a[1]];
            let n = libm::sqrt(d[0] * d[0] + d[1] * d[1]);
            if n == 0.0 {
                return None;
            }
            [d[0] / n, d[1] / n]
        };
        junction.entry(arc.tail_tangency).or_default().push(End {
            arc: ai,
            head: false,
            dir: dout,
        });
    }

    // Pair ends at each junction by smooth continuation: the two directions
    // pointing into the tangency should be as opposite as possible.
    let mut partner: BTreeMap<(usize, bool), (usize, bool)> = BTreeMap::new();
    for ends in junction.values() {
        if ends.len() % 2 != 0 {
            return None;
        }
        let mut used = vec![false; ends.len()];
        for i in 0..ends.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut best = None;
            let mut best_dot = f64::INFINITY;
            for (j, e) in ends.iter().enumerate().skip(i + 1) {
                if used[j] {
                    continue;
                }
                let d = ends[i].dir[0] * e.dir[0] + ends[i].dir[1] * e.dir[1];
                if d < best_dot {
                    best_dot = d;
                    best = Some(j);
                }
            }
            let j = best?;
            used[j] = true;
            partner.insert((ends[i].arc, ends[i].head), (ends[j].arc, ends[j].head));
            partner.insert((ends[j].arc, ends[j].head), (ends[i].arc, ends[i].head));
        }
    }

    // Stitch arcs into loops: traverse an arc head to tail, continue through
    // the partner of its tail end, flipping arcs entered from their tail.
    let mut used = vec![false; arcs.len()];
    let mut loops = whole_loops;
    for start in 0..arcs.len() {
        if used[start] {
            continue;
        }
        let mut chain: Vec<[f64; 2]> = Vec::new();
        let mut cur = start;
        let mut forward = true;
        loop {
            used[cur] = true;
            let params = &arcs[cur].params;
            if chain.is_empty() {
                chain.extend(params.iter().copied());
                if !forward {
                    chain.reverse();
                }
            } else {
                let anchor = *chain.last().unwrap();
                let mut seg: Vec<[f64; 2]> = params.clone();
                if !forward {
                    seg.reverse();
                }
                // Align the new arc's unwrapped frame to the chain and skip
                // its duplicated junction vertex.
                let shift = [
                    TAU * libm::round((anchor[0] - seg[0][0]) / TAU),
                    TAU * libm::round((anchor[1] - seg[0][1]) / TAU),
                ];
                for p in seg.iter().skip(1) {
                    chain.push([p[0] + shift[0], p[1] + shift[1]]);
                }
            }
            // The end we exit through is the tail if traversed forward.
            let exit = (cur, !forward);
            let (next_arc, next_is_head) = *partner.get(&exit)?;
            if next_arc == start {
                break;
            }
            cur = next_arc;
            forward = next_is_head;
        }
        // Drop the duplicated final junction vertex if the stitch closed on
        // the starting vertex.
        if chain.len() > 1 {
            let first = chain[0];
            let last = *chain.last().unwrap();
            if param_dist_periodic(
                [wrap_tau(first[0]), wrap_tau(first[1])],
                [wrap_tau(last[0]), wrap_tau(last[1])],
            ) < 1e-9
            {
                chain.pop();
            }
        }
        if chain.len() >= 2 {
            loops.push(chain);
        }
    }
    Some(loops)
}

/// Decompose a loop that runs twice through a single node into its two
/// lobes. The smooth-continuation pairing stitches the pinch of an oval
/// into one self-touching loop; the taxonomy instead wants the two embedded
/// curves bounding disjoint discs in the slice sphere, which meet only at
/// the node. Returns `None` when the loop does not actually pass the node
/// twice with enough vertices on each side.
fn split_node_loop(
    curve: &IntersectionCurve,
    t: &TangencyPoint,
    assoc: f64,
    surface: &Surface,
    equator: &Equator,
) -> Result<Option<(IntersectionCurve, IntersectionCurve)>, SliceError> {
    let hits = passages(curve, t, assoc);
    if hits.len() != 2 {
        return Ok(None);
    }
    let (a, b) = (hits[0].min(hits[1]), hits[0].max(hits[1]));
    let m = curve.params.len();
    if b - a < 4 || m - (b - a) < 4 {
        return Ok(None);
    }
    let wrap = |run: &[[f64; 2]]| -> Vec<[f64; 2]> {
        run.iter().map(|p| [wrap_tau(p[0]), wrap_tau(p[1])]).collect()
    };
    let first = build_curve(wrap(&curve.params[a..b]), surface, equator)?;
    let mut rest: Vec<[f64; 2]> = curve.params[b..].to_vec();
    rest.extend_from_slice(&curve.params[..a]);
    let second = build_curve(wrap(&rest), surface, equator)?;
    Ok(Some((first, second)))
}

// ---------------------------------------------------------------------------
// classification

/// Does some vertex of the curve come within `assoc` of the tangency?
fn passes_through(curve: &IntersectionCurve, t: &TangencyPoint, assoc: f64) -> bool {
    curve.params.iter().any(|p| {
        param_dist_periodic([wrap_tau(p[0]), wrap_tau(p[1])], [t.u, t.v]) < assoc
    })
}

fn classify_rules(
    curves: &[IntersectionCurve],
    tangencies: &[TangencyPoint],
    assoc: f64,
) -> SliceClass {
    let all_pass = |t: &TangencyPoint| curves.iter().all(|c| passes_through(c, t, assoc));
    match (curves.len(), tangencies.len()) {
        (1, 0) if curves[0].winding == (0, 0) => SliceClass::Type1,
        (2, 0) => {
            let w0 = curves[0].winding;
            let w1 = curves[1].winding;
            if w0 == w1 && w0 != (0, 0) {
                SliceClass::Type2
            } else {
                SliceClass::Unclassified
            }
        }
        (2, 1) if all_pass(&tangencies[0]) => {
            // The lobes of a pinched slice are generators traversed with
            // opposite boundary orientations; a pair of contractible lobes
            // would be a nested-oval separation failure, not a taxonomy
            // member.
            let w0 = curves[0].winding;
            let w1 = curves[1].winding;
            if w0 != (0, 0) && (w0 == w1 || w0 == (-w1.0, -w1.1)) {
                SliceClass::Type3
            } else {
                SliceClass::Unclassified
            }
        }
        (2, 2) if all_pass(&tangencies[0]) && all_pass(&tangencies[1]) => SliceClass::Type4,
        _ => SliceClass::Unclassified,
    }
}

/// Dense-grid check that the extrinsic curvature is negative everywhere the
/// taxonomy relies on. Returns the first offending node.
fn check_negative_curvature(surface: &Surface, n: usize) -> Result<(), SliceError> {
    let h = TAU / n as f64;
    for iu in 0..n {
        for iv in 0..n {
            let (u, v) = (iu as f64 * h, iv as f64 * h);
            let geom = surface.geometry_at(u, v);
            if geom.extrinsic >= 0.0 {
                return Err(SliceError::PositiveCurvature {
                    u,
                    v,
                    value: geom.extrinsic,
                });
            }
        }
    }
    Ok(())
}

/// Classify the slice of `surface` by `equator`, sampling on an `n x n`
/// grid. Requires the surface to be negatively curved on that grid. If the
/// trace hits a degenerate node the grid is retried at `n + 1`, `2n`, and
/// `2n + 1` before giving up; symmetric surfaces park saddles exactly on
/// even grids, and an odd resolution shifts every node off them.
pub fn classify(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<IntersectionReport, SliceError> {
    if n < MIN_GRID {
        return Err(SliceError::ResolutionTooCoarse { n });
    }
    check_negative_curvature(surface, n)?;
    classify_transversal(surface, equator, n)
}

/// Classification without the curvature precheck; used by scans that verify
/// curvature once for the whole batch.
fn classify_transversal(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<IntersectionReport, SliceError> {
    let ladder = [n, n + 1, 2 * n, 2 * n + 1];
    let mut last_err = None;
    for &res in &ladder {
        match try_classify_at(surface, equator, res) {
            Ok(report) => return Ok(report),
            Err(e @ SliceError::DegenerateNode { .. })
            | Err(e @ SliceError::TraceInconsistency { .. }) => {
                last_err = Some(e);
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.expect("retry ladder is nonempty"))
}

fn try_classify_at(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<IntersectionReport, SliceError> {
    let grid = height_grid(surface, equator, n)?;
    let curves = trace_zero_set(&grid, surface, equator)?;
    let tangencies = find_tangencies(surface, equator, n)?;
    let assoc = 2.0 * TAU / n as f64;

    let curves = if !tangencies.points.is_empty() && !curves.is_empty() {
        match rejoin_at_tangencies(&curves, &tangencies.points, assoc) {
            Some(loops) => {
                let mut rebuilt = Vec::with_capacity(loops.len());
                for lp in loops {
                    let wrapped: Vec<[f64; 2]> =
                        lp.iter().map(|p| [wrap_tau(p[0]), wrap_tau(p[1])]).collect();
                    rebuilt.push(build_curve(wrapped, surface, equator)?);
                }
                sort_curves(&mut rebuilt);
                rebuilt
            }
            None => curves,
        }
    } else {
        curves
    };

    let curves = if curves.len() == 1 && tangencies.points.len() == 1 {
        match split_node_loop(&curves[0], &tangencies.points[0], assoc, surface, equator)? {
            Some((first, second)) => {
                let mut pair = alloc::vec![first, second];
                sort_curves(&mut pair);
                pair
            }
            None => curves,
        }
    } else {
        curves
    };

    let class = classify_rules(&curves, &tangencies.points, assoc);
    let component_count = flood_count(&grid);
    Ok(IntersectionReport {
        equator: *equator,
        class,
        curves,
        tangencies,
        component_count,
        resolution: n,
    })
}

// ---------------------------------------------------------------------------
// component counting and scans

/// Total number of connected sign regions of the height on the parameter
/// torus (positive and negative regions both counted), via flood fill with
/// 4-neighbor wraparound adjacency.
fn flood_count(grid: &HeightGrid) -> usize {
    let n = grid.resolution();
    let mut label = vec![false; n * n];
    let mut count = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..n * n {
        if label[start] {
            continue;
        }
        let cls = grid.values[start] >= 0.0;
        count += 1;
        label[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (iu, iv) = (idx / n, idx % n);
            let neighbors = [
                ((iu + 1) % n) * n + iv,
                ((iu + n - 1) % n) * n + iv,
                iu * n + (iv + 1) % n,
                iu * n + (iv + n - 1) % n,
            ];
            for &j in &neighbors {
                if !label[j] && (grid.values[j] >= 0.0) == cls {
                    label[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// Number of connected pieces the equator cuts the torus into, by flood fill
/// over the sign grid. Refuses tangent equators, where the count is not
/// stable under perturbation.
pub fn component_count(
    surface: &Surface,
    equator: &Equator,
    n: usize,
) -> Result<usize, SliceError> {
    let tangencies = find_tangencies(surface, equator, n)?;
    if let Some(t) = tangencies.points.first() {
        return Err(SliceError::TangentEquator { u: t.u, v: t.v });
    }
    let grid = height_grid(surface, equator, n)?;
    Ok(flood_count(&grid))
}

/// One equator in a scan whose region count came out wrong (or whose
/// classification failed outright).
#[derive(Clone, Debug)]
pub struct ScanFailure {
    pub index: usize,
    pub pole: Vec4,
    pub count: Option<usize>,
    pub message: Option<String>,
}

/// Batch verdict for the separation property: every equator must cut the
/// surface into exactly two pieces.
#[derive(Clone, Debug)]
pub struct TwoPieceReport {
    pub samples: usize,
    pub resolution: usize,
    pub seed: u64,
    /// Whether the negative-curvature precheck passed; classification
    /// histograms are only collected when it did.
    pub curvature_negative: bool,
    pub pass: bool,
    /// Slice classes seen: `[unclassified, type 1, type 2, type 3, type 4]`.
    pub histogram: [usize; 5],
    pub failures: Vec<ScanFailure>,
}

/// Sample `samples` uniform random equators and check that each cuts the
/// surface into exactly two pieces. Per-equator failures (wrong counts,
/// classification errors) are collected rather than aborting the scan.
pub fn scan_two_piece(
    surface: &Surface,
    samples: usize,
    seed: u64,
    n: usize,
) -> Result<TwoPieceReport, SliceError> {
    if n < MIN_GRID {
        return Err(SliceError::ResolutionTooCoarse { n });
    }
    let curvature_negative = check_negative_curvature(surface, n).is_ok();
    let mut rng = rng_from_seed(seed);
    let mut histogram = [0usize; 5];
    let mut failures = Vec::new();
    for index in 0..samples {
        let pole = random_sphere_point(&mut rng);
        let equator = Equator::new(pole);
        let grid = height_grid(surface, &equator, n)?;
        let count = flood_count(&grid);
        if count != 2 {
            failures.push(ScanFailure {
                index,
                pole: pole.coords(),
                count: Some(count),
                message: None,
            });
        }
        if curvature_negative {
            match classify_transversal(surface, &equator, n) {
                Ok(report) => {
                    let slot = report.class.code().map(usize::from).unwrap_or(0);
                    histogram[slot] += 1;
                }
                Err(e) => {
                    failures.push(ScanFailure {
                        index,
                        pole: pole.coords(),
                        count: None,
                        message: Some(alloc::format!("{e}")),
                    });
                }
            }
        }
    }
    let pass = failures.is_empty();
    Ok(TwoPieceReport {
        samples,
        resolution: n,
        seed,
        curvature_negative,
        pass,
        histogram,
        failures,
    })
}

// ---------------------------------------------------------------------------
// transversal slice search

/// Result of the rotation sweep in [`find_type2_equator`].
#[derive(Clone, Debug)]
pub struct Type2Search {
    pub equator: Equator,
    pub report: IntersectionReport,
    /// Rotation applied to the starting normal equator, in radians.
    pub rotation_angle: f64,
    /// Number of classifications spent.
    pub steps: usize,
}

/// Find an equator slicing the surface into a two-curve transversal
/// configuration. Starts from the normal equator at a fixed surface point
/// (which passes through the point and is tangent there) and rotates it
/// about the geodesic through the point in a principal direction, halving
/// the angle until the slice classifies as two essential curves.
pub fn find_type2_equator(surface: &Surface, n: usize) -> Result<Type2Search, SliceError> {
    const SEED_PARAM: (f64, f64) = (0.3, 1.2);
    const MAX_STEPS: usize = 60;

    let geom = surface.geometry_at(SEED_PARAM.0, SEED_PARAM.1);
    let p = geom.position;
    let normal = geom.normal;
    let mut steps = 0usize;
    let mut best: Option<(SliceClass, f64)> = None;

    let pole0 = SpherePoint::new(normal).expect("surface normal is unit");
    if let Ok(report) = classify(surface, &Equator::new(pole0), n) {
        steps += 1;
        if report.class == SliceClass::Type2 {
            return Ok(Type2Search {
                equator: report.equator,
                report,
                rotation_angle: 0.0,
                steps,
            });
        }
        best = Some((report.class, 0.0));
    } else {
        steps += 1;
    }

    // Principal direction of the larger curvature: solve (II - k1 g) w = 0.
    let [ee, ff, gg] = geom.first;
    let [l, m, nn] = geom.second;
    let r1 = [l - geom.k1 * ee, m - geom.k1 * ff];
    let r2 = [m - geom.k1 * ff, nn - geom.k1 * gg];
    let row = if r1[0] * r1[0] + r1[1] * r1[1] >= r2[0] * r2[0] + r2[1] * r2[1] {
        r1
    } else {
        r2
    };
    let dir = [-row[1], row[0]];
    let w = normalize(&[
        dir[0] * geom.xu[0] + dir[1] * geom.xv[0],
        dir[0] * geom.xu[1] + dir[1] * geom.xv[1],
        dir[0] * geom.xu[2] + dir[1] * geom.xv[2],
        dir[0] * geom.xu[3] + dir[1] * geom.xv[3],
    ]);

    // Rotating about the geodesic through p tangent to w keeps the slice
    // through p while tilting its pole away from the normal. That geodesic
    // is the set of points orthogonal to both the axis p x w x normal and
    // the normal itself: the pi/2 circle about the normal inside S(axis).
    let axis = normalize(&cross4(&p, &w, &normal));
    let axis_eq = Equator::new(SpherePoint::new(axis).expect("axis is unit"));
    let center = SpherePoint::new(normal).expect("surface normal is unit");
    let geodesic = GeodesicCircle::new(axis_eq, center, PI / 2.0)
        .expect("geodesic circle parameters are valid");

    let mut theta = PI / 64.0;
    while theta > 1e-6 && steps < MAX_STEPS {
        for sign in [1.0f64, -1.0] {
            if steps >= MAX_STEPS {
                break;
            }
            let motion = rotation_about_geodesic(&geodesic, sign * theta)
                .expect("rotation about a geodesic is well-formed");
            let pole = motion.apply_vec(&normal);
            let pole = SpherePoint::new(normalize(&pole)).expect("rotated pole is unit");
            let equator = Equator::new(pole);
            steps += 1;
            match classify(surface, &equator, n) {
                Ok(report) => {
                    if report.class == SliceClass::Type2 {
                        return Ok(Type2Search {
                            equator,
                            report,
                            rotation_angle: sign * theta,
                            steps,
                        });
                    }
                    if best.is_none() {
                        best = Some((report.class, sign * theta));
                    }
                }
                Err(_) => {}
            }
        }
        theta *= 0.5;
    }

    Err(SliceError::NoTransversalSlice {
        attempts: steps,
        best_class: best.map(|b| b.0).unwrap_or(SliceClass::Unclassified),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::rng_from_seed;
    use crate::sphere::Congruence;
    use crate::vec4::dist;

    fn equator_from(coords: Vec4) -> Equator {
        Equator::new(SpherePoint::new(normalize(&coords)).unwrap())
    }

    fn meridian_equator() -> Equator {
        equator_from([0.0, 1.0, 0.0, 0.0])
    }

    fn diagonal_equator() -> Equator {
        equator_from([1.0, 0.0, 1.0, 0.0])
    }

    #[test]
    fn height_grid_matches_direct_evaluation() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        let grid = height_grid(&surface, &eq, 32).unwrap();
        let c = libm::sqrt(0.5);
        for iu in 0..32 {
            for iv in 0..32 {
                let (u, _) = grid.node(iu, iv);
                let expect = c * libm::sin(u);
                assert!((grid.value(iu, iv) - expect).abs() < 1e-14);
            }
        }
        let neg = equator_from([0.0, -1.0, 0.0, 0.0]);
        let ngrid = height_grid(&surface, &neg, 32).unwrap();
        for iu in 0..32 {
            for iv in 0..32 {
                assert_eq!(ngrid.value(iu, iv), -grid.value(iu, iv));
            }
        }
    }

    #[test]
    fn height_grid_rejects_coarse_resolution() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        assert!(matches!(
            height_grid(&surface, &eq, 16),
            Err(SliceError::ResolutionTooCoarse { n: 16 })
        ));
    }

    /// The meridian equator meets the Clifford torus in the two parameter
    /// columns u = 0 and u = pi; every traced vertex must sit on one of them.
    #[test]
    fn meridian_slice_traces_on_columns() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        let grid = height_grid(&surface, &eq, 64).unwrap();
        let curves = trace_zero_set(&grid, &surface, &eq).unwrap();
        assert_eq!(curves.len(), 2);
        let mut columns = std::vec::Vec::new();
        for curve in &curves {
            assert_eq!(curve.winding, (0, 1));
            assert!(curve.params.len() >= CURVE_MIN_POINTS);
            let col = if wrap_pi(curve.params[0][0]).abs() < 0.1 {
                0.0
            } else {
                PI
            };
            for p in &curve.params {
                assert!(
                    wrap_pi(p[0] - col).abs() < 1e-8,
                    "vertex u = {} strays from column {}",
                    p[0],
                    col
                );
            }
            for (p, x) in curve.params.iter().zip(&curve.points) {
                assert!(dist(x, &surface.position_at(p[0], p[1])) < 1e-15);
                assert!(dot(x, &eq.pole().coords()).abs() < 1e-10);
            }
            columns.push(col);
        }
        columns.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(columns, std::vec![0.0, PI]);
    }

    #[test]
    fn meridian_slice_classifies_type_two() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        let report = classify(&surface, &eq, 64).unwrap();
        assert_eq!(report.class, SliceClass::Type2);
        assert_eq!(report.class.code(), Some(2));
        assert_eq!(report.curves.len(), 2);
        assert_eq!(report.component_count, 2);
        assert_eq!(report.resolution, 64);
        assert!(report.tangencies.points.is_empty());
        assert_eq!(report.tangencies.dropped, 0);
    }

    /// Both meridian circles have radius pi/4, so their curvature is
    /// identically 1 and they are congruent to each other.
    #[test]
    fn meridian_curves_are_congruent_unit_circles() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        let report = classify(&surface, &eq, 64).unwrap();
        let sigs: std::vec::Vec<CurvatureSignature> = report
            .curves
            .iter()
            .map(|c| curvature_profile(c, &eq, PROFILE_STATIONS).unwrap())
            .collect();
        let expect_len = TAU * libm::sin(PI / 4.0);
        for (curve, sig) in report.curves.iter().zip(&sigs) {
            assert!((sig.length - expect_len).abs() < 5e-3);
            for k in &sig.samples {
                assert!((k - 1.0).abs() < 1e-4);
            }
            assert!((curve.max_curvature() - 1.0).abs() < 1e-9);
            assert!((curve.min_curvature() - 1.0).abs() < 1e-9);
        }
        assert!(curves_congruent(&sigs[0], &sigs[1], 1e-6).unwrap());
    }

    /// The diagonal equator is tangent to the Clifford torus at two
    /// antipodal saddle points. Power-of-two grids park nodes exactly on
    /// them, so classification must retry on the shifted grid, then report
    /// the two-tangency configuration with its geodesic crossing curves.
    #[test]
    fn diagonal_tangent_slice_retries_to_type_four() {
        let surface = Surface::clifford();
        let eq = diagonal_equator();
        let report = classify(&surface, &eq, 64).unwrap();
        assert_eq!(report.resolution, 65);
        assert_eq!(report.class, SliceClass::Type4);
        assert_eq!(report.component_count, 2);

        let tp = &report.tangencies.points;
        assert_eq!(tp.len(), 2);
        for t in tp {
            assert_eq!(t.signature, TangencySignature::Saddle);
            let angle = t.crossing_angle.unwrap();
            assert!((angle - PI / 2.0).abs() < 1e-3);
        }
        assert!((dot(&tp[0].position, &tp[1].position) + 1.0).abs() < 1e-9);
        let c = libm::sqrt(0.5);
        let expected = [[-c, 0.0, c, 0.0], [c, 0.0, -c, 0.0]];
        for e in &expected {
            assert!(
                tp.iter().any(|t| dist(&t.position, e) < 1e-6),
                "missing tangency at {:?}",
                e
            );
        }

        assert_eq!(report.curves.len(), 2);
        let mut windings: std::vec::Vec<(i32, i32)> =
            report.curves.iter().map(|c| c.winding).collect();
        windings.sort();
        assert_eq!(windings, std::vec![(1, -1), (1, 1)]);
        for curve in &report.curves {
            assert!(curve.max_curvature() < 1e-3, "rejoined branches are geodesics");
            for t in tp {
                assert!(
                    passes_through(curve, t, 1e-6),
                    "each branch runs through both tangencies"
                );
            }
        }
    }

    #[test]
    fn trace_errors_on_node_aligned_saddle() {
        let surface = Surface::clifford();
        let eq = diagonal_equator();
        let grid = height_grid(&surface, &eq, 64).unwrap();
        match trace_zero_set(&grid, &surface, &eq) {
            Err(SliceError::DegenerateNode { u, v }) => {
                let on_saddle = (wrap_pi(u - PI).abs() < 1e-12 && wrap_pi(v).abs() < 1e-12)
                    || (wrap_pi(u).abs() < 1e-12 && wrap_pi(v - PI).abs() < 1e-12);
                assert!(on_saddle, "degenerate node at ({u}, {v})");
            }
            other => panic!("expected a degenerate node, got {:?}", other.map(|c| c.len())),
        }
    }

    /// An offset ring torus can sit entirely inside one hemisphere of an
    /// equator; the slice is empty and the surface is all on one side.
    #[test]
    fn offset_cyclide_misses_polar_equator() {
        let surface = Surface::cyclide(2.0, 0.5, 0.3).unwrap();
        let eq = equator_from([0.0, 0.0, 0.0, 1.0]);
        let grid = height_grid(&surface, &eq, 64).unwrap();
        assert!(grid.min_abs() > 0.1, "slice should be far from the surface");
        let curves = trace_zero_set(&grid, &surface, &eq).unwrap();
        assert!(curves.is_empty());
        assert_eq!(component_count(&surface, &eq, 64).unwrap(), 1);
    }

    #[test]
    fn winding_class_basics() {
        let n = 64usize;
        let h = TAU / n as f64;
        let column: std::vec::Vec<[f64; 2]> = (0..n).map(|j| [0.0, j as f64 * h]).collect();
        assert_eq!(winding_class(&column).unwrap(), (0, 1));
        let diagonal: std::vec::Vec<[f64; 2]> =
            (0..n).map(|j| [j as f64 * h, TAU - j as f64 * h]).collect();
        assert_eq!(winding_class(&diagonal).unwrap(), (1, -1));
        let square = [[0.1, 0.1], [0.2, 0.1], [0.2, 0.2], [0.1, 0.2]];
        assert_eq!(winding_class(&square).unwrap(), (0, 0));
    }

    /// Region counts are a topological quantity; refining the grid must not
    /// change them.
    #[test]
    fn component_counts_match_across_resolutions() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        assert_eq!(component_count(&surface, &eq, 32).unwrap(), 2);
        assert_eq!(component_count(&surface, &eq, 128).unwrap(), 2);

        let mut rng = rng_from_seed(19);
        for _ in 0..3 {
            let pole = random_sphere_point(&mut rng);
            let eq = Equator::new(pole);
            let a = component_count(&surface, &eq, 48).unwrap();
            let b = component_count(&surface, &eq, 192).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, 2);
        }

        let offset = Surface::cyclide(2.0, 0.5, 0.3).unwrap();
        let polar = equator_from([0.0, 0.0, 0.0, 1.0]);
        assert_eq!(component_count(&offset, &polar, 32).unwrap(), 1);
        assert_eq!(component_count(&offset, &polar, 128).unwrap(), 1);
    }

    #[test]
    fn component_count_refuses_tangent_slice() {
        let surface = Surface::clifford();
        let eq = diagonal_equator();
        assert!(matches!(
            component_count(&surface, &eq, 64),
            Err(SliceError::TangentEquator { .. })
        ));
    }

    #[test]
    fn random_equator_scan_passes_on_clifford() {
        let surface = Surface::clifford();
        let report = scan_two_piece(&surface, 60, 7, 48).unwrap();
        assert!(report.curvature_negative);
        assert!(report.pass, "failures: {:?}", report.failures);
        assert!(report.failures.is_empty());
        assert_eq!(report.histogram.iter().sum::<usize>(), 60);
        assert_eq!(report.histogram[2] + report.histogram[4], 60);
        assert_eq!(report.seed, 7);
        assert_eq!(report.samples, 60);
        assert_eq!(report.resolution, 48);
    }

    #[test]
    fn scan_reruns_identically() {
        let surface = Surface::clifford();
        let a = scan_two_piece(&surface, 12, 99, 32).unwrap();
        let b = scan_two_piece(&surface, 12, 99, 32).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.failures.len(), b.failures.len());
    }

    #[test]
    fn positively_curved_fixture_fails_precheck() {
        let surface = Surface::cyclide(2.0, 0.5, 0.3).unwrap();
        let eq = equator_from([0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            classify(&surface, &eq, 48),
            Err(SliceError::PositiveCurvature { .. })
        ));
        let report = scan_two_piece(&surface, 8, 3, 32).unwrap();
        assert!(!report.curvature_negative);
        assert_eq!(report.histogram.iter().sum::<usize>(), 0);
    }

    /// Rotating the meridian equator toward the diagonal one sharpens the
    /// slice curves: traced curvature maxima blow up and minima collapse as
    /// the tangent configuration is approached dyadically.
    #[test]
    fn near_tangent_slices_sharpen_dyadically() {
        let surface = Surface::clifford();
        let mut maxima = std::vec::Vec::new();
        let mut minima = std::vec::Vec::new();
        for k in 12..=17 {
            let t = (PI / 8.0) / libm::pow(2.0, k as f64);
            let pole = [
                libm::cos(PI / 4.0 + t),
                0.0,
                libm::cos(PI / 4.0 - t),
                0.0,
            ];
            let eq = equator_from(pole);
            let report = classify(&surface, &eq, 64).unwrap();
            assert_eq!(report.class, SliceClass::Type2, "k = {k}");
            assert!(report.tangencies.points.is_empty(), "k = {k}");
            let mx = report
                .curves
                .iter()
                .map(|c| c.max_curvature())
                .fold(0.0f64, f64::max);
            let mn = report
                .curves
                .iter()
                .map(|c| c.min_curvature())
                .fold(f64::INFINITY, f64::min);
            maxima.push(mx);
            minima.push(mn);
        }
        for w in maxima.windows(2) {
            assert!(w[1] > w[0], "maxima not increasing: {:?}", maxima);
        }
        for w in minima.windows(2) {
            assert!(w[1] <= w[0], "minima not decreasing: {:?}", minima);
        }
        assert!(maxima.last().unwrap() > &300.0, "maxima: {:?}", maxima);
        assert!(minima.last().unwrap() < &1e-2, "minima: {:?}", minima);
    }

    fn synthetic_curve(eq: &Equator, frame_pts: std::vec::Vec<[f64; 3]>) -> IntersectionCurve {
        let points: std::vec::Vec<Vec4> = frame_pts.iter().map(|q| eq.from_frame(q)).collect();
        let m = points.len();
        IntersectionCurve {
            params: (0..m).map(|i| [i as f64, 0.0]).collect(),
            points,
            closed: true,
            winding: (0, 0),
            arclength: std::vec![0.0],
            vertex_curvature: std::vec![0.0],
        }
    }

    #[test]
    fn signature_comparison_rules() {
        let surface = Surface::clifford();
        let eq = meridian_equator();
        let report = classify(&surface, &eq, 64).unwrap();
        let sig = curvature_profile(&report.curves[0], &eq, PROFILE_STATIONS).unwrap();

        // A circle of a different radius: different length, different
        // curvature, not congruent.
        let r = PI / 6.0;
        let circle: std::vec::Vec<[f64; 3]> = (0..128)
            .map(|i| {
                let t = TAU * i as f64 / 128.0;
                [
                    libm::sin(r) * libm::cos(t),
                    libm::sin(r) * libm::sin(t),
                    libm::cos(r),
                ]
            })
            .collect();
        let small = synthetic_curve(&eq, circle);
        let small_sig = curvature_profile(&small, &eq, PROFILE_STATIONS).unwrap();
        assert!((small_sig.length - TAU * libm::sin(r)).abs() < 1e-3);
        assert!((small_sig.max() - libm::sqrt(3.0)).abs() < 1e-3);
        assert!(!curves_congruent(&sig, &small_sig, 1e-3).unwrap());

        let coarse = curvature_profile(&report.curves[0], &eq, 128).unwrap();
        assert!(matches!(
            curves_congruent(&sig, &coarse, 1e-3),
            Err(SliceError::SignatureMismatch { a: 512, b: 128 })
        ));
    }

    #[test]
    fn profile_rejects_self_intersection() {
        let eq = meridian_equator();
        // A bowtie: two straight strokes that cross at the pole of the
        // chart, densified so the polyline has enough vertices.
        let corners = [[0.1, 0.1], [-0.1, -0.1], [0.1, -0.1], [-0.1, 0.1]];
        let mut pts = std::vec::Vec::new();
        for s in 0..4 {
            let a = corners[s];
            let b = corners[(s + 1) % 4];
            for i in 0..20 {
                let t = i as f64 / 20.0;
                let x = a[0] + t * (b[0] - a[0]);
                let y = a[1] + t * (b[1] - a[1]);
                let n = libm::sqrt(x * x + y * y + 1.0);
                pts.push([x / n, y / n, 1.0 / n]);
            }
        }
        let bowtie = synthetic_curve(&eq, pts);
        assert!(matches!(
            curvature_profile(&bowtie, &eq, 64),
            Err(SliceError::SelfIntersectingCurve)
        ));
    }

    #[test]
    fn profile_rejects_short_curves() {
        let eq = meridian_equator();
        let circle: std::vec::Vec<[f64; 3]> = (0..10)
            .map(|i| {
                let t = TAU * i as f64 / 10.0;
                [0.5 * libm::cos(t), 0.5 * libm::sin(t), libm::sqrt(0.75)]
            })
            .collect();
        let short = synthetic_curve(&eq, circle);
        assert!(matches!(
            curvature_profile(&short, &eq, 64),
            Err(SliceError::ProfileTooShort { points: 10 })
        ));
    }

    #[test]
    fn negated_pole_classifies_identically() {
        let surface = Surface::clifford();
        let plus = classify(&surface, &meridian_equator(), 64).unwrap();
        let minus = classify(&surface, &equator_from([0.0, -1.0, 0.0, 0.0]), 64).unwrap();
        assert_eq!(plus.class, minus.class);
        assert_eq!(plus.curves.len(), minus.curves.len());
        assert_eq!(plus.component_count, minus.component_count);
        for (a, b) in plus.curves.iter().zip(&minus.curves) {
            assert_eq!(a.winding, b.winding);
            assert!((a.length() - b.length()).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_resolution_agrees() {
        let surface = Surface::clifford();
        let mut rng = rng_from_seed(11);
        let pole = random_sphere_point(&mut rng);
        let eq = Equator::new(pole);
        let coarse = classify(&surface, &eq, 64).unwrap();
        let fine = classify(&surface, &eq, 128).unwrap();
        assert_eq!(coarse.class, fine.class);
        assert_eq!(coarse.curves.len(), fine.curves.len());
        assert_eq!(coarse.component_count, fine.component_count);
        for (a, b) in coarse.curves.iter().zip(&fine.curves) {
            assert_eq!(a.winding, b.winding);
            assert!((a.length() - b.length()).abs() < 1e-2);
        }
        // Every traced vertex genuinely sits on the zero set.
        let pole = eq.pole().coords();
        for curve in &fine.curves {
            for p in &curve.params {
                assert!(height_at(&surface, &pole, p[0], p[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn classification_commutes_with_congruence() {
        // A generic pole keeps the zero set away from grid nodes, so the
        // trace is stable under the rounding introduced by the rotation.
        let surface = Surface::clifford();
        let mut rng = rng_from_seed(3);
        let eq = Equator::new(random_sphere_point(&mut rng));
        let motion = Congruence::random_rotation(&mut rng);
        let moved = Surface::rotated(Surface::clifford(), motion);
        let moved_eq = Equator::new(
            SpherePoint::new(normalize(&motion.apply_vec(&eq.pole().coords()))).unwrap(),
        );
        let base = classify(&surface, &eq, 64).unwrap();
        let turned = classify(&moved, &moved_eq, 64).unwrap();
        assert_eq!(base.class, turned.class);
        assert_eq!(base.curves.len(), turned.curves.len());
        assert_eq!(base.component_count, turned.component_count);
        let mut la: std::vec::Vec<f64> = base.curves.iter().map(|c| c.length()).collect();
        let mut lb: std::vec::Vec<f64> = turned.curves.iter().map(|c| c.length()).collect();
        la.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in la.iter().zip(&lb) {
            assert!((a - b).abs() < 1e-6, "lengths {a} vs {b}");
        }
        let sa = curvature_profile(&base.curves[0], &eq, PROFILE_STATIONS).unwrap();
        let sb = curvature_profile(&turned.curves[0], &moved_eq, PROFILE_STATIONS).unwrap();
        assert!(curves_congruent(&sa, &sb, 1e-3).unwrap());
    }

    #[test]
    fn transversal_search_finds_type_two() {
        let surface = Surface::clifford();
        let found = find_type2_equator(&surface, 48).unwrap();
        assert_eq!(found.report.class, SliceClass::Type2);
        assert!(found.rotation_angle.abs() <= PI / 64.0 + 1e-12);
        assert!(found.rotation_angle.abs() > 0.0);
        assert!(found.steps <= 4);
        // The rotated equator still passes through the anchor point.
        let p = surface.position_at(0.3, 1.2);
        assert!(dot(&p, &found.equator.pole().coords()).abs() < 1e-9);

        let tube = Surface::homogeneous(PI / 6.0).unwrap();
        let found = find_type2_equator(&tube, 48).unwrap();
        assert_eq!(found.report.class, SliceClass::Type2);
    }
}
