//! Sphere diffeomorphisms and their canonical extensions to the annulus
//! `A = {x in R^4 : 1/2 < |x| < 2}`.
//!
//! A map `xi` of the 3-sphere extends to `A` by `F(x) = |x| xi(x/|x|)`, which
//! is degree-one homogeneous and restricts to `xi` on the sphere. This module
//! measures such extensions in the sampled Holder `C^{2,alpha}` norm, builds
//! the symmetric distance-to-identity functional `tau`, evaluates mean
//! curvature of pushed-forward square tori on parameter lattices, and joins
//! curve arcs end to end into closed curves.
//!
//! Suprema over `A` are not computable, so every norm here is a seeded
//! sampled lower bound and says so in its report: the budget and seed travel
//! with the numbers. Sampling is sharded with per-shard seeds derived from
//! the master seed; shards are independent streams and the final max does not
//! depend on evaluation order. Growing a budget only appends draws to each
//! shard, so estimates are monotone under nested budgets.

use crate::jet::{ambient_vars, uv_vars, Jet4, Real};
use crate::sample::{random_sphere_point, rng_from_seed};
use crate::sphere::Congruence;
use crate::torus::{geometry_from_jet, Surface};
use crate::vec4::{acos_clamped, add, dist, dot, mat_identity, mat_mul, mat_vec_g, norm, normalize, normalize_g, scale, sub, Mat4, Vec4};
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Inner radius of the annulus the extensions live on.
pub const ANNULUS_INNER: f64 = 0.5;
/// Outer radius of the annulus.
pub const ANNULUS_OUTER: f64 = 2.0;
/// Smallest pair budget the seminorm estimator accepts.
pub const MIN_HOLDER_PAIRS: usize = 1_000;
/// Smallest point budget the norm estimator accepts.
pub const MIN_NORM_SAMPLES: usize = 10_000;
/// Arc endpoints must meet to this Euclidean distance.
pub const ENDPOINT_TOLERANCE: f64 = 1e-8;
/// Tangents and curvatures must agree across a junction to this tolerance
/// for the join to count as regular.
pub const JOIN_TOLERANCE: f64 = 1e-6;
/// Default budgets of [`tau`]; [`tau_with_budget`] takes explicit ones.
pub const TAU_SAMPLES: usize = 10_000;
pub const TAU_PAIRS: usize = 1_000;
pub const TAU_SEED: u64 = 0x7a75_0001;

/// Offsets of the clustered sample pairs. Difference quotients of the second
/// derivatives are probed from coarse down to near the noise floor.
const HOLDER_SCALES: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
/// Fixed shard count; budgets split across shards, never the other way, so a
/// larger budget extends each shard's stream instead of reshuffling it.
const SHARD_COUNT: usize = 16;
const SHARD_MIX: u64 = 0x9e37_79b9_7f4a_7c15;
/// Salt separating the pair stream from the point stream.
const PAIR_SALT: u64 = 0x9492_0c23_ff12_3aa7;
/// Metric determinant floor below which a pushforward counts as degenerate.
const PUSHFORWARD_DET_FLOOR: f64 = 1e-12;
/// Round-trip tolerance of the inverse spot check in [`tau_with_budget`].
const INVERSE_CHECK_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeformError {
    /// Holder exponent outside `(0, 1]`.
    BadExponent { alpha: f64 },
    /// Sampling budget below the documented floor.
    BudgetTooSmall { got: usize, floor: usize },
    /// A derivative field evaluated to a non-finite value at `sample`.
    NonFiniteDerivative { sample: Vec4 },
    /// `tau` is defined for canonical extensions only.
    NotExtension,
    /// The sphere map has no closed-form inverse.
    InverseUnavailable,
    /// The claimed inverse failed the round-trip spot check.
    InverseInconsistent { deviation: f64 },
    /// Lattice with no points.
    EmptyLattice,
    /// The pushed-forward immersion degenerated at the lattice point `(u, v)`.
    DegeneratePushforward { u: f64, v: f64 },
    /// Arc with fewer than three vertices.
    ArcTooShort { vertices: usize },
    /// Arc endpoints do not meet.
    EndpointMismatch { gap: f64 },
    /// Tangent or curvature data jumps across a junction.
    NonRegularJoin { tangent_gap: f64, curvature_gap: f64 },
}

impl fmt::Display for DeformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeformError::BadExponent { alpha } => {
                write!(f, "holder exponent {alpha} outside (0, 1]")
            }
            DeformError::BudgetTooSmall { got, floor } => {
                write!(f, "sampling budget {got} below the floor {floor}")
            }
            DeformError::NonFiniteDerivative { sample } => write!(
                f,
                "non-finite derivative at ({}, {}, {}, {})",
                sample[0], sample[1], sample[2], sample[3]
            ),
            DeformError::NotExtension => {
                write!(f, "tau needs a canonical extension of a sphere map")
            }
            DeformError::InverseUnavailable => {
                write!(f, "sphere map has no closed-form inverse")
            }
            DeformError::InverseInconsistent { deviation } => {
                write!(f, "inverse round trip off by {deviation:.3e}")
            }
            DeformError::EmptyLattice => write!(f, "lattice needs at least one point"),
            DeformError::DegeneratePushforward { u, v } => {
                write!(f, "pushed-forward immersion degenerate at ({u:.6}, {v:.6})")
            }
            DeformError::ArcTooShort { vertices } => {
                write!(f, "arc needs at least 3 vertices, got {vertices}")
            }
            DeformError::EndpointMismatch { gap } => {
                write!(f, "arc endpoints {gap:.3e} apart")
            }
            DeformError::NonRegularJoin { tangent_gap, curvature_gap } => write!(
                f,
                "non-regular join: tangent gap {tangent_gap:.3e}, curvature gap {curvature_gap:.3e}"
            ),
        }
    }
}

/// Diffeomorphism of the unit 3-sphere, evaluable over plain floats or jets
/// through the same code path.
#[derive(Clone, Debug)]
pub enum SphereMap {
    Identity,
    /// Restriction of an orthogonal map of R^4.
    Rotation(Congruence),
    /// Rotation of the `(x1, x2)`-plane by the angle `rate * x4`. Fixes `x3`
    /// and `x4`, so `Twist { rate: -r }` inverts it exactly.
    Twist { rate: f64 },
    /// Projective action of `B = cos(a) I + sin(a) diag(-1, -1, 1, 1)`:
    /// `v -> Bv / |Bv|`. On the square torus `diag(-1, -1, 1, 1) v` is the
    /// unit normal, so this pushes the torus distance `a` along its normal,
    /// onto the tube of radius `pi/4 + a`. Since `B(a) B(-a) = cos(2a) I`,
    /// the inverse is the bump of amplitude `-a` while `|a| < pi/4`.
    NormalBump { amplitude: f64 },
    /// `Composed(f, g)` applies `g` first.
    Composed(Box<SphereMap>, Box<SphereMap>),
}

impl SphereMap {
    /// Image of a unit vector. Callers keep `|v| = 1`; nothing here
    /// renormalizes except the bump, whose formula requires it.
    pub fn apply<R: Real>(&self, v: &[R; 4]) -> [R; 4] {
        match self {
            SphereMap::Identity => *v,
            SphereMap::Rotation(q) => mat_vec_g(&q.matrix(), v),
            SphereMap::Twist { rate } => {
                let beta = v[3] * R::constant(*rate);
                let (c, s) = (beta.cos(), beta.sin());
                [v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2], v[3]]
            }
            SphereMap::NormalBump { amplitude } => {
                let c = R::constant(libm::cos(*amplitude));
                let s = R::constant(libm::sin(*amplitude));
                let w = [
                    (c - s) * v[0],
                    (c - s) * v[1],
                    (c + s) * v[2],
                    (c + s) * v[3],
                ];
                normalize_g(&w)
            }
            SphereMap::Composed(f, g) => f.apply(&g.apply(v)),
        }
    }

    /// Closed-form inverse, when the map has one.
    pub fn inverse(&self) -> Option<SphereMap> {
        match self {
            SphereMap::Identity => Some(SphereMap::Identity),
            SphereMap::Rotation(q) => Some(SphereMap::Rotation(q.inverse())),
            SphereMap::Twist { rate } => Some(SphereMap::Twist { rate: -rate }),
            SphereMap::NormalBump { amplitude } => {
                // B(a) B(-a) = cos(2a) I; past |a| = pi/4 the linear factor
                // is singular and the projective action stops being a map.
                if libm::cos(2.0 * amplitude).abs() <= 1e-12 {
                    return None;
                }
                Some(SphereMap::NormalBump { amplitude: -amplitude })
            }
            SphereMap::Composed(f, g) => Some(SphereMap::Composed(
                Box::new(g.inverse()?),
                Box::new(f.inverse()?),
            )),
        }
    }

    /// Matrix of the map when it is the restriction of a linear isometry.
    fn linear_matrix(&self) -> Option<Mat4> {
        match self {
            SphereMap::Identity => Some(mat_identity()),
            SphereMap::Rotation(q) => Some(q.matrix()),
            SphereMap::Composed(f, g) => {
                Some(mat_mul(&f.linear_matrix()?, &g.linear_matrix()?))
            }
            _ => None,
        }
    }
}

/// Map of the annulus with evaluable first and second partials.
///
/// `Extension` is the canonical-extension provenance; the other variants are
/// general maps and in particular are what `X - I` evaluates through.
#[derive(Clone, Debug)]
pub enum AnnulusMap {
    /// `F(x) = |x| xi(x/|x|)`.
    Extension(SphereMap),
    /// `F(x) = (1 + amplitude * ripple(x)) Q x` with
    /// `ripple = cos(x1 - x4) sin(x2 + x3)`: a deliberately non-extension
    /// specimen with dense second derivatives.
    ScaledRotation { rotation: Congruence, amplitude: f64 },
    /// `F - I` of the wrapped map.
    MinusIdentity(Box<AnnulusMap>),
}

/// Canonical extension `X(r v) = r xi(v)` of a sphere map.
pub fn canonical_extend(xi: SphereMap) -> AnnulusMap {
    AnnulusMap::Extension(xi)
}

impl AnnulusMap {
    pub fn is_canonical_extension(&self) -> bool {
        matches!(self, AnnulusMap::Extension(_))
    }

    pub fn minus_identity(self) -> AnnulusMap {
        AnnulusMap::MinusIdentity(Box::new(self))
    }

    pub fn eval(&self, x: &Vec4) -> Vec4 {
        self.eval_g(*x)
    }

    /// Value, gradient, and Hessian of every component in one pass.
    pub fn jets(&self, x: &Vec4) -> [Jet4; 4] {
        self.eval_g(ambient_vars(x))
    }

    fn eval_g<R: Real>(&self, x: [R; 4]) -> [R; 4] {
        match self {
            AnnulusMap::Extension(xi) => {
                // Linear sphere maps extend to themselves; evaluating them
                // directly keeps their vanishing second derivatives exact
                // instead of fp residue of r * (x / r).
                if let Some(m) = xi.linear_matrix() {
                    return mat_vec_g(&m, &x);
                }
                let r = dot_g4(&x, &x).sqrt();
                let u = [x[0] / r, x[1] / r, x[2] / r, x[3] / r];
                let w = xi.apply(&u);
                [w[0] * r, w[1] * r, w[2] * r, w[3] * r]
            }
            AnnulusMap::ScaledRotation { rotation, amplitude } => {
                let ripple = (x[0] - x[3]).cos() * (x[1] + x[2]).sin();
                let f = ripple * R::constant(*amplitude) + R::constant(1.0);
                let qx = mat_vec_g(&rotation.matrix(), &x);
                [qx[0] * f, qx[1] * f, qx[2] * f, qx[3] * f]
            }
            AnnulusMap::MinusIdentity(inner) => {
                let w = inner.eval_g(x);
                [w[0] - x[0], w[1] - x[1], w[2] - x[2], w[3] - x[3]]
            }
        }
    }
}

fn dot_g4<R: Real>(a: &[R; 4], b: &[R; 4]) -> R {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Sampled estimate of the Holder `C^{2,alpha}` norm, term by term. All four
/// terms are lower bounds of the corresponding suprema over the annulus; the
/// budget and seed that produced them are part of the report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport {
    pub alpha: f64,
    /// `sup |F|` over the point samples.
    pub sup_term: f64,
    /// `max_j sup |D^j F|` over the point samples.
    pub grad_term: f64,
    /// `max_{j,k} sup |D^{jk} F|` over the point samples.
    pub hess_term: f64,
    /// Seminorm estimate over the sample pairs.
    pub seminorm_term: f64,
    /// Sum of the four terms.
    pub total: f64,
    pub samples: usize,
    pub pairs: usize,
    pub seed: u64,
}

fn check_alpha(alpha: f64) -> Result<(), DeformError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(DeformError::BadExponent { alpha })
    }
}

fn check_budget(got: usize, floor: usize) -> Result<(), DeformError> {
    if got >= floor {
        Ok(())
    } else {
        Err(DeformError::BudgetTooSmall { got, floor })
    }
}

fn shard_rng(seed: u64, salt: u64, shard: usize) -> ChaCha8Rng {
    rng_from_seed(seed ^ salt ^ SHARD_MIX.wrapping_mul(shard as u64 + 1))
}

/// Shard `i` receives the draws `t = i mod SHARD_COUNT`, so each shard's
/// count grows monotonically with the total and a bigger budget only appends
/// to each shard's stream.
fn shard_sizes(total: usize) -> [usize; SHARD_COUNT] {
    let mut out = [total / SHARD_COUNT; SHARD_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        if i < total % SHARD_COUNT {
            *slot += 1;
        }
    }
    out
}

/// Point of the annulus with the radius drawn uniformly. The fields measured
/// here are homogeneous of negative degree and peak toward the inner
/// boundary, which a volume-uniform draw would undersample.
fn annulus_point<R: Rng>(rng: &mut R) -> Vec4 {
    let r = rng.gen_range(ANNULUS_INNER..ANNULUS_OUTER);
    scale(&random_sphere_point(rng).coords(), r)
}

fn jets_finite(j: &[Jet4; 4]) -> bool {
    j.iter().all(|c| {
        c.v.is_finite()
            && c.g.iter().all(|x| x.is_finite())
            && c.h.iter().all(|row| row.iter().all(|x| x.is_finite()))
    })
}

fn finite_jets(f: &AnnulusMap, x: &Vec4) -> Result<[Jet4; 4], DeformError> {
    let j = f.jets(x);
    if jets_finite(&j) {
        Ok(j)
    } else {
        Err(DeformError::NonFiniteDerivative { sample: *x })
    }
}

/// Clustered offset from `x` that stays inside the annulus; `None` when the
/// redraw budget runs out, which the samplers treat as a skipped pair.
fn offset_in_annulus<R: Rng>(rng: &mut R, x: &Vec4, h: f64) -> Option<Vec4> {
    for _ in 0..64 {
        let d = random_sphere_point(rng).coords();
        let y = add(x, &scale(&d, h));
        let r = norm(&y);
        if r > ANNULUS_INNER && r < ANNULUS_OUTER {
            return Some(y);
        }
    }
    None
}

fn seminorm_pairs(
    f: &AnnulusMap,
    alpha: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64, DeformError> {
    let sizes = shard_sizes(pairs);
    let mut best = 0.0f64;
    for (shard, &count) in sizes.iter().enumerate() {
        let mut rng = shard_rng(seed, PAIR_SALT, shard);
        for t in 0..count {
            let x = annulus_point(&mut rng);
            // Alternate global pairs with clustered ones; the clustered
            // offsets cycle through the scale ladder.
            let y = if t % 2 == 0 {
                annulus_point(&mut rng)
            } else {
                match offset_in_annulus(&mut rng, &x, HOLDER_SCALES[(t / 2) % HOLDER_SCALES.len()])
                {
                    Some(y) => y,
                    None => continue,
                }
            };
            let jx = finite_jets(f, &x)?;
            let jy = finite_jets(f, &y)?;
            let d = dist(&x, &y);
            if d < 1e-300 {
                continue;
            }
            let w = libm::pow(d, alpha);
            for j in 0..4 {
                for k in 0..4 {
                    let mut s = 0.0;
                    for i in 0..4 {
                        let e = jx[i].h[j][k] - jy[i].h[j][k];
                        s += e * e;
                    }
                    best = best.max(libm::sqrt(s) / w);
                }
            }
        }
    }
    Ok(best)
}

/// Sampled lower bound of the Holder seminorm `[F]_alpha` of the second
/// derivatives: the max of `|D2F(x) - D2F(y)| / |x - y|^alpha` over seeded
/// pairs, half global, half clustered at the scale ladder.
pub fn holder_seminorm(
    f: &AnnulusMap,
    alpha: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64, DeformError> {
    check_alpha(alpha)?;
    check_budget(pairs, MIN_HOLDER_PAIRS)?;
    seminorm_pairs(f, alpha, pairs, seed)
}

/// Sampled lower bound of the full `C^{2,alpha}` norm: sup of the value,
/// the first derivatives, and the second derivatives over seeded points,
/// plus the pair-sampled seminorm.
pub fn c2alpha_norm(
    f: &AnnulusMap,
    alpha: f64,
    samples: usize,
    pairs: usize,
    seed: u64,
) -> Result<HolderReport, DeformError> {
    check_alpha(alpha)?;
    check_budget(samples, MIN_NORM_SAMPLES)?;
    check_budget(pairs, MIN_HOLDER_PAIRS)?;
    let sizes = shard_sizes(samples);
    let (mut sup, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
    for (shard, &count) in sizes.iter().enumerate() {
        let mut rng = shard_rng(seed, 0, shard);
        for _ in 0..count {
            let x = annulus_point(&mut rng);
            let j = finite_jets(f, &x)?;
            let mut v = 0.0;
            for c in &j {
                v += c.v * c.v;
            }
            sup = sup.max(libm::sqrt(v));
            for col in 0..4 {
                let mut s = 0.0;
                for c in &j {
                    s += c.g[col] * c.g[col];
                }
                grad = grad.max(libm::sqrt(s));
            }
            for a in 0..4 {
                for b in 0..4 {
                    let mut s = 0.0;
                    for c in &j {
                        s += c.h[a][b] * c.h[a][b];
                    }
                    hess = hess.max(libm::sqrt(s));
                }
            }
        }
    }
    let seminorm = seminorm_pairs(f, alpha, pairs, seed)?;
    Ok(HolderReport {
        alpha,
        sup_term: sup,
        grad_term: grad,
        hess_term: hess,
        seminorm_term: seminorm,
        total: sup + grad + hess + seminorm,
        samples,
        pairs,
        seed,
    })
}

/// `tau(X) = |X - I| + |X^{-1} - I|` in the sampled `C^{2,alpha}` norm, at
/// the default budgets.
pub fn tau(x: &AnnulusMap, alpha: f64) -> Result<f64, DeformError> {
    tau_with_budget(x, alpha, TAU_SAMPLES, TAU_PAIRS, TAU_SEED)
}

/// Both summands run the same budget and seed, so `tau(X) == tau(X^{-1})`
/// exactly: the two calls swap and the sum commutes.
pub fn tau_with_budget(
    x: &AnnulusMap,
    alpha: f64,
    samples: usize,
    pairs: usize,
    seed: u64,
) -> Result<f64, DeformError> {
    let xi = match x {
        AnnulusMap::Extension(m) => m,
        _ => return Err(DeformError::NotExtension),
    };
    let inv = xi.inverse().ok_or(DeformError::InverseUnavailable)?;
    let mut rng = rng_from_seed(0x7469);
    let mut deviation = 0.0f64;
    for _ in 0..32 {
        let p = random_sphere_point(&mut rng).coords();
        let forward = inv.apply(&xi.apply(&p));
        let backward = xi.apply(&inv.apply(&p));
        deviation = deviation.max(dist(&forward, &p)).max(dist(&backward, &p));
    }
    if deviation > INVERSE_CHECK_TOLERANCE {
        return Err(DeformError::InverseInconsistent { deviation });
    }
    let fwd = c2alpha_norm(&canonical_extend(xi.clone()).minus_identity(), alpha, samples, pairs, seed)?;
    let bwd = c2alpha_norm(&canonical_extend(inv).minus_identity(), alpha, samples, pairs, seed)?;
    Ok(fwd.total + bwd.total)
}

/// Max of `|H|` of the pushed-forward square torus `(u, v) -> xi(c(u, v))`
/// over the `n x n` parameter lattice `(2 pi j / n, 2 pi k / n)`. Zero is
/// the lattice minimality condition; congruences keep it at fp noise.
pub fn minimality_residual_at_lattice(xi: &SphereMap, n: usize) -> Result<f64, DeformError> {
    if n == 0 {
        return Err(DeformError::EmptyLattice);
    }
    let step = 2.0 * PI / n as f64;
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let (u, v) = (step * j as f64, step * k as f64);
            let (ju, jv) = uv_vars(u, v);
            let p = Surface::Clifford.position_g(ju, jv);
            let q = xi.apply(&p);
            let mut xu = [0.0; 4];
            let mut xv = [0.0; 4];
            for i in 0..4 {
                xu[i] = q[i].g[0];
                xv[i] = q[i].g[1];
            }
            let (e, fm, g) = (dot(&xu, &xu), dot(&xu, &xv), dot(&xv, &xv));
            if e * g - fm * fm <= PUSHFORWARD_DET_FLOOR {
                return Err(DeformError::DegeneratePushforward { u, v });
            }
            worst = worst.max(geometry_from_jet(&q).mean.abs());
        }
    }
    Ok(worst)
}

/// Open curve arc on the 3-sphere with explicit end data. The tangents are
/// unit vectors along the direction of travel; the curvatures are geodesic
/// curvatures of the arc at its first and last vertex.
#[derive(Clone, Debug)]
pub struct CurveArc {
    pub points: Vec<Vec4>,
    pub start_tangent: Vec4,
    pub end_tangent: Vec4,
    pub start_curvature: f64,
    pub end_curvature: f64,
}

impl CurveArc {
    /// Arc with end data estimated from the vertices: tangents and
    /// curvatures of the circles through the three endmost points, which is
    /// exact for arcs of circles and second-order accurate otherwise.
    pub fn from_points(points: Vec<Vec4>) -> Result<CurveArc, DeformError> {
        if points.len() < 3 {
            return Err(DeformError::ArcTooShort { vertices: points.len() });
        }
        let m = points.len();
        let start_tangent = scale(
            &circle_tangent_at_end(&points[2], &points[1], &points[0]),
            -1.0,
        );
        let end_tangent = circle_tangent_at_end(&points[m - 3], &points[m - 2], &points[m - 1]);
        Ok(CurveArc {
            start_curvature: circumcurvature4(&points[0], &points[1], &points[2]),
            end_curvature: circumcurvature4(&points[m - 3], &points[m - 2], &points[m - 1]),
            start_tangent,
            end_tangent,
            points,
        })
    }

    pub fn start_point(&self) -> &Vec4 {
        &self.points[0]
    }

    pub fn end_point(&self) -> &Vec4 {
        self.points.last().expect("arcs are nonempty")
    }
}

/// Closed curve produced by joining two arcs.
#[derive(Clone, Debug)]
pub struct CurveProduct {
    /// Closed polyline at equal arclength spacing.
    pub points: Vec<Vec4>,
    /// Geodesic curvature at each output vertex, carried over from
    /// circumscribed circles of the stitched source vertices. Resampled
    /// points land on interpolating geodesics, so fitting circles after the
    /// fact would read zero; the estimate has to travel from the sources.
    pub curvatures: Vec<f64>,
    pub length: f64,
    /// Tangent mismatch at the two junctions, `[mu->nu, nu->mu]`.
    pub tangent_residuals: [f64; 2],
    /// Curvature mismatch at the two junctions.
    pub curvature_residuals: [f64; 2],
}

/// Joins the arcs `mu` (running A to B) and `nu` (running B back to A) into
/// a closed curve, enforcing that the ends meet and that the carried end
/// data agrees across both junctions.
pub fn curve_product(mu: &CurveArc, nu: &CurveArc) -> Result<CurveProduct, DeformError> {
    for arc in [mu, nu] {
        if arc.points.len() < 3 {
            return Err(DeformError::ArcTooShort { vertices: arc.points.len() });
        }
    }
    let gap = dist(mu.end_point(), nu.start_point()).max(dist(nu.end_point(), mu.start_point()));
    if gap > ENDPOINT_TOLERANCE {
        return Err(DeformError::EndpointMismatch { gap });
    }
    let tangent_residuals = [
        dist(&mu.end_tangent, &nu.start_tangent),
        dist(&nu.end_tangent, &mu.start_tangent),
    ];
    let curvature_residuals = [
        (mu.end_curvature - nu.start_curvature).abs(),
        (nu.end_curvature - mu.start_curvature).abs(),
    ];
    let tangent_gap = tangent_residuals[0].max(tangent_residuals[1]);
    let curvature_gap = curvature_residuals[0].max(curvature_residuals[1]);
    if tangent_gap > JOIN_TOLERANCE || curvature_gap > JOIN_TOLERANCE {
        return Err(DeformError::NonRegularJoin { tangent_gap, curvature_gap });
    }

    // Stitch the vertex loop, dropping duplicated junction vertices.
    let mut loop_pts: Vec<Vec4> = Vec::with_capacity(mu.points.len() + nu.points.len());
    for p in mu.points.iter().chain(nu.points.iter()) {
        if loop_pts.last().map_or(true, |q| dist(q, p) > 1e-9) {
            loop_pts.push(*p);
        }
    }
    while loop_pts.len() > 3 && dist(&loop_pts[0], loop_pts.last().expect("nonempty")) <= 1e-9 {
        loop_pts.pop();
    }
    let m = loop_pts.len();
    if m < 3 {
        return Err(DeformError::ArcTooShort { vertices: m });
    }

    let kappa: Vec<f64> = (0..m)
        .map(|i| circumcurvature4(&loop_pts[(i + m - 1) % m], &loop_pts[i], &loop_pts[(i + 1) % m]))
        .collect();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let step = acos_clamped(dot(&loop_pts[i], &loop_pts[(i + 1) % m]));
        cum.push(cum[i] + step);
    }
    let length = cum[m];

    let mut points = Vec::with_capacity(m);
    let mut curvatures = Vec::with_capacity(m);
    let mut seg = 0usize;
    for t in 0..m {
        let s = length * t as f64 / m as f64;
        while seg + 1 < m && cum[seg + 1] < s {
            seg += 1;
        }
        let span = (cum[seg + 1] - cum[seg]).max(1e-300);
        let w = ((s - cum[seg]) / span).clamp(0.0, 1.0);
        points.push(slerp4(&loop_pts[seg], &loop_pts[(seg + 1) % m], w));
        curvatures.push(kappa[seg] * (1.0 - w) + kappa[(seg + 1) % m] * w);
    }
    Ok(CurveProduct {
        points,
        curvatures,
        length,
        tangent_residuals,
        curvature_residuals,
    })
}

fn slerp4(a: &Vec4, b: &Vec4, t: f64) -> Vec4 {
    let th = acos_clamped(dot(a, b));
    if th < 1e-12 {
        return *a;
    }
    let s = libm::sin(th);
    let blended = add(
        &scale(a, libm::sin((1.0 - t) * th) / s),
        &scale(b, libm::sin(t * th) / s),
    );
    normalize(&blended)
}

/// Geodesic curvature of the circle through three points of the unit
/// 3-sphere. The circle's affine plane passes through `a`; its distance `d`
/// from the origin gives the curvature `d / sqrt(1 - d^2)`, exactly as for
/// circles of a 2-sphere.
fn circumcurvature4(a: &Vec4, b: &Vec4, c: &Vec4) -> f64 {
    let u = sub(b, a);
    let nu = norm(&u);
    if nu < 1e-300 {
        return 0.0;
    }
    let e1 = scale(&u, 1.0 / nu);
    let w = sub(c, a);
    let w2 = sub(&w, &scale(&e1, dot(&w, &e1)));
    let nw = norm(&w2);
    if nw < 1e-14 {
        return 0.0;
    }
    let e2 = scale(&w2, 1.0 / nw);
    let q = sub(&sub(a, &scale(&e1, dot(a, &e1))), &scale(&e2, dot(a, &e2)));
    let d = norm(&q).clamp(0.0, 1.0);
    let s2 = 1.0 - d * d;
    if s2 <= 0.0 {
        return f64::INFINITY;
    }
    d / libm::sqrt(s2)
}

/// Unit tangent at `c` of the circle through `a`, `b`, `c`, oriented along
/// the travel `a -> b -> c`. Exact for vertices of circle arcs, which is
/// what lets split circles rejoin within fp noise. Falls back to the chord
/// direction for collinear input.
fn circle_tangent_at_end(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    let u = sub(b, a);
    let nu = norm(&u);
    if nu < 1e-300 {
        return normalize(&sub(c, b));
    }
    let e1 = scale(&u, 1.0 / nu);
    let w = sub(c, a);
    let w2 = sub(&w, &scale(&e1, dot(&w, &e1)));
    let nw = norm(&w2);
    if nw < 1e-14 {
        return normalize(&sub(c, b));
    }
    let e2 = scale(&w2, 1.0 / nw);
    // In-plane coordinates with origin at `a`: A = (0,0), B, C.
    let bb = [dot(&u, &e1), 0.0];
    let cc = [dot(&w, &e1), nw];
    // Circumcenter of A, B, C from the perpendicular bisector equations.
    let ox = bb[0] / 2.0;
    let oy = (cc[0] * cc[0] + cc[1] * cc[1] - cc[0] * bb[0]) / (2.0 * cc[1]);
    let radial = [cc[0] - ox, cc[1] - oy];
    let mut t2 = [-radial[1], radial[0]];
    // Orient along increasing travel, i.e. agreeing with B -> C.
    if t2[0] * (cc[0] - bb[0]) + t2[1] * (cc[1] - bb[1]) < 0.0 {
        t2 = [-t2[0], -t2[1]];
    }
    normalize(&add(&scale(&e1, t2[0]), &scale(&e2, t2[1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SpherePoint;
    use crate::vec4::mat_vec;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn plane_rotation(theta: f64) -> Congruence {
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        Congruence::from_matrix([
            [c, -s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .expect("rotation block is orthogonal")
    }

    #[test]
    fn identity_extension_is_exact() {
        let f = canonical_extend(SphereMap::Identity);
        let mut rng = rng_from_seed(1);
        for _ in 0..64 {
            let x = annulus_point(&mut rng);
            assert_eq!(f.eval(&x), x);
            let j = f.jets(&x);
            for (i, c) in j.iter().enumerate() {
                assert_eq!(c.v, x[i]);
                for l in 0..4 {
                    assert_eq!(c.g[l], if l == i { 1.0 } else { 0.0 });
                    for r in 0..4 {
                        assert_eq!(c.h[l][r], 0.0);
                    }
                }
            }
        }
        assert_eq!(
            holder_seminorm(&f, 0.7, 1_000, 9).unwrap(),
            0.0,
            "identity has constant derivatives"
        );
    }

    #[test]
    fn rotation_extension_is_linear_and_flat() {
        let q = Congruence::random_rotation(&mut rng_from_seed(2));
        let f = canonical_extend(SphereMap::Rotation(q));
        let mut rng = rng_from_seed(3);
        for _ in 0..64 {
            let x = annulus_point(&mut rng);
            assert!(dist(&f.eval(&x), &mat_vec(&q.matrix(), &x)) < 1e-15);
            let j = f.jets(&x);
            for c in &j {
                for row in &c.h {
                    for &e in row {
                        assert_eq!(e, 0.0, "linear map has exactly zero second derivatives");
                    }
                }
            }
        }
        assert_eq!(holder_seminorm(&f, 1.0, 1_000, 5).unwrap(), 0.0);
    }

    #[test]
    fn extension_is_radially_homogeneous() {
        let maps = [
            SphereMap::Identity,
            SphereMap::Twist { rate: 0.9 },
            SphereMap::NormalBump { amplitude: 0.2 },
            SphereMap::Composed(
                Box::new(SphereMap::Twist { rate: 0.4 }),
                Box::new(SphereMap::NormalBump { amplitude: 0.1 }),
            ),
        ];
        let mut rng = rng_from_seed(4);
        for map in &maps {
            let f = canonical_extend(map.clone());
            for _ in 0..2_500 {
                let v = random_sphere_point(&mut rng).coords();
                let r = rng.gen_range(ANNULUS_INNER..ANNULUS_OUTER);
                let on_sphere = map.apply(&v);
                assert!(dist(&f.eval(&v), &on_sphere) < 1e-14, "F restricts to xi");
                let scaled = f.eval(&scale(&v, r));
                assert!(
                    dist(&scaled, &scale(&on_sphere, r)) < 1e-12,
                    "F(r v) = r xi(v)"
                );
            }
        }
    }

    #[test]
    fn composition_extends_pointwise() {
        let pairs = [
            (SphereMap::Twist { rate: 0.7 }, SphereMap::NormalBump { amplitude: 0.15 }),
            (
                SphereMap::Rotation(Congruence::random_rotation(&mut rng_from_seed(6))),
                SphereMap::Twist { rate: -0.3 },
            ),
        ];
        let mut rng = rng_from_seed(7);
        for (outer, inner) in pairs {
            let composed = canonical_extend(SphereMap::Composed(
                Box::new(outer.clone()),
                Box::new(inner.clone()),
            ));
            let fo = canonical_extend(outer);
            let fi = canonical_extend(inner);
            for _ in 0..200 {
                let x = annulus_point(&mut rng);
                let chained = fo.eval(&fi.eval(&x));
                assert!(dist(&composed.eval(&x), &chained) < 1e-12);
            }
        }
    }

    #[test]
    fn identity_norm_report() {
        let report = c2alpha_norm(&canonical_extend(SphereMap::Identity), 0.5, 10_000, 1_000, 42)
            .unwrap();
        assert!(report.sup_term > 1.999 && report.sup_term < 2.0, "sup |x| nears the outer radius");
        assert_eq!(report.grad_term, 1.0);
        assert_eq!(report.hess_term, 0.0);
        assert_eq!(report.seminorm_term, 0.0);
        assert_eq!(report.total, report.sup_term + 1.0);

        let zero = c2alpha_norm(
            &canonical_extend(SphereMap::Identity).minus_identity(),
            0.5,
            10_000,
            1_000,
            42,
        )
        .unwrap();
        assert_eq!(zero.sup_term, 0.0);
        assert_eq!(zero.grad_term, 0.0);
        assert_eq!(zero.hess_term, 0.0);
        assert_eq!(zero.seminorm_term, 0.0);
        assert_eq!(zero.total, 0.0);
    }

    // Hand-derived derivatives of the twist extension, written against the
    // complex form f = exp(i beta) (x1 + i x2) with beta = rate * x4 / |x|.
    // They are the oracle for the sampled seminorm: beta is homogeneous of
    // degree zero, f of degree one, so the third derivatives scale as
    // 1/r^2 and their supremum over the annulus is 4 times the supremum
    // over the unit sphere.
    mod twist_oracle {
        use super::super::Vec4;

        pub fn beta_derivs(rate: f64, x: &Vec4) -> ([f64; 4], [[f64; 4]; 4], [[[f64; 4]; 4]; 4]) {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            let r = libm::sqrt(r2);
            let (r3, r5, r7) = (r * r2, r * r2 * r2, r * r2 * r2 * r2);
            let del = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
            let mut g = [0.0; 4];
            for j in 0..4 {
                g[j] = rate * (del(j, 3) / r - x[3] * x[j] / r3);
            }
            let mut h = [[0.0; 4]; 4];
            for j in 0..4 {
                for k in 0..4 {
                    h[j][k] = rate
                        * (-del(j, 3) * x[k] / r3 - del(k, 3) * x[j] / r3 - del(j, k) * x[3] / r3
                            + 3.0 * x[3] * x[j] * x[k] / r5);
                }
            }
            let mut t = [[[0.0; 4]; 4]; 4];
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        t[j][k][l] = rate
                            * (-(del(j, 3) * del(k, l) + del(k, 3) * del(j, l) + del(j, k) * del(l, 3)) / r3
                                + 3.0
                                    * (del(j, 3) * x[k] * x[l]
                                        + del(k, 3) * x[j] * x[l]
                                        + del(j, k) * x[3] * x[l]
                                        + del(l, 3) * x[j] * x[k]
                                        + del(j, l) * x[3] * x[k]
                                        + del(k, l) * x[3] * x[j])
                                    / r5
                                - 15.0 * x[3] * x[j] * x[k] * x[l] / r7);
                    }
                }
            }
            (g, h, t)
        }

        fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
            (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
        }

        /// Second partials of (F1, F2) as complex numbers f_jk.
        pub fn second(rate: f64, x: &Vec4) -> [[(f64, f64); 4]; 4] {
            let r = libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
            let beta = rate * x[3] / r;
            let e = (libm::cos(beta), libm::sin(beta));
            let z = (x[0], x[1]);
            let zd = [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0)];
            let (g, h, _) = beta_derivs(rate, x);
            let mut out = [[(0.0, 0.0); 4]; 4];
            for j in 0..4 {
                for k in 0..4 {
                    // i*(h_jk z + g_j z_k + g_k z_j) - g_j g_k z
                    let lin = (
                        h[j][k] * z.0 + g[j] * zd[k].0 + g[k] * zd[j].0,
                        h[j][k] * z.1 + g[j] * zd[k].1 + g[k] * zd[j].1,
                    );
                    let inner = (-lin.1 - g[j] * g[k] * z.0, lin.0 - g[j] * g[k] * z.1);
                    out[j][k] = cmul(e, inner);
                }
            }
            out
        }

        /// Third partials of (F1, F2) as complex numbers f_jkl.
        pub fn third(rate: f64, x: &Vec4) -> [[[(f64, f64); 4]; 4]; 4] {
            let r = libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
            let beta = rate * x[3] / r;
            let e = (libm::cos(beta), libm::sin(beta));
            let z = (x[0], x[1]);
            let zd = [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0), (0.0, 0.0)];
            let (g, h, t) = beta_derivs(rate, x);
            let mut out = [[[(0.0, 0.0); 4]; 4]; 4];
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        // Real combination multiplied by i:
                        //   t_jkl z + h_jk z_l + h_jl z_k + h_kl z_j
                        let a = (
                            t[j][k][l] * z.0 + h[j][k] * zd[l].0 + h[j][l] * zd[k].0 + h[k][l] * zd[j].0,
                            t[j][k][l] * z.1 + h[j][k] * zd[l].1 + h[j][l] * zd[k].1 + h[k][l] * zd[j].1,
                        );
                        // Real combination with plain minus sign:
                        //   (g_l h_jk + g_k h_jl + g_j h_kl) z
                        // + g_j g_k z_l + g_j g_l z_k + g_k g_l z_j
                        let bsum = g[l] * h[j][k] + g[k] * h[j][l] + g[j] * h[k][l];
                        let b = (
                            bsum * z.0 + g[j] * g[k] * zd[l].0 + g[j] * g[l] * zd[k].0 + g[k] * g[l] * zd[j].0,
                            bsum * z.1 + g[j] * g[k] * zd[l].1 + g[j] * g[l] * zd[k].1 + g[k] * g[l] * zd[j].1,
                        );
                        // Imaginary combination: -i g_j g_k g_l z.
                        let c = g[j] * g[k] * g[l];
                        let inner = (-a.1 - b.0 + c * z.1, a.0 - b.1 - c * z.0);
                        out[j][k][l] = cmul(e, inner);
                    }
                }
            }
            out
        }
    }

    #[test]
    fn twist_seminorm_matches_lipschitz_oracle() {
        let rate = 0.8;

        // Cross-check the hand-derived second partials against the jets
        // before trusting the third-derivative formulas built on them.
        let f = canonical_extend(SphereMap::Twist { rate });
        let mut rng = rng_from_seed(0x0bac);
        for _ in 0..8 {
            let x = annulus_point(&mut rng);
            let jets = f.jets(&x);
            let hand = twist_oracle::second(rate, &x);
            for j in 0..4 {
                for k in 0..4 {
                    assert!((jets[0].h[j][k] - hand[j][k].0).abs() < 1e-9);
                    assert!((jets[1].h[j][k] - hand[j][k].1).abs() < 1e-9);
                    assert!(jets[2].h[j][k].abs() < 1e-12);
                    assert!(jets[3].h[j][k].abs() < 1e-12);
                }
            }
        }

        // Lipschitz bound of the second-derivative fields: the operator norm
        // of the third-derivative matrix (rows F1, F2), maximized over the
        // sphere, times the 1/r^2 homogeneity factor at the inner radius.
        let mut sphere_max = 0.0f64;
        for _ in 0..200_000 {
            let u = random_sphere_point(&mut rng).coords();
            let t = twist_oracle::third(rate, &u);
            for j in 0..4 {
                for k in 0..4 {
                    let (mut m11, mut m22, mut m12) = (0.0, 0.0, 0.0);
                    for l in 0..4 {
                        let (re, im) = t[j][k][l];
                        m11 += re * re;
                        m22 += im * im;
                        m12 += re * im;
                    }
                    let mid = 0.5 * (m11 + m22);
                    let disc = libm::sqrt(0.25 * (m11 - m22) * (m11 - m22) + m12 * m12);
                    sphere_max = sphere_max.max(libm::sqrt(mid + disc));
                }
            }
        }
        let lipschitz = sphere_max / (ANNULUS_INNER * ANNULUS_INNER);

        let estimate = holder_seminorm(&f, 1.0, 20_000, 0x11b5).unwrap();
        assert!(
            estimate <= lipschitz * (1.0 + 1e-9),
            "sampled ratio {estimate} exceeded the derivative bound {lipschitz}"
        );
        assert!(
            estimate >= 0.5 * lipschitz,
            "sampled ratio {estimate} too far below the derivative bound {lipschitz}"
        );
    }

    #[test]
    fn scaled_rotation_norm_saturates() {
        let map = AnnulusMap::ScaledRotation {
            rotation: Congruence::random_rotation(&mut rng_from_seed(77)),
            amplitude: 1e-3,
        }
        .minus_identity();
        let base = c2alpha_norm(&map, 0.5, 20_000, 2_000, 0xfeed).unwrap();
        let oracle = c2alpha_norm(&map, 0.5, 1_000_000, 100_000, 0xfeed).unwrap();
        assert!(base.total <= oracle.total, "nested budgets are monotone");
        assert!(
            oracle.total - base.total <= 0.1 * oracle.total,
            "short run {} vs oracle {}",
            base.total,
            oracle.total
        );
    }

    #[test]
    fn norm_estimates_monotone_in_budget() {
        let f = canonical_extend(SphereMap::Twist { rate: 0.8 }).minus_identity();
        let small = c2alpha_norm(&f, 1.0, 10_000, 1_000, 0xabc).unwrap();
        let large = c2alpha_norm(&f, 1.0, 40_000, 4_000, 0xabc).unwrap();
        assert!(large.sup_term >= small.sup_term);
        assert!(large.grad_term >= small.grad_term);
        assert!(large.hess_term >= small.hess_term);
        assert!(large.seminorm_term >= small.seminorm_term);
        assert!(large.total >= small.total);
    }

    #[test]
    fn norm_is_deterministic_and_seed_sensitive() {
        let f = canonical_extend(SphereMap::NormalBump { amplitude: 0.1 }).minus_identity();
        let a = c2alpha_norm(&f, 0.5, 10_000, 1_000, 21).unwrap();
        let b = c2alpha_norm(&f, 0.5, 10_000, 1_000, 21).unwrap();
        assert_eq!(a, b);
        let c = c2alpha_norm(&f, 0.5, 10_000, 1_000, 22).unwrap();
        assert!(a.total != c.total);
    }

    #[test]
    fn budget_and_exponent_validation() {
        let f = canonical_extend(SphereMap::Identity);
        assert_eq!(
            holder_seminorm(&f, 0.0, 1_000, 1),
            Err(DeformError::BadExponent { alpha: 0.0 })
        );
        assert_eq!(
            holder_seminorm(&f, 1.5, 1_000, 1),
            Err(DeformError::BadExponent { alpha: 1.5 })
        );
        assert_eq!(
            holder_seminorm(&f, 0.5, 999, 1),
            Err(DeformError::BudgetTooSmall { got: 999, floor: MIN_HOLDER_PAIRS })
        );
        assert_eq!(
            c2alpha_norm(&f, 0.5, 9_999, 1_000, 1),
            Err(DeformError::BudgetTooSmall { got: 9_999, floor: MIN_NORM_SAMPLES })
        );
    }

    #[test]
    fn non_finite_derivatives_name_the_sample() {
        let f = canonical_extend(SphereMap::Twist { rate: f64::INFINITY });
        match holder_seminorm(&f, 1.0, 1_000, 3) {
            Err(DeformError::NonFiniteDerivative { sample }) => {
                assert!(sample.iter().all(|x| x.is_finite()), "the sample itself is a real point");
            }
            other => panic!("expected a non-finite derivative error, got {other:?}"),
        }
    }

    #[test]
    fn tau_of_identity_is_zero() {
        let x = canonical_extend(SphereMap::Identity);
        assert_eq!(tau(&x, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn tau_is_exactly_symmetric() {
        for (x, x_inv) in [
            (
                canonical_extend(SphereMap::Twist { rate: 0.3 }),
                canonical_extend(SphereMap::Twist { rate: -0.3 }),
            ),
            (
                canonical_extend(SphereMap::NormalBump { amplitude: 0.2 }),
                canonical_extend(SphereMap::NormalBump { amplitude: -0.2 }),
            ),
        ] {
            let t = tau(&x, 0.5).unwrap();
            assert!(t > 0.0);
            assert_eq!(t, tau(&x_inv, 0.5).unwrap());
        }
    }

    #[test]
    fn tau_monotone_in_rotation_angle() {
        let mut last = 0.0;
        for theta in [1e-3, 1e-2, 1e-1] {
            let x = canonical_extend(SphereMap::Rotation(plane_rotation(theta)));
            let t = tau(&x, 0.5).unwrap();
            assert!(t > last, "tau({theta}) = {t} should exceed {last}");
            last = t;
        }
    }

    #[test]
    fn tau_error_paths() {
        let general = AnnulusMap::ScaledRotation {
            rotation: plane_rotation(0.3),
            amplitude: 0.1,
        };
        assert_eq!(tau(&general, 0.5), Err(DeformError::NotExtension));
        let singular = canonical_extend(SphereMap::NormalBump { amplitude: FRAC_PI_4 });
        assert_eq!(tau(&singular, 0.5), Err(DeformError::InverseUnavailable));
    }

    #[test]
    fn minimality_residual_vanishes_for_congruences() {
        for n in [1, 2, 4, 8] {
            let r = minimality_residual_at_lattice(&SphereMap::Identity, n).unwrap();
            assert!(r < 1e-9, "identity residual {r} at n = {n}");
        }
        let q = SphereMap::Rotation(Congruence::random_rotation(&mut rng_from_seed(5)));
        assert!(minimality_residual_at_lattice(&q, 4).unwrap() < 1e-9);

        // Post-composing with a congruence leaves the residual unchanged.
        let bump = SphereMap::NormalBump { amplitude: 2e-3 };
        let moved = SphereMap::Composed(
            Box::new(SphereMap::Rotation(Congruence::random_rotation(&mut rng_from_seed(15)))),
            Box::new(bump.clone()),
        );
        let plain = minimality_residual_at_lattice(&bump, 4).unwrap();
        let rotated = minimality_residual_at_lattice(&moved, 4).unwrap();
        assert!((plain - rotated).abs() <= 1e-8);
    }

    #[test]
    fn minimality_residual_detects_normal_bump() {
        let eps = 1e-3;
        let bump = SphereMap::NormalBump { amplitude: eps };
        let res = minimality_residual_at_lattice(&bump, 4).unwrap();
        assert!(res > 0.0 && res <= 10.0 * eps, "residual {res}");
        // The bump carries the square torus onto the tube at pi/4 + eps,
        // whose mean curvature is (tan - cot)/2 of that radius, about 2 eps.
        let expected = 0.5
            * (libm::tan(FRAC_PI_4 + eps) - 1.0 / libm::tan(FRAC_PI_4 + eps));
        assert!((res - expected.abs()).abs() < 1e-9);

        // Independent derivative path: finite differences of the pushed
        // positions at a lattice point, run through the same frame formula.
        let mut fd_res = 0.0f64;
        let h = 1e-4;
        for j in 0..4 {
            for k in 0..4 {
                let (u, v) = (FRAC_PI_2 * j as f64, FRAC_PI_2 * k as f64);
                let pos = |du: f64, dv: f64| -> Vec4 {
                    let p = Surface::Clifford.position_at(u + du, v + dv);
                    bump.apply(&p)
                };
                let center = pos(0.0, 0.0);
                let (pu, mu_) = (pos(h, 0.0), pos(-h, 0.0));
                let (pv, mv) = (pos(0.0, h), pos(0.0, -h));
                let (pp, pm, mp, mm) = (pos(h, h), pos(h, -h), pos(-h, h), pos(-h, -h));
                let mut jets = [Jet4::constant(0.0); 4];
                let mut jets2: [crate::jet::Jet2; 4] = [crate::jet::Jet2::constant(0.0); 4];
                let _ = &mut jets;
                for i in 0..4 {
                    jets2[i].v = center[i];
                    jets2[i].g[0] = (pu[i] - mu_[i]) / (2.0 * h);
                    jets2[i].g[1] = (pv[i] - mv[i]) / (2.0 * h);
                    jets2[i].h[0][0] = (pu[i] - 2.0 * center[i] + mu_[i]) / (h * h);
                    jets2[i].h[1][1] = (pv[i] - 2.0 * center[i] + mv[i]) / (h * h);
                    let mixed = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h);
                    jets2[i].h[0][1] = mixed;
                    jets2[i].h[1][0] = mixed;
                }
                fd_res = fd_res.max(geometry_from_jet(&jets2).mean.abs());
            }
        }
        assert!((res - fd_res).abs() < 1e-5, "jets {res} vs finite differences {fd_res}");
    }

    #[test]
    fn minimality_residual_error_paths() {
        assert_eq!(
            minimality_residual_at_lattice(&SphereMap::Identity, 0),
            Err(DeformError::EmptyLattice)
        );
        match minimality_residual_at_lattice(&SphereMap::NormalBump { amplitude: FRAC_PI_4 }, 2) {
            Err(DeformError::DegeneratePushforward { .. }) => {}
            other => panic!("collapsed pushforward should be rejected, got {other:?}"),
        }
    }

    /// Vertices of the coordinate circle `u -> c (cos u, sin u, cos v0, sin v0)`
    /// for `u` in `[t0, t1]`, inclusive.
    fn coordinate_circle_arc(v0: f64, t0: f64, t1: f64, count: usize) -> Vec<Vec4> {
        let c = libm::sqrt(0.5);
        (0..count)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (count - 1) as f64;
                [c * libm::cos(t), c * libm::sin(t), c * libm::cos(v0), c * libm::sin(v0)]
            })
            .collect()
    }

    #[test]
    fn curve_product_rejoins_split_circle() {
        let v0 = 0.9;
        let mu = CurveArc::from_points(coordinate_circle_arc(v0, 0.0, PI, 513)).unwrap();
        let nu = CurveArc::from_points(coordinate_circle_arc(v0, PI, 2.0 * PI, 513)).unwrap();
        assert!((mu.end_curvature - 1.0).abs() < 1e-9, "coordinate circles have curvature 1");

        let product = curve_product(&mu, &nu).unwrap();
        assert!((product.length - PI * libm::sqrt(2.0)).abs() < 1e-4);
        assert!(product.tangent_residuals.iter().all(|r| *r < 1e-9));
        assert!(product.curvature_residuals.iter().all(|r| *r < 1e-9));
        for k in &product.curvatures {
            assert!((k - 1.0).abs() < 1e-9, "curvature profile is constant 1, got {k}");
        }
        let c = libm::sqrt(0.5);
        for p in &product.points {
            assert!((p[0] * p[0] + p[1] * p[1] - 0.5).abs() < 1e-5);
            assert!((p[2] - c * libm::cos(v0)).abs() < 1e-5);
            assert!((p[3] - c * libm::sin(v0)).abs() < 1e-5);
        }
    }

    /// Arc of the circle of geodesic radius `rho` through the two given
    /// points, traversed from `from` to `to`. Panics if the chord cannot be
    /// realized at that radius.
    fn circle_arc_between(from: &Vec4, to: &Vec4, rho: f64, count: usize) -> Vec<Vec4> {
        let (sr, cr) = (libm::sin(rho), libm::cos(rho));
        let chord2 = dist(from, to) * dist(from, to);
        // |p(0) - p(T)|^2 = 2 sin^2(rho) (1 - cos T).
        let cos_t = 1.0 - chord2 / (2.0 * sr * sr);
        assert!(cos_t.abs() <= 1.0, "chord unreachable at radius {rho}");
        let theta = acos_clamped(cos_t);
        let e = normalize(&add(from, to));
        let alpha = dot(from, &e);
        // Center axis orthogonal to the chord direction, tilted out of the
        // span of the endpoints.
        let g = {
            let frame = crate::sphere::complete_frame(&[*from, *to]);
            frame[2]
        };
        let m1 = cr / alpha;
        assert!(m1.abs() < 1.0, "no unit center axis at radius {rho}");
        let m = add(&scale(&e, m1), &scale(&g, libm::sqrt(1.0 - m1 * m1)));
        let a = scale(&sub(from, &scale(&m, cr)), 1.0 / sr);
        let b = scale(
            &sub(&sub(to, &scale(&m, cr)), &scale(&a, sr * libm::cos(theta))),
            1.0 / (sr * libm::sin(theta)),
        );
        (0..count)
            .map(|i| {
                let t = theta * i as f64 / (count - 1) as f64;
                add(&scale(&m, cr), &add(&scale(&a, sr * libm::cos(t)), &scale(&b, sr * libm::sin(t))))
            })
            .collect()
    }

    #[test]
    fn curve_product_rejects_curvature_jump() {
        // Half of a radius pi/4 circle, then back along an arc of a radius
        // pi/3 circle through the same endpoints: a genuine curvature jump
        // of 1 - cot(pi/3).
        let mu = CurveArc::from_points(coordinate_circle_arc(0.9, 0.0, PI, 257)).unwrap();
        let back = circle_arc_between(mu.end_point(), mu.start_point(), PI / 3.0, 257);
        let nu = CurveArc::from_points(back).unwrap();
        match curve_product(&mu, &nu) {
            Err(DeformError::NonRegularJoin { curvature_gap, .. }) => {
                let expected = 1.0 - 1.0 / libm::tan(PI / 3.0);
                assert!(
                    (curvature_gap - expected).abs() < 1e-3,
                    "curvature jump {curvature_gap} vs expected {expected}"
                );
            }
            other => panic!("expected a non-regular join, got {other:?}"),
        }
    }

    #[test]
    fn curve_product_rejects_endpoint_mismatch() {
        let mu = CurveArc::from_points(coordinate_circle_arc(0.9, 0.0, PI, 129)).unwrap();
        let mut shifted = coordinate_circle_arc(0.9, PI, 2.0 * PI, 129);
        let q = plane_rotation(1e-5);
        for p in &mut shifted {
            *p = q.apply_vec(p);
        }
        let nu = CurveArc::from_points(shifted).unwrap();
        match curve_product(&mu, &nu) {
            Err(DeformError::EndpointMismatch { gap }) => {
                assert!(gap > 1e-8 && gap < 1e-4);
            }
            other => panic!("expected an endpoint mismatch, got {other:?}"),
        }
    }

    #[test]
    fn arcs_need_three_vertices() {
        let two = coordinate_circle_arc(0.9, 0.0, 0.1, 2);
        assert_eq!(
            CurveArc::from_points(two).unwrap_err(),
            DeformError::ArcTooShort { vertices: 2 }
        );
    }

    /// Quintic Hermite basis on [0, 1] against value, velocity, and
    /// acceleration at both ends.
    fn quintic(t: f64, p0: f64, v0: f64, a0: f64, p1: f64, v1: f64, a1: f64) -> f64 {
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t2 * t2, t2 * t3);
        p0 * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
            + v0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
            + a0 * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
            + p1 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)
            + v1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
            + a1 * 0.5 * (t3 - 2.0 * t4 + t5)
    }

    /// Value, first, and second derivative at the last of three samples of a
    /// quadratic through them (Newton form).
    fn quadratic_end_jets(s: &[f64; 3], q: &[[f64; 3]; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let mut val = [0.0; 3];
        let mut der = [0.0; 3];
        let mut sec = [0.0; 3];
        for c in 0..3 {
            let d01 = (q[1][c] - q[0][c]) / (s[1] - s[0]);
            let d12 = (q[2][c] - q[1][c]) / (s[2] - s[1]);
            let d012 = (d12 - d01) / (s[2] - s[0]);
            val[c] = q[2][c];
            der[c] = d12 + (s[2] - s[1]) * d012;
            sec[c] = 2.0 * d012;
        }
        (val, der, sec)
    }

    fn stereo_chart(pole: &SpherePoint, p: &Vec4) -> [f64; 3] {
        crate::sphere::stereographic_project(pole, &SpherePoint::new(*p).unwrap()).unwrap()
    }

    fn stereo_unchart(pole: &SpherePoint, y: &[f64; 3]) -> Vec4 {
        let basis = crate::sphere::complete_frame(&[pole.coords()]);
        let n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let mut x = scale(&pole.coords(), (n2 - 1.0) / (n2 + 1.0));
        for i in 0..3 {
            x = add(&x, &scale(&basis[i + 1], 2.0 * y[i] / (n2 + 1.0)));
        }
        normalize(&x)
    }

    #[test]
    fn curve_product_bridges_truncated_slice() {
        // Trace a transversal slice of the square torus, drop a sixth of it,
        // and close the gap with a quintic bridge fitted in a stereographic
        // chart, clamping the bridge's end data to the truncated arc's.
        let pole = SpherePoint::new([0.0, 1.0, 0.0, 0.0]).unwrap();
        let eq = crate::sphere::Equator::new(pole);
        let report = crate::intersection::classify(&Surface::Clifford, &eq, 96).unwrap();
        let original = &report.curves[0];
        let m = original.points.len();
        let keep = m - m / 6;
        let mu = CurveArc::from_points(original.points[..keep].to_vec()).unwrap();

        // End jets of the truncated arc in the chart, from its last and
        // first three vertices.
        let chart = |p: &Vec4| stereo_chart(&pole, p);
        let ends: Vec<[f64; 3]> = mu.points[keep - 3..].iter().map(|p| chart(p)).collect();
        let starts: Vec<[f64; 3]> = mu.points[..3].iter().map(|p| chart(p)).collect();
        let arc_s = |pts: &[[f64; 3]]| -> [f64; 3] {
            let d1 = libm::sqrt(
                (pts[1][0] - pts[0][0]).powi(2) + (pts[1][1] - pts[0][1]).powi(2) + (pts[1][2] - pts[0][2]).powi(2),
            );
            let d2 = libm::sqrt(
                (pts[2][0] - pts[1][0]).powi(2) + (pts[2][1] - pts[1][1]).powi(2) + (pts[2][2] - pts[1][2]).powi(2),
            );
            [0.0, d1, d1 + d2]
        };
        let qe: [[f64; 3]; 3] = [ends[0], ends[1], ends[2]];
        let (p_out, v_out, a_out) = quadratic_end_jets(&arc_s(&ends), &qe);
        let rev: [[f64; 3]; 3] = [starts[2], starts[1], starts[0]];
        let (p_in, v_in_rev, a_in) = quadratic_end_jets(&arc_s(&rev), &rev);
        let v_in = [-v_in_rev[0], -v_in_rev[1], -v_in_rev[2]];

        // Bridge scale: chart distance between the cut ends.
        let gap = libm::sqrt(
            (p_in[0] - p_out[0]).powi(2) + (p_in[1] - p_out[1]).powi(2) + (p_in[2] - p_out[2]).powi(2),
        );
        let count = 64;
        let bridge: Vec<Vec4> = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                let mut y = [0.0; 3];
                for c in 0..3 {
                    y[c] = quintic(
                        t,
                        p_out[c],
                        v_out[c] * gap,
                        a_out[c] * gap * gap,
                        p_in[c],
                        v_in[c] * gap,
                        a_in[c] * gap * gap,
                    );
                }
                stereo_unchart(&pole, &y)
            })
            .collect();
        let nu = CurveArc {
            points: bridge,
            start_tangent: mu.end_tangent,
            end_tangent: mu.start_tangent,
            start_curvature: mu.end_curvature,
            end_curvature: mu.start_curvature,
        };

        let product = curve_product(&mu, &nu).unwrap();
        let ceiling = 2.0 * original.max_curvature();
        let worst = product.curvatures.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            worst <= ceiling,
            "bridged curve curvature {worst} above twice the original {ceiling}"
        );
        assert!(product.length > 0.8 * original.length() && product.length < 1.2 * original.length());

        // Equal arclength spacing: no output gap strays far from the mean.
        let n = product.points.len();
        let mean = product.length / n as f64;
        for i in 0..n {
            let step = acos_clamped(dot(&product.points[i], &product.points[(i + 1) % n]));
            assert!(step < 2.0 * mean, "resampling left an oversized gap");
        }
    }
}
