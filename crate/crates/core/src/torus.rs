//! Torus immersions in the 3-sphere and their differential geometry.
//!
//! Every surface here is a doubly periodic map from the square torus
//! `[0, 2pi)^2` into the unit sphere of R^4. Positions are evaluated in
//! plain floats or in jets through the same generic code path, so first and
//! second derivatives are exact to machine precision rather than finite
//! differences.
//!
//! The unit normal is `normalize(cross4(X, X_u, X_v))`; with that choice the
//! square torus has principal curvatures +1 and -1 and the tube of radius
//! `r` has mean curvature `(tan r - cot r) / 2`.

use crate::jet::{uv_vars, Jet2, Real};
use crate::sphere::{Congruence, Equator, GeodesicCircle, SpherePoint};
use crate::vec4::{cross4_g, dot, normalize, normalize_g, Vec4};
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;

/// Smallest metric determinant accepted by the immersion check.
pub const IMMERSION_DET_FLOOR: f64 = 1e-6;
/// Grid used to certify that a perturbed surface is still immersed.
const IMMERSION_GRID: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TorusError {
    /// Tube radius outside the open interval `(0, pi/2)`.
    RadiusOutOfRange { radius: f64 },
    /// Cyclide profile needs `0 < minor < major`.
    BadProfile { major: f64, minor: f64 },
    /// Normal perturbations of already perturbed surfaces are not supported.
    NestedPerturbation,
    /// The perturbed map stopped being an immersion near `(u, v)`.
    NotImmersed { u: f64, v: f64, det: f64 },
}

impl fmt::Display for TorusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusError::RadiusOutOfRange { radius } => {
                write!(f, "tube radius {radius} outside (0, pi/2)")
            }
            TorusError::BadProfile { major, minor } => {
                write!(f, "cyclide profile needs 0 < minor < major, got {minor}, {major}")
            }
            TorusError::NestedPerturbation => {
                write!(f, "cannot perturb an already perturbed surface")
            }
            TorusError::NotImmersed { u, v, det } => {
                write!(f, "perturbation degenerates near (u, v) = ({u}, {v}): metric det {det}")
            }
        }
    }
}

/// One Fourier mode of a normal bump: `amplitude * cos(m u + k v + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpTerm {
    pub m: i32,
    pub k: i32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Doubly periodic scalar field used as a geodesic displacement along the
/// surface normal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bump {
    pub terms: Vec<BumpTerm>,
}

impl Bump {
    pub fn new(terms: Vec<BumpTerm>) -> Self {
        Bump { terms }
    }

    pub fn eval_g<R: Real>(&self, u: R, v: R) -> R {
        let mut acc = R::constant(0.0);
        for t in &self.terms {
            let arg = u * R::constant(t.m as f64)
                + v * R::constant(t.k as f64)
                + R::constant(t.phase);
            acc = acc + arg.cos() * R::constant(t.amplitude);
        }
        acc
    }

    /// Largest possible magnitude: the sum of |amplitude|.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }
}

/// A torus immersed in the unit 3-sphere.
#[derive(Clone, Debug)]
pub enum Surface {
    /// `(sqrt2/2) (cos u, sin u, cos v, sin v)`: the minimal square torus.
    Clifford,
    /// `(cos r cos u, cos r sin u, sin r cos v, sin r sin v)`.
    Homogeneous { radius: f64 },
    /// Inverse stereographic image of the round torus of revolution in R^3
    /// with radii `major`, `minor`, lifted by `offset` along its axis.
    Cyclide { major: f64, minor: f64, offset: f64 },
    /// A rigid motion of a base surface.
    Rotated { base: Box<Surface>, motion: Congruence },
    /// Geodesic displacement of a base surface along its normal field:
    /// `cos(b) X + sin(b) n` with `b` a [`Bump`].
    Perturbed { base: Box<Surface>, bump: Bump },
}

impl Surface {
    pub fn clifford() -> Surface {
        Surface::Clifford
    }

    pub fn homogeneous(radius: f64) -> Result<Surface, TorusError> {
        if !(radius > 0.0 && radius < PI / 2.0) {
            return Err(TorusError::RadiusOutOfRange { radius });
        }
        Ok(Surface::Homogeneous { radius })
    }

    pub fn cyclide(major: f64, minor: f64, offset: f64) -> Result<Surface, TorusError> {
        if !(minor > 0.0 && minor < major) {
            return Err(TorusError::BadProfile { major, minor });
        }
        Ok(Surface::Cyclide { major, minor, offset })
    }

    pub fn rotated(base: Surface, motion: Congruence) -> Surface {
        Surface::Rotated {
            base: Box::new(base),
            motion,
        }
    }

    fn contains_perturbation(&self) -> bool {
        match self {
            Surface::Perturbed { .. } => true,
            Surface::Rotated { base, .. } => base.contains_perturbation(),
            _ => false,
        }
    }

    /// Displaces `base` along its normals and certifies on a grid that the
    /// result is still an immersion.
    pub fn perturb_normal(base: Surface, bump: Bump) -> Result<Surface, TorusError> {
        if base.contains_perturbation() {
            return Err(TorusError::NestedPerturbation);
        }
        let s = Surface::Perturbed {
            base: Box::new(base),
            bump,
        };
        let n = IMMERSION_GRID;
        for iu in 0..n {
            for iv in 0..n {
                let u = 2.0 * PI * (iu as f64) / (n as f64);
                let v = 2.0 * PI * (iv as f64) / (n as f64);
                let g = s.geometry_at(u, v);
                let det = g.first[0] * g.first[2] - g.first[1] * g.first[1];
                if !(det > IMMERSION_DET_FLOOR) {
                    return Err(TorusError::NotImmersed { u, v, det });
                }
            }
        }
        Ok(s)
    }

    /// Position in the ambient R^4, generic over plain floats and jets.
    pub fn position_g<R: Real>(&self, u: R, v: R) -> [R; 4] {
        match self {
            Surface::Perturbed { base, bump } => {
                let (x, xu, xv) = base.analytic_frame_g(u, v);
                let n = normalize_g(&cross4_g(&x, &xu, &xv));
                let b = bump.eval_g(u, v);
                let (cb, sb) = (b.cos(), b.sin());
                [
                    cb * x[0] + sb * n[0],
                    cb * x[1] + sb * n[1],
                    cb * x[2] + sb * n[2],
                    cb * x[3] + sb * n[3],
                ]
            }
            _ => self.analytic_frame_g(u, v).0,
        }
    }

    /// Position, du-tangent, dv-tangent in closed form. Defined for every
    /// kind except `Perturbed`, whose derivatives only exist through jets.
    fn analytic_frame_g<R: Real>(&self, u: R, v: R) -> ([R; 4], [R; 4], [R; 4]) {
        match self {
            Surface::Clifford => {
                let c = R::constant(core::f64::consts::FRAC_1_SQRT_2);
                let (cu, su) = (u.cos(), u.sin());
                let (cv, sv) = (v.cos(), v.sin());
                let zero = R::constant(0.0);
                (
                    [c * cu, c * su, c * cv, c * sv],
                    [zero - c * su, c * cu, zero, zero],
                    [zero, zero, zero - c * sv, c * cv],
                )
            }
            Surface::Homogeneous { radius } => {
                let cr = R::constant(libm::cos(*radius));
                let sr = R::constant(libm::sin(*radius));
                let (cu, su) = (u.cos(), u.sin());
                let (cv, sv) = (v.cos(), v.sin());
                let zero = R::constant(0.0);
                (
                    [cr * cu, cr * su, sr * cv, sr * sv],
                    [zero - cr * su, cr * cu, zero, zero],
                    [zero, zero, zero - sr * sv, sr * cv],
                )
            }
            Surface::Cyclide { major, minor, offset } => {
                let rr = R::constant(*major);
                let r = R::constant(*minor);
                let c0 = R::constant(*offset);
                let (cu, su) = (u.cos(), u.sin());
                let (cv, sv) = (v.cos(), v.sin());
                let zero = R::constant(0.0);
                let ring = rr + r * cv;
                let y = [ring * cu, ring * su, r * sv + c0];
                let yu = [zero - ring * su, ring * cu, zero];
                let yv = [zero - r * sv * cu, zero - r * sv * su, r * cv];
                let x = inv_stereo(&y);
                let xu = inv_stereo_push(&y, &yu);
                let xv = inv_stereo_push(&y, &yv);
                (x, xu, xv)
            }
            Surface::Rotated { base, motion } => {
                let (x, xu, xv) = base.analytic_frame_g(u, v);
                let m = motion.matrix();
                (apply_mat_g(&m, &x), apply_mat_g(&m, &xu), apply_mat_g(&m, &xv))
            }
            Surface::Perturbed { .. } => {
                unreachable!("perturbed surfaces have no closed-form frame")
            }
        }
    }

    pub fn position_at(&self, u: f64, v: f64) -> Vec4 {
        self.position_g(u, v)
    }

    /// Full pointwise geometry from one jet evaluation.
    pub fn geometry_at(&self, u: f64, v: f64) -> SurfaceGeometry {
        let (ju, jv) = uv_vars(u, v);
        geometry_from_jet(&self.position_g(ju, jv))
    }

    pub fn normal_at(&self, u: f64, v: f64) -> Vec4 {
        self.geometry_at(u, v).normal
    }

    /// Lines of curvature through `(u0, v0)` for the rotationally symmetric
    /// kinds, as explicit circles. `None` when no closed form is available.
    pub fn curvature_line(&self, u0: f64, v0: f64, family: CurvatureFamily) -> Option<GeodesicCircle> {
        match self {
            Surface::Clifford => tube_curvature_line(FRAC_PI_4, u0, v0, family),
            Surface::Homogeneous { radius } => tube_curvature_line(*radius, u0, v0, family),
            Surface::Rotated { base, motion } => {
                let line = base.curvature_line(u0, v0, family)?;
                let eq = motion.apply_equator(&line.equator());
                let center = motion.apply(&line.center());
                GeodesicCircle::new(eq, center, line.radius()).ok()
            }
            _ => None,
        }
    }

    /// Samples an `n_u x n_v` parameter grid with pointwise geometry. Area
    /// weights integrate the bilinearly interpolated metric with the same
    /// 2x2 Gauss rule the Laplace assembly uses, so the mass form of the
    /// all-ones function reproduces `area` to rounding.
    pub fn sample_mesh(&self, n_u: usize, n_v: usize) -> SurfaceMesh {
        assert!(n_u >= 2 && n_v >= 2);
        let mut positions = Vec::with_capacity(n_u * n_v);
        let mut normals = Vec::with_capacity(n_u * n_v);
        let mut mean = Vec::with_capacity(n_u * n_v);
        let mut principal = Vec::with_capacity(n_u * n_v);
        let mut metric = Vec::with_capacity(n_u * n_v);
        let (hu, hv) = (2.0 * PI / n_u as f64, 2.0 * PI / n_v as f64);
        for iu in 0..n_u {
            for iv in 0..n_v {
                let g = self.geometry_at(iu as f64 * hu, iv as f64 * hv);
                positions.push(g.position);
                normals.push(g.normal);
                mean.push(g.mean);
                principal.push((g.k1, g.k2));
                metric.push(g.first);
            }
        }
        let mut vertex_weights = alloc::vec![0.0; n_u * n_v];
        let mut area = 0.0;
        let gauss = gauss_points();
        for iu in 0..n_u {
            for iv in 0..n_v {
                let corners = [
                    (iu % n_u) * n_v + iv % n_v,
                    ((iu + 1) % n_u) * n_v + iv % n_v,
                    (iu % n_u) * n_v + (iv + 1) % n_v,
                    ((iu + 1) % n_u) * n_v + (iv + 1) % n_v,
                ];
                for &(s, t) in &gauss {
                    let phi = bilinear_basis(s, t);
                    let mut g = [0.0f64; 3];
                    for c in 0..4 {
                        for k in 0..3 {
                            g[k] += phi[c] * metric[corners[c]][k];
                        }
                    }
                    let det = g[0] * g[2] - g[1] * g[1];
                    let w = libm::sqrt(det.max(0.0)) * hu * hv * 0.25;
                    area += w;
                    for c in 0..4 {
                        vertex_weights[corners[c]] += phi[c] * w;
                    }
                }
            }
        }
        SurfaceMesh {
            n_u,
            n_v,
            positions,
            normals,
            mean,
            principal,
            metric,
            vertex_weights,
            area,
        }
    }
}

/// Which principal family a line of curvature belongs to: varying `u` or
/// varying `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureFamily {
    AlongU,
    AlongV,
}

fn tube_curvature_line(
    radius: f64,
    u0: f64,
    v0: f64,
    family: CurvatureFamily,
) -> Option<GeodesicCircle> {
    let (pole, center, r) = match family {
        CurvatureFamily::AlongU => (
            [0.0, 0.0, -libm::sin(v0), libm::cos(v0)],
            [0.0, 0.0, libm::cos(v0), libm::sin(v0)],
            PI / 2.0 - radius,
        ),
        CurvatureFamily::AlongV => (
            [-libm::sin(u0), libm::cos(u0), 0.0, 0.0],
            [libm::cos(u0), libm::sin(u0), 0.0, 0.0],
            radius,
        ),
    };
    let eq = Equator::new(SpherePoint::new(pole).ok()?);
    GeodesicCircle::new(eq, SpherePoint::new(center).ok()?, r).ok()
}

/// Parameter points `(pi j / n, pi k / n)` for `0 <= j, k < 2n`: the
/// `4 n^2` marked points of the square torus at scale `n`.
pub fn clifford_lattice(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut pts = Vec::with_capacity(4 * n * n);
    for j in 0..2 * n {
        for k in 0..2 * n {
            pts.push((PI * j as f64 / n as f64, PI * k as f64 / n as f64));
        }
    }
    pts
}

/// Pointwise differential geometry of an immersed torus.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceGeometry {
    pub position: Vec4,
    pub xu: Vec4,
    pub xv: Vec4,
    pub xuu: Vec4,
    pub xuv: Vec4,
    pub xvv: Vec4,
    pub normal: Vec4,
    /// First fundamental form `[E, F, G]`.
    pub first: [f64; 3],
    /// Second fundamental form `[e, f, g]` against [`Self::normal`].
    pub second: [f64; 3],
    /// Principal curvatures, `k1 >= k2`.
    pub k1: f64,
    pub k2: f64,
    pub mean: f64,
    /// Product of the principal curvatures.
    pub extrinsic: f64,
    /// Sectional curvature of the induced metric: `1 + extrinsic`.
    pub intrinsic: f64,
}

/// Pointwise geometry of any immersion into the unit sphere presented as a
/// second-order jet of its position in the two surface parameters.
pub fn geometry_from_jet(p: &[Jet2; 4]) -> SurfaceGeometry {
    let mut position = [0.0; 4];
    let mut xu = [0.0; 4];
    let mut xv = [0.0; 4];
    let mut xuu = [0.0; 4];
    let mut xuv = [0.0; 4];
    let mut xvv = [0.0; 4];
    for i in 0..4 {
        position[i] = p[i].v;
        xu[i] = p[i].g[0];
        xv[i] = p[i].g[1];
        xuu[i] = p[i].h[0][0];
        xuv[i] = p[i].h[0][1];
        xvv[i] = p[i].h[1][1];
    }
    let normal = normalize(&crate::vec4::cross4(&position, &xu, &xv));
    let first = [dot(&xu, &xu), dot(&xu, &xv), dot(&xv, &xv)];
    let second = [dot(&normal, &xuu), dot(&normal, &xuv), dot(&normal, &xvv)];
    let det1 = first[0] * first[2] - first[1] * first[1];
    let mean =
        (second[0] * first[2] - 2.0 * second[1] * first[1] + second[2] * first[0]) / (2.0 * det1);
    let extrinsic = (second[0] * second[2] - second[1] * second[1]) / det1;
    let disc = (mean * mean - extrinsic).max(0.0);
    let root = libm::sqrt(disc);
    SurfaceGeometry {
        position,
        xu,
        xv,
        xuu,
        xuv,
        xvv,
        normal,
        first,
        second,
        k1: mean + root,
        k2: mean - root,
        mean,
        extrinsic,
        intrinsic: 1.0 + extrinsic,
    }
}

/// Grid sample of a surface with lumped area weights.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub n_u: usize,
    pub n_v: usize,
    /// Row-major over `u`: index `iu * n_v + iv`.
    pub positions: Vec<Vec4>,
    pub normals: Vec<Vec4>,
    pub mean: Vec<f64>,
    pub principal: Vec<(f64, f64)>,
    /// First fundamental form `[E, F, G]` per vertex.
    pub metric: Vec<[f64; 3]>,
    pub vertex_weights: Vec<f64>,
    pub area: f64,
}

impl SurfaceMesh {
    pub fn index(&self, iu: usize, iv: usize) -> usize {
        (iu % self.n_u) * self.n_v + (iv % self.n_v)
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.mean.iter().fold(0.0, |m, h| m.max(h.abs()))
    }
}

/// 2x2 Gauss points on the unit cell.
pub(crate) fn gauss_points() -> [(f64, f64); 4] {
    let a = 0.5 - 0.5 / libm::sqrt(3.0);
    let b = 0.5 + 0.5 / libm::sqrt(3.0);
    [(a, a), (b, a), (a, b), (b, b)]
}

/// Bilinear corner basis at `(s, t)`, corner order `00, 10, 01, 11`.
pub(crate) fn bilinear_basis(s: f64, t: f64) -> [f64; 4] {
    [
        (1.0 - s) * (1.0 - t),
        s * (1.0 - t),
        (1.0 - s) * t,
        s * t,
    ]
}

/// Inverse stereographic projection R^3 -> S^3 minus the north pole:
/// `y -> (2y, |y|^2 - 1) / (|y|^2 + 1)`.
fn inv_stereo<R: Real>(y: &[R; 3]) -> [R; 4] {
    let one = R::constant(1.0);
    let two = R::constant(2.0);
    let yy = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let q = yy + one;
    [
        two * y[0] / q,
        two * y[1] / q,
        two * y[2] / q,
        (yy - one) / q,
    ]
}

/// Differential of [`inv_stereo`] at `y` applied to `w`.
fn inv_stereo_push<R: Real>(y: &[R; 3], w: &[R; 3]) -> [R; 4] {
    let one = R::constant(1.0);
    let two = R::constant(2.0);
    let four = R::constant(4.0);
    let yy = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let q = yy + one;
    let s = y[0] * w[0] + y[1] * w[1] + y[2] * w[2];
    [
        (two * w[0] - four * y[0] * s / q) / q,
        (two * w[1] - four * y[1] * s / q) / q,
        (two * w[2] - four * y[2] * s / q) / q,
        four * s / (q * q),
    ]
}

fn apply_mat_g<R: Real>(m: &[[f64; 4]; 4], x: &[R; 4]) -> [R; 4] {
    let mut out = [R::constant(0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] = out[i] + R::constant(m[i][j]) * x[j];
        }
    }
    out
}

// Shared by the intersection machinery: height of the surface over the
// hyperplane of a pole, with exact derivatives.
pub(crate) fn height_jet(surface: &Surface, pole: &Vec4, u: f64, v: f64) -> crate::jet::Jet2 {
    let (ju, jv) = uv_vars(u, v);
    let p = surface.position_g(ju, jv);
    let mut acc = crate::jet::Jet2::constant(0.0);
    for i in 0..4 {
        acc = acc + p[i] * crate::jet::Jet2::constant(pole[i]);
    }
    acc
}
