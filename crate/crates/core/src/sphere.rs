//! Points, equators, geodesic circles, and congruences of the unit 3-sphere.
//!
//! An equator is the intersection of the sphere with a hyperplane through the
//! origin, recorded by its unit pole `v`; it is itself a totally geodesic
//! 2-sphere. A circle inside an equator is stored by the equator, one of its
//! two antipodal spherical centers, and the radius `r` in `(0, pi/2]`;
//! its curvature as a spherical curve is `cot r`, so geodesics are exactly
//! the circles of radius `pi/2`.

use crate::vec4::{
    acos_clamped, cross4, det4, dot, mat_identity, mat_mul, mat_transpose, mat_vec, norm,
    normalize, scale, sub, Mat4, Vec4,
};
use core::f64::consts::FRAC_PI_2;
use core::fmt;
use rand::Rng;

/// Tolerance on unit-length deviation accepted by constructors; anything
/// closer is silently renormalized.
pub const UNIT_TOLERANCE: f64 = 1e-6;
/// Orthogonality tolerance for congruence matrices.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
/// How close to `pi/2` a circle's radius must be to count as a geodesic.
pub const GEODESIC_RADIUS_TOLERANCE: f64 = 1e-9;
/// Minimum distance from the projection pole accepted by
/// [`stereographic_project`].
pub const PROJECTION_POLE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SphereError {
    /// Input vector further than `UNIT_TOLERANCE` from unit length.
    NotUnit { norm: f64 },
    /// Matrix fails `Q^T Q = I` within `ORTHOGONALITY_TOLERANCE`.
    NotOrthogonal { deviation: f64 },
    /// Claimed circle center is not orthogonal to the equator pole.
    CenterOffEquator { height: f64 },
    /// Circle radius outside `(0, pi/2]`.
    RadiusOutOfRange { radius: f64 },
    /// Rotation requested about a circle that is not a geodesic.
    NotGeodesic { radius: f64 },
    /// Point coincides with the projection pole.
    AtProjectionPole,
}

impl fmt::Display for SphereError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphereError::NotUnit { norm } => {
                write!(f, "vector norm {norm} deviates from 1 by more than {UNIT_TOLERANCE}")
            }
            SphereError::NotOrthogonal { deviation } => {
                write!(f, "matrix deviates from orthogonality by {deviation}")
            }
            SphereError::CenterOffEquator { height } => {
                write!(f, "circle center lies {height} off the containing equator")
            }
            SphereError::RadiusOutOfRange { radius } => {
                write!(f, "circle radius {radius} outside (0, pi/2]")
            }
            SphereError::NotGeodesic { radius } => {
                write!(f, "rotation axis must be a geodesic; got radius {radius}")
            }
            SphereError::AtProjectionPole => write!(f, "point coincides with projection pole"),
        }
    }
}

/// A point of the unit 3-sphere. Constructors renormalize, so the stored
/// coordinates are unit to machine precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint(Vec4);

impl SpherePoint {
    pub fn new(coords: Vec4) -> Result<Self, SphereError> {
        let n = norm(&coords);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(SphereError::NotUnit { norm: n });
        }
        Ok(SpherePoint(scale(&coords, 1.0 / n)))
    }

    /// For values produced by arithmetic that is unit by construction.
    /// Renormalizes but never rejects.
    pub(crate) fn from_unit(coords: Vec4) -> Self {
        SpherePoint(normalize(&coords))
    }

    pub fn coords(&self) -> Vec4 {
        self.0
    }

    pub fn antipodal(&self) -> SpherePoint {
        SpherePoint([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

/// Great 2-sphere `{ p : <v, p> = 0 }`, stored by its pole `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equator {
    pole: SpherePoint,
}

impl Equator {
    pub fn new(pole: SpherePoint) -> Self {
        Equator { pole }
    }

    pub fn from_coords(pole: Vec4) -> Result<Self, SphereError> {
        Ok(Equator::new(SpherePoint::new(pole)?))
    }

    pub fn pole(&self) -> SpherePoint {
        self.pole
    }

    pub fn contains(&self, p: &SpherePoint, tol: f64) -> bool {
        signed_height(self, p).abs() <= tol
    }

    /// Deterministic orthonormal basis of the hyperplane, mapping the equator
    /// isometrically onto the unit 2-sphere of R^3. The pole itself is the
    /// first vector of the completed frame and is excluded.
    pub fn frame(&self) -> [Vec4; 3] {
        let b = complete_frame(&[self.pole.coords()]);
        [b[1], b[2], b[3]]
    }

    /// Coordinates of an equator point in [`Equator::frame`].
    pub fn to_frame(&self, p: &Vec4) -> [f64; 3] {
        let b = self.frame();
        [dot(&b[0], p), dot(&b[1], p), dot(&b[2], p)]
    }

    pub fn from_frame(&self, q: &[f64; 3]) -> Vec4 {
        let b = self.frame();
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = b[0][i] * q[0] + b[1][i] * q[1] + b[2][i] * q[2];
        }
        out
    }
}

/// Signed height of `p` over the hyperplane of `eq`: positive on the open
/// half-sphere around the pole.
pub fn signed_height(eq: &Equator, p: &SpherePoint) -> f64 {
    dot(&eq.pole.coords(), &p.coords())
}

/// Intrinsic (great-circle) distance; inner products outside `[-1, 1]` by
/// roundoff are clamped.
pub fn intrinsic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    acos_clamped(dot(&p.coords(), &q.coords()))
}

/// Circle inside the equator `S(v)`: the locus at spherical distance
/// `radius` from `center`, where `center` lies on the equator. The antipodal
/// center `-center` sees the same circle at radius `pi - radius`.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicCircle {
    equator: Equator,
    center: SpherePoint,
    radius: f64,
}

impl GeodesicCircle {
    pub fn new(equator: Equator, center: SpherePoint, radius: f64) -> Result<Self, SphereError> {
        if !(radius > 0.0 && radius <= FRAC_PI_2 + 1e-15) {
            return Err(SphereError::RadiusOutOfRange { radius });
        }
        let h = signed_height(&equator, &center);
        if h.abs() > UNIT_TOLERANCE {
            return Err(SphereError::CenterOffEquator { height: h });
        }
        // Project the center exactly onto the equator hyperplane.
        let v = equator.pole().coords();
        let c = sub(&center.coords(), &scale(&v, h));
        Ok(GeodesicCircle {
            equator,
            center: SpherePoint::from_unit(c),
            radius: radius.min(FRAC_PI_2),
        })
    }

    pub fn equator(&self) -> Equator {
        self.equator
    }

    pub fn center(&self) -> SpherePoint {
        self.center
    }

    /// The two antipodal centers.
    pub fn center_pair(&self) -> (SpherePoint, SpherePoint) {
        (self.center, self.center.antipodal())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_geodesic(&self) -> bool {
        (self.radius - FRAC_PI_2).abs() <= GEODESIC_RADIUS_TOLERANCE
    }

    /// Curvature as a curve in the 2-sphere: `|cot r|`, zero exactly for
    /// geodesics.
    pub fn curvature(&self) -> f64 {
        circle_curvature(self.radius).expect("radius validated at construction")
    }

    /// Point at angle `theta` along the circle, measured in a deterministic
    /// frame of the equator around the center.
    pub fn point(&self, theta: f64) -> SpherePoint {
        let b = complete_frame(&[self.equator.pole().coords(), self.center.coords()]);
        let (cr, sr) = (libm::cos(self.radius), libm::sin(self.radius));
        let (ct, st) = (libm::cos(theta), libm::sin(theta));
        let mut p = [0.0; 4];
        let c = self.center.coords();
        for i in 0..4 {
            p[i] = cr * c[i] + sr * (ct * b[2][i] + st * b[3][i]);
        }
        SpherePoint::from_unit(p)
    }
}

/// Curvature `|cot r|` of a spherical circle of radius `r in (0, pi/2]`.
pub fn circle_curvature(radius: f64) -> Result<f64, SphereError> {
    if !(radius > 0.0 && radius <= FRAC_PI_2 + 1e-15) {
        return Err(SphereError::RadiusOutOfRange { radius });
    }
    if (radius - FRAC_PI_2).abs() <= GEODESIC_RADIUS_TOLERANCE {
        return Ok(0.0);
    }
    Ok(libm::cos(radius) / libm::sin(radius))
}

/// Orthogonal transformation of R^4 restricted to the sphere.
#[derive(Clone, Copy, Debug)]
pub struct Congruence {
    matrix: Mat4,
    det: f64,
}

impl Congruence {
    pub fn identity() -> Self {
        Congruence {
            matrix: mat_identity(),
            det: 1.0,
        }
    }

    pub fn from_matrix(matrix: Mat4) -> Result<Self, SphereError> {
        let qtq = mat_mul(&mat_transpose(&matrix), &matrix);
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((qtq[i][j] - target).abs());
            }
        }
        if dev > ORTHOGONALITY_TOLERANCE {
            return Err(SphereError::NotOrthogonal { deviation: dev });
        }
        let det = if det4(&matrix) > 0.0 { 1.0 } else { -1.0 };
        Ok(Congruence { matrix, det })
    }

    pub fn matrix(&self) -> Mat4 {
        self.matrix
    }

    /// Recorded determinant sign: `+1.0` or `-1.0`.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        SpherePoint::from_unit(mat_vec(&self.matrix, &p.coords()))
    }

    pub fn apply_vec(&self, v: &Vec4) -> Vec4 {
        mat_vec(&self.matrix, v)
    }

    pub fn apply_equator(&self, eq: &Equator) -> Equator {
        Equator::new(self.apply(&eq.pole()))
    }

    /// Composition applying `other` first: `(self.compose(other))(p) =
    /// self(other(p))`.
    pub fn compose(&self, other: &Congruence) -> Congruence {
        Congruence {
            matrix: mat_mul(&self.matrix, &other.matrix),
            det: self.det * other.det,
        }
    }

    pub fn inverse(&self) -> Congruence {
        Congruence {
            matrix: mat_transpose(&self.matrix),
            det: self.det,
        }
    }

    /// The antipodal map `p -> -p` as a congruence.
    pub fn antipodal_map() -> Congruence {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = -1.0;
        }
        Congruence { matrix: m, det: 1.0 }
    }

    /// Haar-ish random rotation: Gram-Schmidt of a Gaussian matrix with the
    /// determinant flipped positive. Deterministic in the generator state.
    pub fn random_rotation<R: Rng>(rng: &mut R) -> Congruence {
        loop {
            let mut cols = [[0.0f64; 4]; 4];
            for c in cols.iter_mut() {
                for x in c.iter_mut() {
                    // Gaussian entries keep the distribution rotation-invariant.
                    *x = crate::sample::standard_normal(rng);
                }
            }
            if let Some(q) = gram_schmidt(cols) {
                let mut m = mat_transpose(&q);
                if det4(&m) < 0.0 {
                    for row in m.iter_mut() {
                        row[3] = -row[3];
                    }
                }
                return Congruence { matrix: m, det: 1.0 };
            }
        }
    }
}

fn gram_schmidt(mut cols: [Vec4; 4]) -> Option<[Vec4; 4]> {
    for i in 0..4 {
        for j in 0..i {
            let pj = cols[j];
            let d = dot(&cols[i], &pj);
            cols[i] = sub(&cols[i], &scale(&pj, d));
        }
        let n = norm(&cols[i]);
        if n < 1e-9 {
            return None;
        }
        cols[i] = scale(&cols[i], 1.0 / n);
    }
    Some(cols)
}

/// Completes the given orthonormal vectors to an orthonormal basis of R^4 by
/// Gram-Schmidt over the standard axes in index order, skipping axes that are
/// nearly dependent on what has been accepted so far. Deterministic.
pub fn complete_frame(fixed: &[Vec4]) -> [Vec4; 4] {
    let mut basis: [Vec4; 4] = [[0.0; 4]; 4];
    let mut count = 0;
    for f in fixed {
        basis[count] = normalize(f);
        count += 1;
    }
    let mut axis = 0;
    while count < 4 {
        assert!(axis < 4, "frame completion exhausted the standard axes");
        let mut e = [0.0; 4];
        e[axis] = 1.0;
        axis += 1;
        for b in basis.iter().take(count) {
            let d = dot(&e, b);
            e = sub(&e, &scale(b, d));
        }
        let n = norm(&e);
        if n > 0.25 {
            basis[count] = scale(&e, 1.0 / n);
            count += 1;
        }
    }
    basis
}

/// Rotation of the sphere fixing the geodesic `g` pointwise: the 2-plane
/// spanned by `g` is fixed and its orthogonal complement (spanned by the
/// equator pole and the circle center) turns by `angle`, carrying the pole
/// toward the center for positive angles.
pub fn rotation_about_geodesic(g: &GeodesicCircle, angle: f64) -> Result<Congruence, SphereError> {
    if !g.is_geodesic() {
        return Err(SphereError::NotGeodesic { radius: g.radius() });
    }
    let a = g.equator().pole().coords();
    let b = g.center().coords();
    let (c, s) = (libm::cos(angle), libm::sin(angle));
    let mut m = mat_identity();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] += (c - 1.0) * (a[i] * a[j] + b[i] * b[j]) + s * (b[i] * a[j] - a[i] * b[j]);
        }
    }
    Ok(Congruence { matrix: m, det: 1.0 })
}

/// Stereographic projection from `pole` onto the hyperplane orthogonal to it,
/// in the deterministic frame of [`complete_frame`]. With `pole = e4` this is
/// the textbook map `(x1, x2, x3, x4) -> (x1, x2, x3) / (1 - x4)`.
///
/// When the pole lies on an equator `S(v)`, the image of `S(v)` is a plane
/// through the origin.
pub fn stereographic_project(pole: &SpherePoint, p: &SpherePoint) -> Result<[f64; 3], SphereError> {
    let d = intrinsic_distance(pole, p);
    if d < PROJECTION_POLE_TOLERANCE {
        return Err(SphereError::AtProjectionPole);
    }
    let basis = complete_frame(&[pole.coords()]);
    let denom = 1.0 - dot(&pole.coords(), &p.coords());
    let pc = p.coords();
    Ok([
        dot(&basis[1], &pc) / denom,
        dot(&basis[2], &pc) / denom,
        dot(&basis[3], &pc) / denom,
    ])
}

/// Geodesic through `p` with unit tangent `w` inside the equator `eq`
/// (both must lie in the hyperplane, `w` orthogonal to `p`).
pub fn geodesic_through(
    eq: &Equator,
    p: &SpherePoint,
    w: &Vec4,
) -> Result<GeodesicCircle, SphereError> {
    let c = cross4(&eq.pole().coords(), &p.coords(), w);
    let n = norm(&c);
    if n < 1e-9 {
        return Err(SphereError::NotGeodesic { radius: f64::NAN });
    }
    GeodesicCircle::new(*eq, SpherePoint::from_unit(scale(&c, 1.0 / n)), FRAC_PI_2)
}
