//! Closed spherical curves as dense polylines on the unit 2-sphere.
//!
//! Slice curves live inside an equator of the 3-sphere; mapping them through
//! the equator's orthonormal frame turns them into curves on the standard
//! 2-sphere of R^3, where length, curvature, and congruence are computed.

use crate::fit::{dot3, norm3, scale3, spherical_circumcurvature, sub3, Vec3};
use crate::vec4::acos_clamped;
use alloc::vec::Vec;

/// Closed curve on the unit 2-sphere, stored as its vertex loop. The segment
/// from the last vertex back to the first is implied.
#[derive(Clone, Debug)]
pub struct SphericalPolyline {
    pts: Vec<Vec3>,
}

/// Geodesic interpolation between unit vectors; falls back to linear blending
/// when the endpoints nearly coincide.
pub fn slerp(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    let ang = acos_clamped(dot3(a, b));
    if ang < 1e-9 {
        let mut m = [0.0; 3];
        for i in 0..3 {
            m[i] = (1.0 - t) * a[i] + t * b[i];
        }
        return scale3(&m, 1.0 / norm3(&m));
    }
    let s = libm::sin(ang);
    let (wa, wb) = (libm::sin((1.0 - t) * ang) / s, libm::sin(t * ang) / s);
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = wa * a[i] + wb * b[i];
    }
    scale3(&out, 1.0 / norm3(&out))
}

/// Smallest distance between the closed segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = sub3(p1, p0);
    let d2 = sub3(q1, q0);
    let r = sub3(p0, q0);
    let a = dot3(&d1, &d1);
    let e = dot3(&d2, &d2);
    let f = dot3(&d2, &r);
    let (mut s, mut t);
    if a <= 1e-300 && e <= 1e-300 {
        return norm3(&r);
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot3(&d1, &r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot3(&d1, &d2);
            let denom = a * e - b * b;
            s = if denom > 1e-300 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let mut diff = [0.0; 3];
    for i in 0..3 {
        diff[i] = (p0[i] + s * d1[i]) - (q0[i] + t * d2[i]);
    }
    norm3(&diff)
}

impl SphericalPolyline {
    pub fn new(pts: Vec<Vec3>) -> Self {
        assert!(pts.len() >= 3, "a closed curve needs at least three vertices");
        let pts = pts.iter().map(|p| scale3(p, 1.0 / norm3(p))).collect();
        SphericalPolyline { pts }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.pts
    }

    pub fn vertex_count(&self) -> usize {
        self.pts.len()
    }

    /// Total intrinsic length of the closed vertex loop.
    pub fn length(&self) -> f64 {
        let n = self.pts.len();
        let mut total = 0.0;
        for i in 0..n {
            total += acos_clamped(dot3(&self.pts[i], &self.pts[(i + 1) % n]));
        }
        total
    }

    /// Cumulative arclength at each vertex, starting from 0.
    fn cumulative(&self) -> Vec<f64> {
        let n = self.pts.len();
        let mut acc = Vec::with_capacity(n + 1);
        acc.push(0.0);
        for i in 0..n {
            let step = acos_clamped(dot3(&self.pts[i], &self.pts[(i + 1) % n]));
            acc.push(acc[i] + step);
        }
        acc
    }

    /// Redistributes `n` vertices at equal arclength along the curve,
    /// starting at the current first vertex.
    pub fn resample(&self, n: usize) -> SphericalPolyline {
        assert!(n >= 3);
        let acc = self.cumulative();
        let total = *acc.last().expect("nonempty");
        let m = self.pts.len();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0usize;
        for k in 0..n {
            let target = total * (k as f64) / (n as f64);
            while seg + 1 < m && acc[seg + 1] <= target {
                seg += 1;
            }
            let lo = acc[seg];
            let hi = acc[seg + 1];
            let t = if hi > lo { (target - lo) / (hi - lo) } else { 0.0 };
            out.push(slerp(&self.pts[seg], &self.pts[(seg + 1) % m], t));
        }
        SphericalPolyline::new(out)
    }

    /// Unsigned geodesic curvature at each vertex by fitting a circle through
    /// the vertex and its two neighbors. Exact when the curve is an arc of a
    /// circle, and robust for very short chords.
    pub fn vertex_curvatures(&self) -> Vec<f64> {
        let n = self.pts.len();
        (0..n)
            .map(|i| {
                spherical_circumcurvature(
                    &self.pts[(i + n - 1) % n],
                    &self.pts[i],
                    &self.pts[(i + 1) % n],
                )
            })
            .collect()
    }

    /// Extremes of the vertex curvatures: `(min, max)`.
    pub fn curvature_range(&self) -> (f64, f64) {
        let ks = self.vertex_curvatures();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in ks {
            lo = lo.min(k);
            hi = hi.max(k);
        }
        (lo, hi)
    }

    /// Curvature sampled at `n` equal-arclength stations.
    pub fn curvature_profile(&self, n: usize) -> Vec<f64> {
        self.resample(n).vertex_curvatures()
    }

    /// True when any pair of segments at circular index distance two or more
    /// comes closer than `tol` (chordal). Adjacent segments always touch at
    /// their shared vertex and are skipped.
    pub fn has_self_intersection(&self, tol: f64) -> bool {
        let n = self.pts.len();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let d = segment_distance(
                    &self.pts[i],
                    &self.pts[(i + 1) % n],
                    &self.pts[j],
                    &self.pts[(j + 1) % n],
                );
                if d < tol {
                    return true;
                }
            }
        }
        false
    }
}

/// Number of equal-arclength stations used when comparing curvature profiles.
pub const CONGRUENCE_STATIONS: usize = 512;

/// Sup-norm match of two periodic profiles under every cyclic shift, in
/// either traversal direction. Both slices must have the same length.
pub fn profiles_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let n = a.len();
    if b.len() != n || n == 0 {
        return false;
    }
    let mut b_rev = b.to_vec();
    b_rev.reverse();
    for candidate in [b, &b_rev[..]] {
        for shift in 0..n {
            let mut worst = 0.0f64;
            for i in 0..n {
                worst = worst.max((a[i] - candidate[(i + shift) % n]).abs());
                if worst > tol {
                    break;
                }
            }
            if worst <= tol {
                return true;
            }
        }
    }
    false
}

/// Congruence test for closed spherical curves: lengths must agree within
/// `tol_length`, and the curvature-versus-arclength profiles must agree in
/// sup norm within `tol_profile` after the best cyclic shift, in either
/// traversal direction. Constant-curvature curves (circles) compare equal
/// regardless of where the sampling starts.
pub fn curves_congruent(
    a: &SphericalPolyline,
    b: &SphericalPolyline,
    tol_length: f64,
    tol_profile: f64,
) -> bool {
    if (a.length() - b.length()).abs() > tol_length {
        return false;
    }
    let n = CONGRUENCE_STATIONS;
    let pa = a.curvature_profile(n);
    let pb = b.curvature_profile(n);
    profiles_match(&pa, &pb, tol_profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn circle(radius: f64, n: usize) -> SphericalPolyline {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64) / (n as f64);
                [
                    libm::sin(radius) * libm::cos(t),
                    libm::sin(radius) * libm::sin(t),
                    libm::cos(radius),
                ]
            })
            .collect();
        SphericalPolyline::new(pts)
    }

    fn tilted_circle(radius: f64, n: usize) -> SphericalPolyline {
        // Same circle rotated so its axis is (1, 1, 1)/sqrt(3).
        let axis = [
            1.0 / libm::sqrt(3.0),
            1.0 / libm::sqrt(3.0),
            1.0 / libm::sqrt(3.0),
        ];
        let u = crate::fit::normalize3(&crate::fit::cross3(&axis, &[0.0, 0.0, 1.0]));
        let v = crate::fit::cross3(&axis, &u);
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64) / (n as f64);
                let mut p = [0.0; 3];
                for i in 0..3 {
                    p[i] = libm::cos(radius) * axis[i]
                        + libm::sin(radius) * (libm::cos(t) * u[i] + libm::sin(t) * v[i]);
                }
                p
            })
            .collect();
        SphericalPolyline::new(pts)
    }

    #[test]
    fn great_circle_length_is_two_pi() {
        // acos near 1 costs ~1e-14 per segment, so allow a few hundred ulps.
        let c = circle(PI / 2.0, 512);
        assert!((c.length() - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn small_circle_length_converges() {
        let r = PI / 6.0;
        let c = circle(r, 4096);
        assert!((c.length() - 2.0 * PI * libm::sin(r)).abs() < 1e-5);
    }

    #[test]
    fn circle_curvature_profile_is_constant() {
        let r = PI / 6.0;
        let c = circle(r, 200);
        let expect = libm::cos(r) / libm::sin(r);
        for k in c.vertex_curvatures() {
            assert!((k - expect).abs() < 1e-9);
        }
        let (lo, hi) = c.curvature_range();
        assert!((lo - expect).abs() < 1e-9 && (hi - expect).abs() < 1e-9);
    }

    #[test]
    fn resample_equalizes_spacing() {
        // Uneven input: cluster vertices on one side.
        let pts: Vec<_> = (0..100)
            .map(|k| {
                let t = {
                    let x = (k as f64) / 100.0;
                    2.0 * PI * x * x
                };
                [libm::cos(t), libm::sin(t), 0.0]
            })
            .collect();
        let c = SphericalPolyline::new(pts).resample(256);
        let expected = c.length() / 256.0;
        let p = c.points();
        for i in 0..256 {
            let d = acos_clamped(dot3(&p[i], &p[(i + 1) % 256]));
            assert!((d - expected).abs() < 0.05 * expected, "station {i}: {d} vs {expected}");
        }
    }

    #[test]
    fn congruent_circles_match_under_rotation() {
        let a = circle(0.6, 300);
        let b = tilted_circle(0.6, 300);
        assert!(curves_congruent(&a, &b, 1e-6, 1e-6));
    }

    #[test]
    fn different_radii_are_not_congruent() {
        let a = circle(0.6, 300);
        let b = circle(0.7, 300);
        assert!(!curves_congruent(&a, &b, 1e-6, 1e-6));
    }

    #[test]
    fn same_length_different_shape_is_not_congruent() {
        // A circle and a same-length curve with oscillating curvature.
        let a = circle(0.6, 400);
        let wobble: Vec<_> = (0..400)
            .map(|k| {
                let t = 2.0 * PI * (k as f64) / 400.0;
                let r = 0.6 + 0.05 * libm::sin(4.0 * t);
                [
                    libm::sin(r) * libm::cos(t),
                    libm::sin(r) * libm::sin(t),
                    libm::cos(r),
                ]
            })
            .collect();
        let b = SphericalPolyline::new(wobble);
        // Loosen the length gate; the profiles must still separate them.
        assert!(!curves_congruent(&a, &b, 1.0, 1e-3));
    }

    #[test]
    fn bowtie_self_intersects_circle_does_not() {
        // Map a plane bowtie through a small chart around the north pole;
        // the two diagonals cross, so the curve passes through one point
        // twice.
        let chart = |x: f64, y: f64| {
            let p = [0.1 * x, 0.1 * y, 1.0];
            scale3(&p, 1.0 / norm3(&p))
        };
        let corners = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        let mut pts = vec![];
        for e in 0..4 {
            let (x0, y0) = corners[e];
            let (x1, y1) = corners[(e + 1) % 4];
            for k in 0..100 {
                let t = (k as f64) / 100.0;
                pts.push(chart(x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
            }
        }
        let bowtie = SphericalPolyline::new(pts);
        assert!(bowtie.has_self_intersection(1e-4));
        assert!(!circle(0.8, 400).has_self_intersection(1e-4));
    }
}
