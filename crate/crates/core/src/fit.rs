//! Dense 3D helpers: symmetric eigenproblems, least-squares plane fits, and
//! circle geometry through triples of points. These back the curvature
//! estimators and the sanity checks on projected configurations.

use alloc::vec::Vec;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &Vec3) -> f64 {
    libm::sqrt(dot3(a, a))
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn normalize3(a: &Vec3) -> Vec3 {
    scale3(a, 1.0 / norm3(a))
}

/// Determinant of the matrix with rows `a`, `b`, `c`.
pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    dot3(a, &cross3(b, c))
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric
/// 3x3 matrix, by cyclic Jacobi rotations. Vectors are returned as rows.
pub fn sym_eigen3(m: &Mat3) -> ([f64; 3], Mat3) {
    let mut a = *m;
    let mut v: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off < 1e-30 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
            let c = 1.0 / libm::sqrt(t * t + 1.0);
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for k in 0..3 {
                let (vkp, vkq) = (v[k][p], v[k][q]);
                v[k][p] = c * vkp - s * vkq;
                v[k][q] = s * vkp + c * vkq;
            }
        }
    }
    let mut pairs: [(f64, Vec3); 3] = [
        (a[0][0], [v[0][0], v[1][0], v[2][0]]),
        (a[1][1], [v[0][1], v[1][1], v[2][1]]),
        (a[2][2], [v[0][2], v[1][2], v[2][2]]),
    ];
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("symmetric eigenvalues are finite"));
    (
        [pairs[0].0, pairs[1].0, pairs[2].0],
        [pairs[0].1, pairs[1].1, pairs[2].1],
    )
}

/// Best-fit plane through the origin: the unit normal minimizing the sum of
/// squared heights over the points, together with the RMS height. The normal
/// is the eigenvector of the smallest scatter eigenvalue, sign-fixed so its
/// largest-magnitude component is positive.
pub fn plane_fit_origin(points: &[Vec3]) -> (Vec3, f64) {
    assert!(points.len() >= 3, "plane fit needs at least three points");
    let mut scatter = [[0.0f64; 3]; 3];
    for p in points {
        for i in 0..3 {
            for j in 0..3 {
                scatter[i][j] += p[i] * p[j];
            }
        }
    }
    let (evals, evecs) = sym_eigen3(&scatter);
    let mut n = evecs[0];
    let lead = (0..3).fold(0, |best, i| if n[i].abs() > n[best].abs() { i } else { best });
    if n[lead] < 0.0 {
        n = scale3(&n, -1.0);
    }
    let rms = libm::sqrt(evals[0].max(0.0) / points.len() as f64);
    (n, rms)
}

/// Curvature at `b` of the circle through `a`, `b`, `c` viewed as a curve on
/// the unit 2-sphere containing the three points. Exact for arcs of circles,
/// which makes it stable down to very short chords.
///
/// The circle lies in a plane at distance `d` from the origin; as a spherical
/// curve its geodesic curvature is `|d| / sqrt(1 - d^2)` (`d = cos r` for a
/// circle of intrinsic radius `r`, giving `cot r`).
pub fn spherical_circumcurvature(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = cross3(&sub3(b, a), &sub3(c, a));
    let nn = norm3(&n);
    if nn < 1e-300 {
        return 0.0;
    }
    let d = (det3(a, b, c) / nn).clamp(-1.0, 1.0);
    let s2 = 1.0 - d * d;
    if s2 <= 0.0 {
        return f64::INFINITY;
    }
    d.abs() / libm::sqrt(s2)
}

/// Plane of the circle through three spherical points: unit normal and
/// offset, with `<n, x> = offset` on the circle and `offset >= 0`.
pub fn circle_plane(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, f64)> {
    let n = cross3(&sub3(b, a), &sub3(c, a));
    let nn = norm3(&n);
    if nn < 1e-12 {
        return None;
    }
    let mut unit = scale3(&n, 1.0 / nn);
    let mut offset = dot3(&unit, a);
    if offset < 0.0 {
        unit = scale3(&unit, -1.0);
        offset = -offset;
    }
    Some((unit, offset))
}

/// Spherical centroid: normalized mean. `None` when the mean nearly
/// vanishes, as for balanced antipodal configurations.
pub fn spherical_mean(points: &[Vec3]) -> Option<Vec3> {
    let mut m = [0.0; 3];
    for p in points {
        m = add3(&m, p);
    }
    let n = norm3(&m);
    if n < 1e-12 * points.len() as f64 {
        None
    } else {
        Some(scale3(&m, 1.0 / n))
    }
}

/// All pairwise distances below `tol` collapse: deduplicate a small point set.
pub fn dedup_points(points: &[Vec3], tol: f64) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::new();
    for p in points {
        if out.iter().all(|q| norm3(&sub3(p, q)) > tol) {
            out.push(*p);
        }
    }
    out
}
