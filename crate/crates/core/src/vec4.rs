//! Small fixed-size vector and matrix helpers over `[f64; 4]`.
//!
//! Generic variants (`dot_g`, `cross4_g`, ...) accept any [`crate::jet::Real`]
//! scalar so the same formulas evaluate over jets.

use crate::jet::Real;

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm(a: &Vec4) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn scale(a: &Vec4, s: f64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn add(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn sub(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn normalize(a: &Vec4) -> Vec4 {
    scale(a, 1.0 / norm(a))
}

pub fn dist(a: &Vec4, b: &Vec4) -> f64 {
    norm(&sub(a, b))
}

pub fn dot_g<R: Real>(a: &[R; 4], b: &[R; 4]) -> R {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn normalize_g<R: Real>(a: &[R; 4]) -> [R; 4] {
    let inv = R::constant(1.0) / dot_g(a, a).sqrt();
    [a[0] * inv, a[1] * inv, a[2] * inv, a[3] * inv]
}

/// Hodge dual of `a ^ b ^ c`: the vector orthogonal to all three arguments,
/// with the sign of the first-row cofactor expansion of `det [e; a; b; c]`.
pub fn cross4_g<R: Real>(a: &[R; 4], b: &[R; 4], c: &[R; 4]) -> [R; 4] {
    let det3 = |a0: R, a1: R, a2: R, b0: R, b1: R, b2: R, c0: R, c1: R, c2: R| -> R {
        a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0)
    };
    [
        det3(a[1], a[2], a[3], b[1], b[2], b[3], c[1], c[2], c[3]),
        -det3(a[0], a[2], a[3], b[0], b[2], b[3], c[0], c[2], c[3]),
        det3(a[0], a[1], a[3], b[0], b[1], b[3], c[0], c[1], c[3]),
        -det3(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]),
    ]
}

pub fn cross4(a: &Vec4, b: &Vec4, c: &Vec4) -> Vec4 {
    cross4_g(a, b, c)
}

pub fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    [
        dot(&m[0], v),
        dot(&m[1], v),
        dot(&m[2], v),
        dot(&m[3], v),
    ]
}

pub fn mat_vec_g<R: Real>(m: &Mat4, v: &[R; 4]) -> [R; 4] {
    let row = |r: &[f64; 4]| -> R {
        v[0] * R::constant(r[0])
            + v[1] * R::constant(r[1])
            + v[2] * R::constant(r[2])
            + v[3] * R::constant(r[3])
    };
    [row(&m[0]), row(&m[1]), row(&m[2]), row(&m[3])]
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn mat_transpose(m: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn mat_identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        m[i][i] = 1.0;
    }
    m
}

pub fn det4(m: &Mat4) -> f64 {
    let minor = |r: [usize; 3], c: [usize; 3]| -> f64 {
        m[r[0]][c[0]] * (m[r[1]][c[1]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[1]])
            - m[r[0]][c[1]] * (m[r[1]][c[0]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[0]])
            + m[r[0]][c[2]] * (m[r[1]][c[0]] * m[r[2]][c[1]] - m[r[1]][c[1]] * m[r[2]][c[0]])
    };
    m[0][0] * minor([1, 2, 3], [1, 2, 3]) - m[0][1] * minor([1, 2, 3], [0, 2, 3])
        + m[0][2] * minor([1, 2, 3], [0, 1, 3])
        - m[0][3] * minor([1, 2, 3], [0, 1, 2])
}

/// arccos clamped to [-1, 1]; inner products drift past the interval by
/// roundoff and the distance functions silently clamp.
pub fn acos_clamped(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}
