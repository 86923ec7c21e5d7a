//! Forward-mode jets carrying value, gradient, and Hessian.
//!
//! `Jet<N>` tracks an `f64` value together with its first and second partial
//! derivatives with respect to `N` independent variables. Evaluating a
//! closed-form expression over jets yields machine-accurate derivatives, which
//! is how every immersion in this crate exposes its second fundamental form
//! without finite differencing.
//!
//! `Real` is the scalar abstraction the geometric formulas are written
//! against; it is implemented for `f64` (through `libm`, so behaviour is
//! identical with and without `std`) and for `Jet<N>`.

use core::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    /// The underlying value, discarding derivative information.
    fn val(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn constant(x: f64) -> Self {
        x
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        libm::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
}

/// Second-order jet in `N` variables. The Hessian is stored fully and kept
/// symmetric by construction.
#[derive(Clone, Copy, Debug)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(x: f64) -> Self {
        Jet {
            v: x,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// The jet of the `i`-th independent variable at value `x`.
    pub fn var(i: usize, x: f64) -> Self {
        let mut j = Self::constant(x);
        j.g[i] = 1.0;
        j
    }

    /// Jet of `f(self)` given `f`, `f'`, `f''` at the value.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                h[i][j] = ddf * self.g[i] * self.g[j] + df * self.h[i][j];
            }
        }
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = df * self.g[i];
        }
        Jet { v: f, g, h }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut g = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            g[i] = self.g[i] + o.g[i];
            for j in 0..N {
                h[i][j] = self.h[i][j] + o.h[i][j];
            }
        }
        Jet {
            v: self.v + o.v,
            g,
            h,
        }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut g = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            g[i] = self.g[i] - o.g[i];
            for j in 0..N {
                h[i][j] = self.h[i][j] - o.h[i][j];
            }
        }
        Jet {
            v: self.v - o.v,
            g,
            h,
        }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut g = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..N {
                h[i][j] = self.h[i][j] * o.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i]
                    + self.v * o.h[i][j];
            }
        }
        Jet {
            v: self.v * o.v,
            g,
            h,
        }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let r = o.v;
        self * o.chain(1.0 / r, -1.0 / (r * r), 2.0 / (r * r * r))
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut g = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            g[i] = -self.g[i];
            for j in 0..N {
                h[i][j] = -self.h[i][j];
            }
        }
        Jet {
            v: -self.v,
            g,
            h,
        }
    }
}

impl<const N: usize> Real for Jet<N> {
    fn constant(x: f64) -> Self {
        Jet::constant(x)
    }
    fn val(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(c, -s, -c)
    }
    fn sqrt(self) -> Self {
        let r = libm::sqrt(self.v);
        self.chain(r, 0.5 / r, -0.25 / (r * r * r))
    }
}

/// Jet in the two surface parameters `(u, v)`.
pub type Jet2 = Jet<2>;
/// Jet in the four ambient coordinates.
pub type Jet4 = Jet<4>;

/// Seed pair for evaluating a parametric surface over `Jet2`.
pub fn uv_vars(u: f64, v: f64) -> (Jet2, Jet2) {
    (Jet2::var(0, u), Jet2::var(1, v))
}

/// Seed vector for evaluating an ambient map over `Jet4`.
pub fn ambient_vars(x: &[f64; 4]) -> [Jet4; 4] {
    [
        Jet4::var(0, x[0]),
        Jet4::var(1, x[1]),
        Jet4::var(2, x[2]),
        Jet4::var(3, x[3]),
    ]
}
