//! Numerical geometry of tori immersed in the unit 3-sphere.
//!
//! The crate is organized around a handful of closed-form torus immersions
//! (`torus`) whose first and second derivatives are evaluated exactly through
//! a small forward-mode jet type (`jet`). On top of those sit:
//!
//! - `sphere`: points, equators, geodesic circles, and congruences of the
//!   unit 3-sphere,
//! - `intersection`: tracing and classifying the curves an equator cuts on a
//!   torus, tangency detection, and the two-piece scan,
//! - `deform`: sphere diffeomorphisms, their canonical extensions to the
//!   annulus `1/2 < |x| < 2`, sampled Hölder norms, and the displacement
//!   functional built from them,
//! - `spectral`: bilinear finite elements on the periodic parameter grid and
//!   the low end of the Laplace-Beltrami spectrum.
//!
//! Everything is deterministic given a seed: sampling goes through
//! `sample::rng` and no operation reads a clock or global state.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line live in the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod curve;
pub mod deform;
pub mod fit;
pub mod intersection;
pub mod jet;
pub mod sample;
pub mod sphere;
pub mod spectral;
pub mod torus;
pub mod vec4;

pub use deform::{AnnulusMap, CurveArc, CurveProduct, DeformError, HolderReport, SphereMap};
pub use intersection::{IntersectionCurve, IntersectionReport, SliceClass, SliceError};
pub use spectral::{SpectralError, SpectralResult, SpectralVerdict};
pub use sphere::{Congruence, Equator, GeodesicCircle, SpherePoint};
pub use torus::Surface;
