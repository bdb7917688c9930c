//! Numerical laboratory for ergodic Verblunsky coefficients.
//!
//! Coefficient sequences `α_n = f(Tⁿω)` are produced by a locally constant
//! map `f` over a strictly ergodic subshift (codings of irrational
//! rotations, primitive substitutions, periodic words). From them the crate
//! builds
//!
//! * the Szegő cocycle `A_z` and its log-scaled transfer products,
//!   Lyapunov exponents and uniformity defects ([`cocycle`]);
//! * finite CMV truncations, their eigenphases and periodic-approximant
//!   band spectra ([`cmv`]);
//! * a grid classification of the unit circle into resolvent set and
//!   spectrum candidates, with a Lebesgue-measure estimate ([`spectrum`]);
//! * Boshernitzan-condition diagnostics from empirical cylinder
//!   frequencies ([`boshernitzan`]) and the continued-fraction tests for
//!   rotation codings ([`rotations`]).

pub mod boshernitzan;
pub mod cmv;
pub mod cocycle;
pub mod error;
pub mod mat2;
pub mod rotations;
pub mod spectrum;
pub mod symbolic;
pub mod verblunsky;

pub use error::{Error, Result};

/// Format a float with 17 significant digits, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
