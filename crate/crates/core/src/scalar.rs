//! The scalar abstraction every probability and vector component is built on.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. Tolerances scale with the type's
/// machine epsilon so that `f32` builds keep meaningful "exact" checks.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for claims that hold exactly in real arithmetic: `1e-12`
    /// for `f64`, a few hundred ulps for narrower types.
    fn exact_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }

    /// Tolerance for comparing two analytic routes: `1e-9` for `f64`.
    fn analytic_tol() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(256.0))
    }

    /// Slack under which two maxima are considered tied (rounding noise).
    fn tie_slack(reference: Self) -> Self {
        Self::epsilon() * Self::lit(8.0) * reference.abs().max(Self::one())
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_track_precision() {
        assert_eq!(f64::exact_tol(), 1e-12);
        assert_eq!(f64::analytic_tol(), 1e-9);
        assert!(f32::exact_tol() > 1e-6);
        assert!(f32::exact_tol() < 1e-4);
    }
}
