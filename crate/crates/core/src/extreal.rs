//! Nonnegative extended reals, `[0, +∞]`.
//!
//! `+∞` is encoded by the single sentinel `f64::INFINITY`. Values are never
//! NaN and never negative, so ordering is total.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[repr(transparent)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    /// Wraps a value, clamping tiny negative round-off to zero.
    ///
    /// Panics on NaN or on values below `-1e-9`; those are caller bugs, not data.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "ExtReal cannot hold NaN");
        assert!(value >= -1e-9, "ExtReal must be nonnegative, got {value}");
        ExtReal(value.max(0.0))
    }

    /// Like [`ExtReal::new`] but returns `None` instead of panicking.
    pub fn try_new(value: f64) -> Option<Self> {
        if value.is_nan() || value < -1e-9 {
            None
        } else {
            Some(ExtReal(value.max(0.0)))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0 != f64::INFINITY
    }

    /// Finite value or `None` for `+∞`.
    #[inline]
    pub fn finite(self) -> Option<f64> {
        if self.is_finite() {
            Some(self.0)
        } else {
            None
        }
    }

    /// Multiplication by a nonnegative scalar with `0·∞ = 0`.
    pub fn scale(self, t: f64) -> Self {
        assert!(t >= 0.0, "scale factor must be nonnegative");
        if t == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal(self.0 * t)
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    #[inline]
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: f64) -> ExtReal {
        self.scale(rhs)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("ExtReal is never NaN")
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_addition() {
        assert_eq!(ExtReal::new(3.0) + ExtReal::INFINITY, ExtReal::INFINITY);
        assert!(ExtReal::new(1e300) < ExtReal::INFINITY);
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::INFINITY.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::INFINITY.scale(2.0), ExtReal::INFINITY);
    }

    #[test]
    fn roundoff_is_clamped() {
        assert_eq!(ExtReal::new(-1e-15).value(), 0.0);
        assert!(ExtReal::try_new(-1.0).is_none());
        assert!(ExtReal::try_new(f64::NAN).is_none());
    }
}
