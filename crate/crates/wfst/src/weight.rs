//! Tropical weights: costs combined with `min` across alternatives and `+`
//! along a path. Lower is better; `infinity` marks the absence of a path.

use std::cmp::Ordering;
use std::fmt;

/// A tropical-semiring weight. Stored arc weights are finite and
/// non-negative; `infinity` only appears as the zero element (no path,
/// non-final state).
#[derive(Clone, Copy)]
pub struct Weight(f64);

impl Weight {
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "weight must not be NaN");
        assert!(value >= 0.0, "weight must be non-negative, got {value}");
        Weight(value)
    }

    pub const fn infinity() -> Self {
        Weight(f64::INFINITY)
    }

    /// Multiplicative identity: zero cost.
    pub const fn one() -> Self {
        Weight(0.0)
    }

    /// Additive identity: no path.
    pub const fn zero() -> Self {
        Weight(f64::INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Choice between alternatives: `min`.
    pub fn plus(self, other: Self) -> Self {
        Weight(self.0.min(other.0))
    }

    /// Concatenation along a path: `+`.
    pub fn times(self, other: Self) -> Self {
        Weight(self.0 + other.0)
    }

    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        if self.0.is_infinite() || other.0.is_infinite() {
            self.0 == other.0
        } else {
            (self.0 - other.0).abs() <= tol
        }
    }
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "Weight(inf)")
        } else {
            write!(f, "Weight({})", self.0)
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}
