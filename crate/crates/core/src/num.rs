//! Extended reals for the max-plus semiring: ℝ ∪ {-∞} with ⊕ = max, ⊗ = +.
//!
//! `Bottom` (-∞) is the semiring zero: absorbing for `add` and neutral for
//! `max`. The finite payload is kept NaN-free by construction so ordinary
//! comparisons are total.

use core::cmp::Ordering;
use core::fmt;

/// A max-plus scalar: either a finite real or the bottom element -∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Bottom,
    Finite(f64),
}

pub use ExtReal::{Bottom, Finite};

impl ExtReal {
    pub fn finite(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "ExtReal payload must not be NaN");
        debug_assert!(v.is_finite(), "use Bottom for -inf; +inf is not an ExtReal");
        Finite(v)
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, Bottom)
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Bottom => None,
            Finite(v) => Some(v),
        }
    }

    /// Semiring multiplication: ordinary +, with -∞ absorbing.
    pub fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            _ => Bottom,
        }
    }

    /// Semiring addition: max, with -∞ neutral.
    pub fn max(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (Bottom, r) => r,
            (l, Bottom) => l,
            (Finite(a), Finite(b)) => Finite(if a >= b { a } else { b }),
        }
    }

    /// `self - t` for a finite shift `t`.
    pub fn sub_f64(self, t: f64) -> ExtReal {
        match self {
            Bottom => Bottom,
            Finite(a) => Finite(a - t),
        }
    }

    /// `self + t` for a finite shift `t`.
    pub fn add_f64(self, t: f64) -> ExtReal {
        match self {
            Bottom => Bottom,
            Finite(a) => Finite(a + t),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let ord = match (self, other) {
            (Bottom, Bottom) => Ordering::Equal,
            (Bottom, Finite(_)) => Ordering::Less,
            (Finite(_), Bottom) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b)?,
        };
        Some(ord)
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            Bottom
        } else {
            ExtReal::finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bottom => write!(f, "-inf"),
            Finite(v) => write!(f, "{v}"),
        }
    }
}

/// Max of an iterator of ExtReal, Bottom when empty.
pub fn sup<I: IntoIterator<Item = ExtReal>>(iter: I) -> ExtReal {
    iter.into_iter().fold(Bottom, ExtReal::max)
}
