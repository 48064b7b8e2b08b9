//! Index sets and windows.
//!
//! The index set X is either {0,..,n-1}, ℕ, or ℤ, carrying the metric
//! d(x,y) = |x-y| on positions. Bounded sets are finite in all three cases,
//! and #B_n - #B_{n-1} ≤ 2, as required by the ball-growth hypotheses.

use alloc::vec::Vec;
use core::fmt;

/// A contiguous inclusive range of index positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty window [{lo},{hi}]");
        Window { lo, hi }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + Clone {
        self.lo..=self.hi
    }

    pub fn points(&self) -> Vec<i64> {
        self.iter().collect()
    }

    pub fn union(&self, other: Window) -> Window {
        Window::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Pad by `r` on both sides.
    pub fn pad(&self, r: i64) -> Window {
        Window::new(self.lo - r, self.hi + r)
    }

    /// Offset of `x` within the window, for table lookups.
    pub fn offset(&self, x: i64) -> usize {
        debug_assert!(self.contains(x));
        (x - self.lo) as usize
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// The shape of the index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexKind {
    Finite(usize),
    Naturals,
    Integers,
}

/// An index set with its basepoint (used for balls B_n and for ℓ0 limits).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexSet {
    pub kind: IndexKind,
    pub basepoint: i64,
}

impl IndexSet {
    pub fn finite(n: usize) -> Self {
        assert!(n > 0, "finite index set must be nonempty");
        IndexSet { kind: IndexKind::Finite(n), basepoint: 0 }
    }

    pub fn naturals() -> Self {
        IndexSet { kind: IndexKind::Naturals, basepoint: 0 }
    }

    pub fn integers() -> Self {
        IndexSet { kind: IndexKind::Integers, basepoint: 0 }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, IndexKind::Finite(_))
    }

    pub fn contains(&self, x: i64) -> bool {
        match self.kind {
            IndexKind::Finite(n) => 0 <= x && x < n as i64,
            IndexKind::Naturals => x >= 0,
            IndexKind::Integers => true,
        }
    }

    pub fn dist(&self, x: i64, y: i64) -> i64 {
        (x - y).abs()
    }

    /// Clip a window to the index set; `None` when the intersection is empty.
    pub fn clip(&self, w: Window) -> Option<Window> {
        let (lo, hi) = match self.kind {
            IndexKind::Finite(n) => (w.lo.max(0), w.hi.min(n as i64 - 1)),
            IndexKind::Naturals => (w.lo.max(0), w.hi),
            IndexKind::Integers => (w.lo, w.hi),
        };
        (lo <= hi).then(|| Window::new(lo, hi))
    }

    /// The ball B_n of radius `n` around the basepoint, clipped to X.
    pub fn ball(&self, n: i64) -> Window {
        self.clip(Window::new(self.basepoint - n, self.basepoint + n))
            .expect("ball around basepoint is nonempty")
    }

    /// The whole set for finite X.
    pub fn full(&self) -> Option<Window> {
        match self.kind {
            IndexKind::Finite(n) => Some(Window::new(0, n as i64 - 1)),
            _ => None,
        }
    }
}
