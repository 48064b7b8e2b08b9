//! Real-valued functions on the index set: explicit values on a window plus
//! a parametric tail, so that suprema and series over the whole of X stay
//! certifiable in closed form.
//!
//! Supported tails: identically zero, constant, and power decay
//! c·(|x|+1)^(-q). All three are bounded and have a limit at infinity, so
//! every representable function lies in ℓ∞ and ℓ0 by construction; ℓ1 and
//! the finer diagnostics depend on the parameters. Power decay with q > 0
//! always has summable increments (the exponent of the difference series is
//! q+1 > 1), hence lies in ℓ0,1.

use alloc::vec;
use alloc::vec::Vec;

use crate::bijection::Bijection;
use crate::space::{IndexKind, IndexSet, Window};

fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Tail model outside the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    Zero,
    Constant(f64),
    /// c·(|x|+1)^(-q) with q > 0.
    PowerDecay { c: f64, q: f64 },
}

impl Tail {
    pub fn eval(&self, x: i64) -> f64 {
        match *self {
            Tail::Zero => 0.0,
            Tail::Constant(c) => c,
            Tail::PowerDecay { c, q } => c * powf(x.unsigned_abs() as f64 + 1.0, -q),
        }
    }

    pub fn limit_at_infinity(&self) -> f64 {
        match *self {
            Tail::Zero => 0.0,
            Tail::Constant(c) => c,
            Tail::PowerDecay { .. } => 0.0,
        }
    }

    fn negate(&self) -> Tail {
        match *self {
            Tail::Zero => Tail::Zero,
            Tail::Constant(c) => Tail::Constant(-c),
            Tail::PowerDecay { c, q } => Tail::PowerDecay { c: -c, q },
        }
    }

    /// Bounds of the tail over one infinite ray whose nearest absolute
    /// position is `min_abs`. Returns (inf, sup); limits count as bounds.
    fn ray_bounds(&self, min_abs: i64) -> (f64, f64) {
        match *self {
            Tail::Zero => (0.0, 0.0),
            Tail::Constant(c) => (c, c),
            Tail::PowerDecay { c, q } => {
                let near = c * powf(min_abs as f64 + 1.0, -q);
                if c >= 0.0 {
                    (0.0, near)
                } else {
                    (near, 0.0)
                }
            }
        }
    }
}

/// Sequence-space labels, ordered by inclusion ℓ1 ⊂ ℓ0,1 ⊂ ℓ0 ⊂ ℓ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Space {
    L1,
    L01,
    L0,
    LInf,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::L1 => "l1",
            Space::L01 => "l0,1",
            Space::L0 => "l0",
            Space::LInf => "linf",
        }
    }
}

/// A total real-valued function on X: window values + tail model.
#[derive(Clone, Debug, PartialEq)]
pub struct Func {
    pub window: Window,
    pub values: Vec<f64>,
    pub tail: Tail,
}

impl Func {
    pub fn new(window: Window, values: Vec<f64>, tail: Tail) -> Self {
        assert_eq!(values.len(), window.len(), "window/value length mismatch");
        Func { window, values, tail }
    }

    pub fn zero(window: Window) -> Self {
        Func::new(window, vec![0.0; window.len()], Tail::Zero)
    }

    pub fn from_values(window: Window, values: Vec<f64>) -> Self {
        Func::new(window, values, Tail::Zero)
    }

    /// A pure tail function with a minimal window at the basepoint.
    pub fn from_tail(tail: Tail) -> Self {
        let w = Window::new(0, 0);
        Func::new(w, vec![tail.eval(0)], tail)
    }

    pub fn eval(&self, x: i64) -> f64 {
        if self.window.contains(x) {
            self.values[self.window.offset(x)]
        } else {
            self.tail.eval(x)
        }
    }

    pub fn negate(&self) -> Func {
        Func::new(
            self.window,
            self.values.iter().map(|v| -v).collect(),
            self.tail.negate(),
        )
    }

    /// Enlarge the window, materializing tail values.
    pub fn with_window(&self, w: Window) -> Func {
        let w = self.window.union(w);
        Func::new(w, w.iter().map(|x| self.eval(x)).collect(), self.tail)
    }

    /// f + t·δ_{y0}: bump one point.
    pub fn plus_delta(&self, y0: i64, t: f64) -> Func {
        let mut out = self.with_window(Window::new(y0, y0));
        let i = out.window.offset(y0);
        out.values[i] += t;
        out
    }

    /// Pointwise sum; fails when the tail sum leaves the representable family.
    pub fn try_add(&self, other: &Func) -> Result<Func, TailError> {
        let tail = match (self.tail, other.tail) {
            (Tail::Zero, t) | (t, Tail::Zero) => t,
            (Tail::Constant(a), Tail::Constant(b)) => Tail::Constant(a + b),
            (Tail::PowerDecay { c: a, q: p }, Tail::PowerDecay { c: b, q: r }) if p == r => {
                Tail::PowerDecay { c: a + b, q: p }
            }
            _ => return Err(TailError::SumOutsideFamily),
        };
        let w = self.window.union(other.window);
        let values = w.iter().map(|x| self.eval(x) + other.eval(x)).collect();
        Ok(Func::new(w, values, tail))
    }

    /// φ∘F for a windowed bijection F. Exact: beyond the union of windows
    /// F is the identity, so the tail is unchanged.
    pub fn compose(&self, f: &Bijection) -> Func {
        let w = match f.support() {
            Some(s) => self.window.union(s),
            None => self.window,
        };
        Func::new(w, w.iter().map(|x| self.eval(f.eval(x))).collect(), self.tail)
    }

    /// (inf, sup) of the function over all of X (limits count as bounds).
    pub fn global_bounds(&self, set: &IndexSet) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let Some(w) = set.clip(self.window) {
            for x in w.iter() {
                let v = self.eval(x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let (tlo, thi) = self.bounds_outside(set, self.window);
        (lo.min(tlo), hi.max(thi))
    }

    /// (inf, sup) of the function over X ∖ E, where E ⊇ own window.
    /// Bounds are exact on infinite rays (limits included) and conservative
    /// on finite boundary segments. Returns (+inf, -inf) when E covers X.
    pub fn bounds_outside(&self, set: &IndexSet, e: Window) -> (f64, f64) {
        debug_assert!(e.lo <= self.window.lo && e.hi >= self.window.hi);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        // right side: positions > e.hi
        let right_exists = match set.kind {
            IndexKind::Finite(n) => e.hi < n as i64 - 1,
            _ => true,
        };
        if right_exists {
            // min |x| over the ray [e.hi+1, ∞)
            let min_abs = (e.hi + 1).max(0);
            let (a, b) = self.tail.ray_bounds(min_abs);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        // left side: positions < e.lo
        let left_exists = match set.kind {
            IndexKind::Finite(_) | IndexKind::Naturals => e.lo > 0,
            IndexKind::Integers => true,
        };
        if left_exists {
            // min |x| over (-∞, e.lo-1] (or its clipped finite segment)
            let min_abs = (1 - e.lo).max(0);
            let (a, b) = self.tail.ray_bounds(min_abs);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// ℓ∞ norm (exact for the tail families).
    pub fn sup_abs(&self, set: &IndexSet) -> f64 {
        let (lo, hi) = self.global_bounds(set);
        lo.abs().max(hi.abs())
    }

    /// Class-membership diagnostics for the representable family.
    pub fn in_space(&self, space: Space, set: &IndexSet) -> bool {
        if set.is_finite() {
            return true;
        }
        match space {
            // Every representable tail is bounded with a limit at infinity,
            // and has summable increments (q+1 > 1 for power decay), so
            // membership in linf, l0 and l0,1 always holds.
            Space::LInf | Space::L0 | Space::L01 => true,
            Space::L1 => match self.tail {
                Tail::Zero => true,
                Tail::Constant(c) => c == 0.0,
                Tail::PowerDecay { c, q } => c == 0.0 || q > 1.0,
            },
        }
    }

    /// Limit at infinity (the ℓ0 limit).
    pub fn l0_limit(&self) -> f64 {
        self.tail.limit_at_infinity()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailError {
    SumOutsideFamily,
}

impl core::fmt::Display for TailError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TailError::SumOutsideFamily => write!(f, "tail sum leaves the representable family"),
        }
    }
}
