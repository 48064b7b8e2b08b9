//! The ℓ0,1 seminorms.
//!
//! ‖s‖_{0,1,M} = sup { Σ_x |s_{F(x)} - s_x| : F bijection, ρ(F,I) ≤ M }.
//! On a window this is a maximum-cost assignment with moves restricted to
//! d(x, F(x)) ≤ M, solved exactly. The simpler variant
//! ‖s‖'_{0,1,M} = Σ_x max_{d(y,x) ≤ M} |s_y - s_x| is exposed as well; the
//! two need not agree on general index sets, and no relation between them is
//! asserted here.

use alloc::vec::Vec;

use crate::assignment::max_assignment;
use crate::func::Func;
use crate::num::{Bottom, ExtReal, Finite};
use crate::space::Window;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeminormError {
    /// Window shorter than 2M+1 cannot host a ρ ≤ M move pattern.
    DegenerateWindow { len: usize, need: usize },
    BadRadius,
}

impl core::fmt::Display for SeminormError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SeminormError::DegenerateWindow { len, need } => {
                write!(f, "window of {len} points is degenerate for this radius (need ≥ {need})")
            }
            SeminormError::BadRadius => write!(f, "move radius M must be ≥ 1"),
        }
    }
}

/// ‖s‖_{0,1,M} restricted to window-supported bijections, exact.
pub fn seminorm_01(s: &Func, m: i64, window: Window) -> Result<f64, SeminormError> {
    if m < 1 {
        return Err(SeminormError::BadRadius);
    }
    let need = (2 * m + 1) as usize;
    if window.len() < need {
        return Err(SeminormError::DegenerateWindow { len: window.len(), need });
    }
    let pts = window.points();
    let vals: Vec<f64> = pts.iter().map(|&x| s.eval(x)).collect();
    let table: Vec<Vec<ExtReal>> = (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .map(|j| {
                    if (pts[j] - pts[i]).abs() <= m {
                        Finite(abs(vals[j] - vals[i]))
                    } else {
                        Bottom
                    }
                })
                .collect()
        })
        .collect();
    let (_, value) = max_assignment(&table).expect("identity is always feasible");
    Ok(value)
}

/// ‖s‖'_{0,1,M} = Σ_x max_{d(y,x) ≤ M} |s_y - s_x| over the window.
pub fn seminorm_01_simple(s: &Func, m: i64, window: Window) -> Result<f64, SeminormError> {
    if m < 1 {
        return Err(SeminormError::BadRadius);
    }
    let mut total = 0.0;
    for x in window.iter() {
        let sx = s.eval(x);
        let mut best = 0.0f64;
        for y in (x - m)..=(x + m) {
            if window.contains(y) {
                best = best.max(abs(s.eval(y) - sx));
            }
        }
        total += best;
    }
    Ok(total)
}

fn abs(v: f64) -> f64 {
    if v < 0.0 {
        -v
    } else {
        v
    }
}
