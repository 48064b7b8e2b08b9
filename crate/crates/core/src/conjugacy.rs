//! The Moreau conjugacy (Bf)_x = sup_y (b_{xy} - f_y) and its transpose,
//! evaluated over windows with exactness certificates.
//!
//! Candidates inside an enlarged evaluation window are scanned directly; the
//! contribution of the infinitely many remaining indices is bounded by
//! sup{b_{xy} : y outside} - inf{f_y : y outside}, both in closed form. A
//! value is `Exact` when some in-window candidate strictly beats that tail
//! bound; otherwise the true supremum is certified to lie in
//! [value, value + ε]. Non-attained suprema (tail limits) are first-class:
//! they surface as `WithinEps` with an empty argmax, never as an error or a
//! wrong `Exact`.

use alloc::vec::Vec;

use crate::func::Func;
use crate::kernel::Kernel;
use crate::num::{Bottom, ExtReal, Finite};
use crate::space::{IndexSet, Window};
use crate::Verdict;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertStatus {
    Exact,
    /// True supremum lies in [value, value + ε].
    WithinEps(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedValue {
    pub value: f64,
    pub status: CertStatus,
    /// In-window indices attaining the supremum; empty unless Exact.
    pub argmax: Vec<i64>,
}

impl CertifiedValue {
    pub fn eps(&self) -> f64 {
        match self.status {
            CertStatus::Exact => 0.0,
            CertStatus::WithinEps(e) => e,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.status, CertStatus::Exact)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.eps()
    }
}

/// A function known on a window with certificates, plus bounds valid
/// everywhere outside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct CertFunc {
    pub window: Window,
    pub values: Vec<CertifiedValue>,
    /// Lower/upper bounds on the true function outside `window`;
    /// (+∞, -∞) when the window covers the whole index set.
    pub lower_outside: f64,
    pub upper_outside: f64,
}

impl CertFunc {
    pub fn at(&self, x: i64) -> &CertifiedValue {
        &self.values[self.window.offset(x)]
    }

    pub fn all_exact(&self) -> bool {
        self.values.iter().all(|v| v.is_exact())
    }

    pub fn max_eps(&self) -> f64 {
        self.values.iter().map(|v| v.eps()).fold(0.0, f64::max)
    }

    /// Lower bound valid on all of X.
    pub fn global_lower(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.value)
            .fold(self.lower_outside.min(f64::INFINITY), f64::min)
    }

    /// Upper bound valid on all of X.
    pub fn global_upper(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.upper())
            .fold(self.upper_outside.max(f64::NEG_INFINITY), f64::max)
    }

    /// Exact window values as a plain Func (zero tail). Only meaningful when
    /// the window is the full finite set or callers track window-relativity.
    pub fn to_func(&self) -> Func {
        Func::from_values(self.window, self.values.iter().map(|v| v.value).collect())
    }

    /// Wrap a plain Func as exact certified values on `window` (which must
    /// contain the Func's own window so the outside bounds are pure tail).
    pub fn from_func(f: &Func, set: &IndexSet, window: Window) -> CertFunc {
        let w = set.clip(window.union(f.window)).expect("window inside index set");
        let values = w
            .iter()
            .map(|x| CertifiedValue { value: f.eval(x), status: CertStatus::Exact, argmax: Vec::new() })
            .collect();
        let (lo, hi) = f.bounds_outside(set, w);
        CertFunc { window: w, values, lower_outside: lo, upper_outside: hi }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConjError {
    /// A supremum evaluated to -∞ (zero row/column in the scan range).
    BottomValue { x: i64 },
    /// Requested window does not meet the index set.
    EmptyWindow,
}

impl core::fmt::Display for ConjError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConjError::BottomValue { x } => write!(f, "conjugacy value is -inf at x = {x}"),
            ConjError::EmptyWindow => write!(f, "window does not meet the index set"),
        }
    }
}

/// Default enlargement: pad the requested window by its own length
/// (factor-2 cross-checking), then clip to the index set.
pub fn eval_window(k: &Kernel, requested: Window) -> Window {
    let set = k.index_set();
    let mut w = requested;
    if let Some(u) = k.irregular_region() {
        w = w.union(u);
    }
    let padded = w.pad(w.len() as i64);
    set.clip(padded).expect("padded window meets the index set")
}

/// Core evaluation: out[x] = sup_y (b_{xy} - f_y) with f known as
/// (value, eps) pairs on `e` and bounded below by `f_inf_outside` outside.
fn conjugate_core(
    k: &Kernel,
    e: Window,
    vals: &[(f64, f64)],
    f_inf_outside: f64,
    out: Window,
) -> Result<CertFunc, ConjError> {
    debug_assert_eq!(vals.len(), e.len());
    let inputs_exact = vals.iter().all(|&(_, eps)| eps == 0.0);
    let mut values = Vec::with_capacity(out.len());
    for x in out.iter() {
        let mut lower = Bottom; // attainable lower bound
        let mut upper_win = Bottom; // upper bound of the in-window part
        for (i, y) in e.iter().enumerate() {
            let bxy = k.entry(x, y);
            let (v, eps) = vals[i];
            lower = lower.max(bxy.sub_f64(v + eps));
            upper_win = upper_win.max(bxy.sub_f64(v));
        }
        // tail: sup over y outside e
        let tail_up: ExtReal = match k.row_sup_outside(x, e) {
            Bottom => Bottom,
            Finite(s) => {
                if f_inf_outside == f64::INFINITY {
                    // nothing outside (finite set covered by e)
                    Bottom
                } else {
                    Finite(s - f_inf_outside)
                }
            }
        };
        let value = match lower {
            Finite(v) => v,
            Bottom => return Err(ConjError::BottomValue { x }),
        };
        let upper = match upper_win.max(tail_up) {
            Finite(u) => u,
            Bottom => value,
        };
        let eps = (upper - value).max(0.0);
        let tail_strictly_below = match tail_up {
            Bottom => true,
            Finite(t) => t < value,
        };
        let (status, argmax) = if eps == 0.0 && tail_strictly_below && inputs_exact {
            let arg = e
                .iter()
                .enumerate()
                .filter(|&(i, y)| k.entry(x, y).sub_f64(vals[i].0) == Finite(value))
                .map(|(_, y)| y)
                .collect();
            (CertStatus::Exact, arg)
        } else {
            (CertStatus::WithinEps(eps), Vec::new())
        };
        values.push(CertifiedValue { value, status, argmax });
    }
    Ok(CertFunc { window: out, values, lower_outside: f64::INFINITY, upper_outside: f64::NEG_INFINITY })
}

/// (Bf)_x = sup_y (b_{xy} - f_y) on `window`, candidates scanned on the
/// enlarged window, tail certified from the kernel envelope and the tail
/// of f.
pub fn apply_b(k: &Kernel, f: &Func, window: Window) -> Result<CertFunc, ConjError> {
    let set = k.index_set();
    let out = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e = eval_window(k, out.union(f.window));
    let vals: Vec<(f64, f64)> = e.iter().map(|y| (f.eval(y), 0.0)).collect();
    let (f_lo, _) = f.bounds_outside(&set, e);
    let mut cf = conjugate_core(k, e, &vals, f_lo, out)?;
    set_outside_bounds_b(k, f_lo, f.global_bounds(&set), &mut cf);
    Ok(cf)
}

/// Bounds on (Bf)_x valid for every x (used when the result feeds another
/// conjugacy): (Bf)_x ≥ b_xx - f_x and (Bf)_x ≤ sup b - inf f.
fn set_outside_bounds_b(k: &Kernel, _f_lo: f64, f_bounds: (f64, f64), cf: &mut CertFunc) {
    let (f_glo, f_ghi) = f_bounds;
    cf.lower_outside = match k.diag_inf() {
        Finite(d) => d - f_ghi,
        Bottom => f64::NEG_INFINITY,
    };
    cf.upper_outside = match k.global_sup() {
        Finite(s) => s - f_glo,
        Bottom => f64::NEG_INFINITY,
    };
}

/// (Bᵀg)_y = sup_x (b_{xy} - g_x): the transpose conjugacy.
pub fn apply_bt(k: &Kernel, g: &Func, window: Window) -> Result<CertFunc, ConjError> {
    apply_b(&k.transpose(), g, window)
}

/// Conjugacy applied to an already-certified function (for compositions).
pub fn apply_b_cert(k: &Kernel, h: &CertFunc, window: Window) -> Result<CertFunc, ConjError> {
    let set = k.index_set();
    let out = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e = h.window;
    debug_assert!(e.lo <= out.lo && e.hi >= out.hi, "candidate window must cover the output window");
    let vals: Vec<(f64, f64)> = h.values.iter().map(|v| (v.value, v.eps())).collect();
    let mut cf = conjugate_core(k, e, &vals, h.lower_outside, out)?;
    cf.lower_outside = match k.diag_inf() {
        Finite(d) => d - h.global_upper(),
        Bottom => f64::NEG_INFINITY,
    };
    cf.upper_outside = match k.global_sup() {
        Finite(s) => s - h.global_lower(),
        Bottom => f64::NEG_INFINITY,
    };
    Ok(cf)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaloisReport {
    pub verdict: Verdict,
    /// max |(BBᵀB f)_x - (Bf)_x| over the window (0 when Holds).
    pub max_gap: f64,
    pub window: Window,
}

/// Check B∘Bᵀ∘B f = B f pointwise on `window`. All three layers must be
/// certified Exact for a decisive verdict; any WithinEps link yields
/// Inconclusive, never Fails.
pub fn galois_check(k: &Kernel, f: &Func, window: Window) -> Result<GaloisReport, ConjError> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e1 = eval_window(k, w0);
    let e2 = eval_window(k, e1);
    let h1 = apply_b(k, f, e2)?;
    let h2 = apply_b_cert(&k.transpose(), &h1, e1)?;
    let h3 = apply_b_cert(k, &h2, w0)?;
    let mut max_gap = 0.0f64;
    let mut decisive = true;
    for x in w0.iter() {
        let a = h1.at(x);
        let b = h3.at(x);
        if a.is_exact() && b.is_exact() {
            max_gap = max_gap.max((a.value - b.value).abs());
        } else {
            decisive = false;
        }
    }
    let verdict = if decisive {
        Verdict::from_bool(max_gap == 0.0)
    } else {
        Verdict::Inconclusive
    };
    Ok(GaloisReport { verdict, max_gap, window: w0 })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome {
    /// f = Bᵀg solves Bf = g on the window.
    Solution { f: CertFunc, residual: f64 },
    /// No solution: ∂ᵀg(x) = ∅, i.e. (BBᵀg)_x < g_x.
    NoSolution { witness_x: i64, gap: f64 },
    /// Certification gaps prevent a decisive answer.
    Inconclusive { max_eps: f64 },
}

/// Solve Bf = g via the pseudo-inverse candidate f = Bᵀg: by the Galois
/// property any solution implies Bᵀg is one, so it suffices to test that
/// candidate.
pub fn solve_equation(k: &Kernel, g: &Func, window: Window) -> Result<SolveOutcome, ConjError> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e1 = eval_window(k, w0);
    let f = apply_bt(k, g, e1)?;
    let bf = apply_b_cert(k, &f, w0)?;
    if !f.all_exact() || !bf.all_exact() {
        return Ok(SolveOutcome::Inconclusive { max_eps: f.max_eps().max(bf.max_eps()) });
    }
    // g ≥ BBᵀg always; a strict drop witnesses emptiness of ∂ᵀg there
    for x in w0.iter() {
        let got = bf.at(x).value;
        let want = g.eval(x);
        if got != want {
            return Ok(SolveOutcome::NoSolution { witness_x: x, gap: want - got });
        }
    }
    Ok(SolveOutcome::Solution { f, residual: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::Tail;
    use crate::kernel::{k2, reciprocal_kernel};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn w(lo: i64, hi: i64) -> Window {
        Window::new(lo, hi)
    }

    #[test]
    fn zero_function_on_diagonal_kernel() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let full = w(0, 1);
        let bf = apply_b(&k, &Func::zero(full), full).unwrap();
        assert!(bf.all_exact());
        assert_eq!(bf.at(0).value, 0.0);
        assert_eq!(bf.at(1).value, 0.0);
        assert_eq!(bf.at(0).argmax, vec![0]);
        assert_eq!(bf.at(1).argmax, vec![1]);
    }

    #[test]
    fn hand_enumerated_three_by_three() {
        let k = Kernel::from_rows(&[
            &[0.0, 0.0, -1.0],
            &[-1.0, 0.0, -1.0],
            &[-1.0, -1.0, 0.0],
        ]);
        let full = w(0, 2);
        let f = Func::from_values(full, alloc::vec![1.0, 0.0, 0.0]);
        let bf = apply_b(&k, &f, full).unwrap();
        assert_eq!(
            bf.values.iter().map(|v| v.value).collect::<Vec<_>>(),
            alloc::vec![0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn transpose_example_from_k2() {
        let full = w(0, 2);
        let g = Func::from_values(full, alloc::vec![0.0, -0.25, 0.0]);
        let btg = apply_bt(&k2(), &g, full).unwrap();
        assert!(btg.all_exact());
        assert_eq!(
            btg.values.iter().map(|v| v.value).collect::<Vec<_>>(),
            alloc::vec![0.0, 0.25, 0.0]
        );
    }

    #[test]
    fn transpose_consistency_random() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..100 {
            let n = 2 + rng.gen::<usize>() % 4;
            let rows: Vec<Vec<ExtReal>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            if rng.gen_ratio(1, 7) {
                                Bottom
                            } else {
                                ExtReal::finite(rng.gen_range(-6..=6) as f64)
                            }
                        })
                        .collect()
                })
                .collect();
            // ensure ZC rows/cols to avoid BottomValue
            let mut rows = rows;
            for i in 0..n {
                rows[i][i] = ExtReal::finite(0.0);
            }
            let k = Kernel::finite(rows).unwrap();
            let full = w(0, n as i64 - 1);
            let g = Func::from_values(
                full,
                (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect(),
            );
            let lhs = apply_bt(&k, &g, full).unwrap();
            let rhs = apply_b(&k.transpose(), &g, full).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn galois_identity_on_finite_kernels() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let full = w(0, 1);
        let f = Func::from_values(full, alloc::vec![5.0, -3.0]);
        let r = galois_check(&k, &f, full).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);

        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let n = 2 + rng.gen::<usize>() % 4;
            let rows: Vec<Vec<ExtReal>> = (0..n)
                .map(|_| (0..n).map(|_| ExtReal::finite(rng.gen_range(-5..=5) as f64)).collect())
                .collect();
            let k = Kernel::finite(rows).unwrap();
            let full = w(0, n as i64 - 1);
            let f = Func::from_values(full, (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect());
            let r = galois_check(&k, &f, full).unwrap();
            assert_eq!(r.verdict, Verdict::Holds);
        }
    }

    #[test]
    fn galois_inconclusive_on_reciprocal_tail() {
        let ce = reciprocal_kernel();
        let f = Func::from_tail(Tail::PowerDecay { c: 1.0, q: 2.0 });
        let r = galois_check(&ce, &f, w(0, 20)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn counterexample_sup_not_attained() {
        // h_x = 1/(x+1)^2: (Bh)_x = 0, not attained; certified within eps
        let ce = reciprocal_kernel();
        let h = Func::from_tail(Tail::PowerDecay { c: 1.0, q: 2.0 });
        let n = 50;
        let bh = apply_b(&ce, &h, w(0, n)).unwrap();
        for x in 0..=n {
            let cv = bh.at(x);
            assert!(!cv.is_exact());
            assert!(cv.argmax.is_empty());
            // true sup 0 ∈ [value, value + eps], eps ≤ 2/N
            assert!(cv.value <= 0.0 && cv.upper() >= 0.0, "x = {x}");
            assert!(cv.eps() <= 2.0 / n as f64, "x = {x}: eps = {}", cv.eps());
        }
    }

    #[test]
    fn within_eps_is_sound_against_brute_force() {
        // brute-force sup over a much larger window never exceeds value + eps
        let ce = reciprocal_kernel();
        let h = Func::from_tail(Tail::PowerDecay { c: 1.0, q: 2.0 });
        let bh = apply_b(&ce, &h, w(0, 30)).unwrap();
        for x in 0..=30 {
            let mut brute = f64::NEG_INFINITY;
            for y in 0..4000 {
                if let Finite(b) = ce.entry(x, y) {
                    brute = brute.max(b - h.eval(y));
                }
            }
            let cv = bh.at(x);
            assert!(brute <= cv.upper() + 1e-15);
            assert!(brute >= cv.value - 1e-15);
        }
    }

    #[test]
    fn antitone_and_closure_inequalities() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..100 {
            let n = 2 + rng.gen::<usize>() % 5;
            let rows: Vec<Vec<ExtReal>> = (0..n)
                .map(|_| (0..n).map(|_| ExtReal::finite(rng.gen_range(-5..=5) as f64)).collect())
                .collect();
            let k = Kernel::finite(rows).unwrap();
            let full = w(0, n as i64 - 1);
            let fv: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
            let f = Func::from_values(full, fv.clone());
            // f' ≥ f pointwise ⇒ Bf' ≤ Bf
            let bump: Vec<f64> = fv.iter().map(|v| v + rng.gen_range(0..=3) as f64).collect();
            let fp = Func::from_values(full, bump);
            let bf = apply_b(&k, &f, full).unwrap();
            let bfp = apply_b(&k, &fp, full).unwrap();
            for x in full.iter() {
                assert!(bfp.at(x).value <= bf.at(x).value);
            }
            // g ≥ B Bᵀ g
            let g = Func::from_values(full, (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect());
            let btg = apply_bt(&k, &g, full).unwrap();
            let bbtg = apply_b_cert(&k, &btg, full).unwrap();
            for x in full.iter() {
                assert!(bbtg.at(x).value <= g.eval(x) + 1e-12);
            }
        }
    }

    #[test]
    fn solve_equation_examples() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let full = w(0, 1);
        match solve_equation(&k, &Func::zero(full), full).unwrap() {
            SolveOutcome::Solution { f, residual } => {
                assert_eq!(residual, 0.0);
                assert_eq!(f.at(0).value, 0.0);
                assert_eq!(f.at(1).value, 0.0);
            }
            other => panic!("expected solution, got {other:?}"),
        }

        let k = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let g = Func::from_values(full, alloc::vec![0.0, -1.0]);
        match solve_equation(&k, &g, full).unwrap() {
            SolveOutcome::NoSolution { witness_x, gap } => {
                assert_eq!(witness_x, 0);
                assert_eq!(gap, 1.0);
            }
            other => panic!("expected no solution, got {other:?}"),
        }

        let g = Func::from_values(w(0, 2), alloc::vec![0.0, -0.25, 0.0]);
        match solve_equation(&k2(), &g, w(0, 2)).unwrap() {
            SolveOutcome::Solution { f, .. } => {
                assert_eq!(
                    f.values.iter().map(|v| v.value).collect::<Vec<_>>()[..3],
                    [0.0, 0.25, 0.0]
                );
            }
            other => panic!("expected solution, got {other:?}"),
        }
    }
}
