//! Subdifferentials, coverings by inverse subdifferentials, minimality, and
//! the strong-regularity decision with constructive witnesses.
//!
//! ∂f(y) = {x : b_{xy} ≠ -∞, (Bf)_x = b_{xy} - f_y} and the transpose
//! variant ∂ᵀg(x). For g with f = Bᵀg: f solves Bf = g iff the sets
//! (∂ᵀg)^{-1}(y) cover X, uniquely iff the covering is minimal; an
//! inessential y₀ yields the explicit second solution f + δ_{y₀}. A
//! positive decision extracts the bijection F from the singleton
//! subdifferentials and reports the strict margin of
//! b_{xF(x)} = g_x + f_{F(x)}.
//!
//! Membership tests demand value-certain conjugacy evaluations (ε = 0);
//! anything blurrier degrades to uncertain flags, never to a wrong verdict.
//! Countable-kernel verdicts are window-relative and say so.

use alloc::vec::Vec;

use crate::assignment;
use crate::conjugacy::{apply_b, apply_b_cert, apply_bt, eval_window, CertFunc, ConjError};
use crate::func::{Func, Space};
use crate::kernel::Kernel;
use crate::num::{Bottom, Finite};
use crate::perestroika::{self, PerestroikaOptions, PerestroikaOutcome};
use crate::similarity;
use crate::space::Window;
use crate::bijection::Bijection;

#[derive(Clone, Debug, PartialEq)]
pub struct SubdiffSet {
    /// The point the subdifferential is taken at.
    pub at: i64,
    pub members: Vec<i64>,
    /// Points whose membership a WithinEps certificate cannot settle.
    pub uncertain: Vec<i64>,
}

/// ∂f(y) over x in `window`.
pub fn subdiff(k: &Kernel, f: &Func, y: i64, window: Window) -> Result<SubdiffSet, ConjError> {
    let bf = apply_b(k, f, window)?;
    let fy = f.eval(y);
    let mut members = Vec::new();
    let mut uncertain = Vec::new();
    for x in bf.window.iter() {
        let bxy = k.entry(x, y);
        if bxy.is_bottom() {
            continue;
        }
        let cand = bxy.sub_f64(fy);
        let cv = bf.at(x);
        if cv.eps() == 0.0 {
            if cand == Finite(cv.value) {
                members.push(x);
            }
        } else if let Finite(c) = cand {
            if c >= cv.value && c <= cv.upper() {
                uncertain.push(x);
            } else if c == cv.value {
                uncertain.push(x);
            }
        }
    }
    Ok(SubdiffSet { at: y, members, uncertain })
}

/// ∂ᵀg(x) over y in `window`.
pub fn subdiff_t(k: &Kernel, g: &Func, x: i64, window: Window) -> Result<SubdiffSet, ConjError> {
    let mut s = subdiff(&k.transpose(), g, x, window)?;
    s.at = x;
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Applicability {
    Holds,
    Fails,
    /// The precondition g = BBᵀg does not hold.
    Inapplicable,
    Inconclusive,
}

/// Prop-2.1-style identity: when g = BBᵀg, the inverse of x ↦ ∂ᵀg(x) is
/// y ↦ ∂(Bᵀg)(y). Returns Inapplicable when the precondition fails.
pub fn inverse_subdiff_identity_check(
    k: &Kernel,
    g: &Func,
    window: Window,
) -> Result<Applicability, ConjError> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e1 = eval_window(k, w0.union(g.window));
    let f = apply_bt(k, g, e1)?;
    let bf = apply_b_cert(k, &f, w0)?;
    if f.max_eps() > 0.0 || bf.max_eps() > 0.0 {
        return Ok(Applicability::Inconclusive);
    }
    for x in w0.iter() {
        if bf.at(x).value != g.eval(x) {
            return Ok(Applicability::Inapplicable);
        }
    }
    let bf_e = apply_b_cert(k, &f, e1)?;
    if bf_e.max_eps() > 0.0 {
        return Ok(Applicability::Inconclusive);
    }
    for y in w0.iter() {
        let fy = f.at(y).value;
        for x in w0.iter() {
            let bxy = k.entry(x, y);
            if bxy.is_bottom() {
                continue;
            }
            // x ∈ (∂ᵀg)^{-1}(y) ⟺ b_{xy} - g_x = (Bᵀg)_y
            let lhs = bxy.sub_f64(g.eval(x)) == Finite(fy);
            // x ∈ ∂(Bᵀg)(y) ⟺ (Bf)_x = b_{xy} - f_y
            let rhs = bxy.sub_f64(fy) == Finite(bf_e.at(x).value);
            if lhs != rhs {
                return Ok(Applicability::Fails);
            }
        }
    }
    Ok(Applicability::Holds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Covering {
    pub window: Window,
    /// f = Bᵀg on the evaluation window.
    pub f: CertFunc,
    /// S_y = (∂ᵀg)^{-1}(y) ∩ window for y in the window.
    pub sets: Vec<(i64, Vec<i64>)>,
    /// Every window point lies in some S_y.
    pub covers: bool,
    pub essential: Vec<(i64, bool)>,
    /// All y essential (window-relative for countable kernels).
    pub minimal: bool,
    /// Some membership could not be settled exactly.
    pub uncertain: bool,
}

/// The covering of the window by the sets (∂ᵀg)^{-1}(y).
pub fn build_covering(k: &Kernel, g: &Func, window: Window) -> Result<Covering, ConjError> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(ConjError::EmptyWindow)?;
    let e1 = eval_window(k, w0.union(g.window));
    let f = apply_bt(k, g, e1)?;
    let uncertain = f.max_eps() > 0.0;
    let mut sets = Vec::new();
    let n = w0.len();
    let mut cover_count = alloc::vec![0usize; n];
    for y in w0.iter() {
        let fy = f.at(y).value;
        let mut members = Vec::new();
        for x in w0.iter() {
            let bxy = k.entry(x, y);
            if bxy.is_bottom() {
                continue;
            }
            if bxy.sub_f64(g.eval(x)) == Finite(fy) {
                cover_count[w0.offset(x)] += 1;
                members.push(x);
            }
        }
        sets.push((y, members));
    }
    let covers = cover_count.iter().all(|&c| c > 0);
    let essential: Vec<(i64, bool)> = sets
        .iter()
        .map(|(y, members)| {
            let ess = members.iter().any(|&x| cover_count[w0.offset(x)] == 1);
            (*y, ess)
        })
        .collect();
    let minimal = covers && essential.iter().all(|(_, e)| *e);
    Ok(Covering { window: w0, f, sets, covers, essential, minimal, uncertain })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SecondSolutionError {
    /// y0 is essential: removing it breaks the covering.
    Essential { y0: i64 },
    NotCovering,
    UncertainCovering,
    Conj(ConjError),
    /// Constructed h failed verification (certification too loose).
    VerificationFailed { max_residual: f64 },
}

impl core::fmt::Display for SecondSolutionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SecondSolutionError::Essential { y0 } => write!(f, "y0 = {y0} is essential"),
            SecondSolutionError::NotCovering => write!(f, "the sets do not cover the window"),
            SecondSolutionError::UncertainCovering => write!(f, "covering memberships are uncertain"),
            SecondSolutionError::Conj(e) => write!(f, "{e}"),
            SecondSolutionError::VerificationFailed { max_residual } => {
                write!(f, "second solution failed verification (residual {max_residual})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecondSolution {
    pub h: Func,
    /// max certified deviation of Bh from g on the window (0 = exact).
    pub residual: f64,
}

/// The constructive non-uniqueness witness h = Bᵀg + δ_{y0} for an
/// inessential y0. Verified by evaluating Bh before returning.
pub fn second_solution(
    k: &Kernel,
    g: &Func,
    covering: &Covering,
    y0: i64,
) -> Result<SecondSolution, SecondSolutionError> {
    if covering.uncertain {
        return Err(SecondSolutionError::UncertainCovering);
    }
    if !covering.covers {
        return Err(SecondSolutionError::NotCovering);
    }
    match covering.essential.iter().find(|(y, _)| *y == y0) {
        Some((_, true)) => return Err(SecondSolutionError::Essential { y0 }),
        Some((_, false)) => {}
        None => return Err(SecondSolutionError::Essential { y0 }),
    }
    let h = covering.f.to_func().plus_delta(y0, 1.0);
    let bh = apply_b(k, &h, covering.window).map_err(SecondSolutionError::Conj)?;
    let mut max_residual = 0.0f64;
    for x in covering.window.iter() {
        let cv = bh.at(x);
        let dev = (cv.value - g.eval(x)).abs().max(cv.eps());
        max_residual = max_residual.max(dev);
    }
    if max_residual > 0.0 {
        return Err(SecondSolutionError::VerificationFailed { max_residual });
    }
    Ok(SecondSolution { h, residual: max_residual })
}

// ---- the strong regularity decision ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    UserProvided(usize),
    Zero,
    Perestroika,
    AssignmentDuals,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityCertificate {
    pub g: Func,
    /// f = Bᵀg as window values.
    pub f: Func,
    pub bijection: Bijection,
    /// Strict margin of the tight inequalities, tail bounds included.
    pub margin: f64,
    /// max d(x, F(x)) over the window.
    pub displacement: i64,
    pub g_in_space: bool,
    pub f_in_space: bool,
    /// Condition (iii): g is also the unique solution on the transpose
    /// side (dual subdifferentials are singletons). Checked explicitly,
    /// reported separately; automatic for finite X.
    pub dual_condition: bool,
    pub source: CandidateSource,
    pub space: Space,
    pub window: Window,
    pub window_relative: bool,
    pub tc_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refutation {
    /// Two distinct solutions of Bh = g for the recorded witness g.
    SecondSolution { g: Func, f: Func, h: Func, residual: f64 },
    /// Two optimal permutations (finite kernels).
    SecondOptimalAssignment { optimal: Vec<usize>, second: Vec<usize>, value: f64 },
    /// No permutation avoids -∞ entries.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefutationRecord {
    pub kind: Refutation,
    pub window: Window,
    pub window_relative: bool,
    pub tc_holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CandidateFail {
    /// Conjugacy values not certified to ε = 0.
    NotCertifiable,
    /// B(Bᵀg) ≠ g at x.
    NotASolution { x: i64 },
    TightSetNotSingleton { x: i64, size: usize },
    DualSetNotSingleton { y: i64, size: usize },
    NotBijective,
    MarginNotPositive { delta: f64 },
    SpaceViolation,
    /// The candidate could not be constructed (e.g. peeling finding).
    Unavailable,
    ConjFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoWitness {
    pub tried: Vec<(CandidateSource, CandidateFail)>,
    pub window: Window,
    pub tc_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegularityOutcome {
    Certified(RegularityCertificate),
    Refuted(RefutationRecord),
    /// All candidates failed: not a refutation.
    Inconclusive(NoWitness),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecideError {
    /// Condition (ZC) fails: some row or column is max-plus zero.
    ZcFails,
    EmptyWindow,
}

impl core::fmt::Display for DecideError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DecideError::ZcFails => write!(f, "condition ZC fails"),
            DecideError::EmptyWindow => write!(f, "window does not meet the index set"),
        }
    }
}

/// Certify one witness candidate g on the window.
fn certify_candidate(
    k: &Kernel,
    g: &Func,
    window: Window,
    space: Space,
    source: CandidateSource,
) -> Result<RegularityCertificate, CandidateFail> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(CandidateFail::ConjFailed)?;
    let e1 = eval_window(k, w0.union(g.window));
    let f = apply_bt(k, g, e1).map_err(|_| CandidateFail::ConjFailed)?;
    if f.max_eps() > 0.0 {
        return Err(CandidateFail::NotCertifiable);
    }
    let bf = apply_b_cert(k, &f, e1).map_err(|_| CandidateFail::ConjFailed)?;
    if bf.max_eps() > 0.0 {
        return Err(CandidateFail::NotCertifiable);
    }
    for x in w0.iter() {
        if bf.at(x).value != g.eval(x) {
            return Err(CandidateFail::NotASolution { x });
        }
    }
    // tight sets over the evaluation window; both sides must be singletons
    let mut fmap: Vec<i64> = Vec::with_capacity(w0.len());
    for x in w0.iter() {
        let gx = g.eval(x);
        let mut tight: Vec<i64> = Vec::new();
        for y in e1.iter() {
            if k.entry(x, y).sub_f64(gx) == Finite(f.at(y).value) {
                tight.push(y);
            }
        }
        if tight.len() != 1 {
            return Err(CandidateFail::TightSetNotSingleton { x, size: tight.len() });
        }
        fmap.push(tight[0]);
    }
    for y in w0.iter() {
        let fy = f.at(y).value;
        let mut dual: Vec<i64> = Vec::new();
        for x in e1.iter() {
            if k.entry(x, y).sub_f64(fy) == Finite(bf.at(x).value) {
                dual.push(x);
            }
        }
        if dual.len() != 1 {
            return Err(CandidateFail::DualSetNotSingleton { y, size: dual.len() });
        }
        // Eq. (2.1) consistency: ∂f(y) = {x} ⟺ ∂ᵀg(x) = {y}
        let x = dual[0];
        if w0.contains(x) && fmap[w0.offset(x)] != y {
            return Err(CandidateFail::NotBijective);
        }
    }
    // F must map the window onto itself
    if fmap.iter().any(|y| !w0.contains(*y)) {
        return Err(CandidateFail::NotBijective);
    }
    let bijection = Bijection::from_images(w0, fmap.clone()).map_err(|_| CandidateFail::NotBijective)?;
    // strict margins, tail bounds included
    let mut margin = f64::INFINITY;
    let (g_out_lo, _) = g.bounds_outside(&set, e1);
    for x in w0.iter() {
        let gx = g.eval(x);
        let fx_target = bijection.eval(x);
        // row: g_x - sup_{z ≠ F(x)} (b_{xz} - f_z)
        let mut second = Bottom;
        for z in e1.iter() {
            if z != fx_target {
                second = second.max(k.entry(x, z).sub_f64(f.at(z).value));
            }
        }
        let tail = match k.row_sup_outside(x, e1) {
            Bottom => Bottom,
            Finite(s) => {
                if f.lower_outside == f64::INFINITY {
                    Bottom
                } else {
                    Finite(s - f.lower_outside)
                }
            }
        };
        if let Finite(v) = second.max(tail) {
            margin = margin.min(gx - v);
        }
        // column at y = F(x): f_y - sup_{z ≠ x} (b_{zy} - g_z)
        let y = fx_target;
        let fy = f.at(y).value;
        let mut second = Bottom;
        for z in e1.iter() {
            if z != x {
                second = second.max(k.entry(z, y).sub_f64(g.eval(z)));
            }
        }
        let tail = match k.col_sup_outside(y, e1) {
            Bottom => Bottom,
            Finite(s) => {
                if g_out_lo == f64::INFINITY {
                    Bottom
                } else {
                    Finite(s - g_out_lo)
                }
            }
        };
        if let Finite(v) = second.max(tail) {
            margin = margin.min(fy - v);
        }
    }
    if !(margin > 0.0) {
        return Err(CandidateFail::MarginNotPositive { delta: margin });
    }
    let f_func = Func::from_values(f.window, f.values.iter().map(|v| v.value).collect());
    let g_in_space = g.in_space(space, &set);
    let f_in_space = f_func.in_space(space, &set);
    if !g_in_space || !f_in_space {
        return Err(CandidateFail::SpaceViolation);
    }
    let displacement = w0.iter().map(|x| (bijection.eval(x) - x).abs()).max().unwrap_or(0);
    Ok(RegularityCertificate {
        g: g.clone(),
        f: f_func,
        bijection,
        margin,
        displacement,
        g_in_space,
        f_in_space,
        dual_condition: true,
        source,
        space,
        window: w0,
        window_relative: !set.is_finite(),
        tc_holds: k.tc_holds(),
    })
}

/// Decide ℓ*-strong regularity on the window with a finite candidate list:
/// user-provided witnesses first, then g = 0, the perestroika potential,
/// and the assignment duals. Finite kernels are gated by exact uniqueness
/// of the optimal assignment; failure of every candidate is Inconclusive,
/// never a refutation.
pub fn decide_strong_regularity(
    k: &Kernel,
    window: Window,
    space: Space,
    extra_candidates: &[Func],
    claimed_seconds: &[(Func, Func)],
) -> Result<RegularityOutcome, DecideError> {
    let set = k.index_set();
    let w0 = set.clip(window).ok_or(DecideError::EmptyWindow)?;
    if !k.zc_check(w0).ok {
        return Err(DecideError::ZcFails);
    }
    let tc = k.tc_holds();
    let window_relative = !set.is_finite();

    let mut candidates: Vec<(CandidateSource, Option<Func>, Option<CandidateFail>)> = Vec::new();
    for (i, g) in extra_candidates.iter().enumerate() {
        candidates.push((CandidateSource::UserProvided(i), Some(g.clone()), None));
    }
    candidates.push((CandidateSource::Zero, Some(Func::zero(w0)), None));

    if set.is_finite() {
        // exact gate: uniqueness of the optimal assignment
        match assignment::solve_assignment(k) {
            Err(assignment::AssignError::Infeasible) => {
                return Ok(RegularityOutcome::Refuted(RefutationRecord {
                    kind: Refutation::Infeasible,
                    window: w0,
                    window_relative,
                    tc_holds: tc,
                }));
            }
            Err(_) => unreachable!("finite kernel"),
            Ok(r) => {
                if !r.unique {
                    return Ok(refute_non_unique(k, w0, &r, tc));
                }
                // perestroika witness through the dual normal form
                match perestroika_witness(k, w0) {
                    Ok(g) => candidates.push((CandidateSource::Perestroika, Some(g), None)),
                    Err(fail) => candidates.push((CandidateSource::Perestroika, None, Some(fail))),
                }
                let full = Window::new(0, r.row_duals.len() as i64 - 1);
                candidates.push((
                    CandidateSource::AssignmentDuals,
                    Some(Func::from_values(full, r.row_duals.clone())),
                    None,
                ));
            }
        }
    } else if similarity::normality(k).normal {
        let opts = PerestroikaOptions::default();
        match perestroika::run_perestroika(k, w0, &opts) {
            PerestroikaOutcome::Success(s) => {
                candidates.push((CandidateSource::Perestroika, Some(s.phi), None));
            }
            _ => candidates.push((CandidateSource::Perestroika, None, Some(CandidateFail::Unavailable))),
        }
    }

    let mut tried: Vec<(CandidateSource, CandidateFail)> = Vec::new();
    for (source, g, prefail) in candidates {
        match (g, prefail) {
            (Some(g), _) => match certify_candidate(k, &g, w0, space, source) {
                Ok(cert) => return Ok(RegularityOutcome::Certified(cert)),
                Err(fail) => tried.push((source, fail)),
            },
            (None, Some(fail)) => tried.push((source, fail)),
            (None, None) => unreachable!(),
        }
    }

    // verified second-solution claims refute the recorded witness
    for (g, h) in claimed_seconds {
        if let Some(rec) = verify_claimed_second(k, g, h, w0, tc, window_relative) {
            return Ok(RegularityOutcome::Refuted(rec));
        }
    }

    Ok(RegularityOutcome::Inconclusive(NoWitness { tried, window: w0, tc_holds: tc }))
}

fn refute_non_unique(
    k: &Kernel,
    w0: Window,
    r: &assignment::AssignmentResult,
    tc: bool,
) -> RegularityOutcome {
    // try the constructive second solution through the dual witness
    let g_dual = Func::from_values(w0, r.row_duals.clone());
    if let Ok(cov) = build_covering(k, &g_dual, w0) {
        if cov.covers && !cov.uncertain {
            if let Some((y0, _)) = cov.essential.iter().find(|(_, e)| !e) {
                if let Ok(ss) = second_solution(k, &g_dual, &cov, *y0) {
                    let f = cov.f.to_func();
                    return RegularityOutcome::Refuted(RefutationRecord {
                        kind: Refutation::SecondSolution {
                            g: g_dual,
                            f,
                            h: ss.h,
                            residual: ss.residual,
                        },
                        window: w0,
                        window_relative: false,
                        tc_holds: tc,
                    });
                }
            }
        }
    }
    let (second, value) = r
        .second_best
        .clone()
        .expect("non-unique assignment has a witness");
    RegularityOutcome::Refuted(RefutationRecord {
        kind: Refutation::SecondOptimalAssignment {
            optimal: r.permutation.clone(),
            second,
            value,
        },
        window: w0,
        window_relative: false,
        tc_holds: tc,
    })
}

/// Witness from the peeling pipeline: normalize by the dual similarity,
/// peel the normal kernel to a strict potential φ, and transport the
/// witness back as g = φ + φ*.
fn perestroika_witness(k: &Kernel, w0: Window) -> Result<Func, CandidateFail> {
    let norm = similarity::normalize_finite(k).map_err(|_| CandidateFail::Unavailable)?;
    if !similarity::normality(&norm.normal_kernel).normal {
        return Err(CandidateFail::Unavailable);
    }
    let opts = PerestroikaOptions::default();
    match perestroika::run_perestroika(&norm.normal_kernel, w0, &opts) {
        PerestroikaOutcome::Success(s) => s
            .phi
            .try_add(&norm.similarity.phi)
            .map_err(|_| CandidateFail::Unavailable),
        _ => Err(CandidateFail::Unavailable),
    }
}

fn verify_claimed_second(
    k: &Kernel,
    g: &Func,
    h: &Func,
    w0: Window,
    tc: bool,
    window_relative: bool,
) -> Option<RefutationRecord> {
    let e1 = eval_window(k, w0.union(g.window));
    let f = apply_bt(k, g, e1).ok()?;
    if f.max_eps() > 0.0 {
        return None;
    }
    // h must differ from the canonical solution somewhere in the window
    let differs = w0.iter().any(|x| h.eval(x) != f.at(x).value);
    if !differs {
        return None;
    }
    // Bh must equal g within the certified ε on the window
    let bh = apply_b(k, h, w0).ok()?;
    let mut residual = 0.0f64;
    for x in w0.iter() {
        let cv = bh.at(x);
        let want = g.eval(x);
        // the certified interval [value, value+ε] must contain g_x
        if cv.value > want || cv.upper() < want {
            return None;
        }
        residual = residual.max((cv.value - want).abs().max(cv.eps()));
    }
    Some(RefutationRecord {
        kind: Refutation::SecondSolution {
            g: g.clone(),
            f: f.to_func(),
            h: h.clone(),
            residual,
        },
        window: w0,
        window_relative,
        tc_holds: tc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::Tail;
    use crate::kernel::{k2, reciprocal_kernel};

    fn w(n: i64) -> Window {
        Window::new(0, n - 1)
    }

    #[test]
    fn subdiff_on_diagonal_kernel() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let f = Func::zero(w(2));
        let s0 = subdiff(&k, &f, 0, w(2)).unwrap();
        assert_eq!(s0.members, vec![0]);
        let s1 = subdiff(&k, &f, 1, w(2)).unwrap();
        assert_eq!(s1.members, vec![1]);
    }

    #[test]
    fn subdiff_t_on_k2() {
        // g = 0, f = Bᵀ0 = 0: ∂ᵀg(0) = {0,1}, ∂ᵀg(1) = {1}, ∂ᵀg(2) = {2}
        let g = Func::zero(w(3));
        let s = subdiff_t(&k2(), &g, 0, w(3)).unwrap();
        assert_eq!(s.members, vec![0, 1]);
        let s = subdiff_t(&k2(), &g, 1, w(3)).unwrap();
        assert_eq!(s.members, vec![1]);
        let s = subdiff_t(&k2(), &g, 2, w(3)).unwrap();
        assert_eq!(s.members, vec![2]);
    }

    #[test]
    fn minus_inf_entries_are_excluded() {
        let ninf = f64::NEG_INFINITY;
        let k = Kernel::from_rows(&[&[0.0, ninf], &[ninf, 0.0]]);
        let f = Func::zero(w(2));
        let s = subdiff(&k, &f, 1, w(2)).unwrap();
        assert_eq!(s.members, vec![1]);
    }

    #[test]
    fn covering_examples() {
        // diagonal kernel: singleton sets, covers, minimal
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let cov = build_covering(&k, &Func::zero(w(2)), w(2)).unwrap();
        assert!(cov.covers && cov.minimal);
        assert_eq!(cov.sets, vec![(0, vec![0]), (1, vec![1])]);

        // k2 with g = 0: covers but y = 0 is inessential
        let cov = build_covering(&k2(), &Func::zero(w(3)), w(3)).unwrap();
        assert!(cov.covers && !cov.minimal);
        assert_eq!(cov.sets, vec![(0, vec![0]), (1, vec![0, 1]), (2, vec![2])]);
        assert_eq!(cov.essential, vec![(0, false), (1, true), (2, true)]);

        // all-zeros: both sets are {0,1}, covers, not minimal
        let z = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let cov = build_covering(&z, &Func::zero(w(2)), w(2)).unwrap();
        assert!(cov.covers && !cov.minimal);
        assert_eq!(cov.sets, vec![(0, vec![0, 1]), (1, vec![0, 1])]);
    }

    #[test]
    fn second_solution_construction() {
        // k2, g = 0, y0 = 0 → h = (1,0,0) with Bh = 0
        let g = Func::zero(w(3));
        let cov = build_covering(&k2(), &g, w(3)).unwrap();
        let ss = second_solution(&k2(), &g, &cov, 0).unwrap();
        assert_eq!(ss.residual, 0.0);
        assert_eq!(
            (ss.h.eval(0), ss.h.eval(1), ss.h.eval(2)),
            (1.0, 0.0, 0.0)
        );
        // essential y0 refused
        assert!(matches!(
            second_solution(&k2(), &g, &cov, 1),
            Err(SecondSolutionError::Essential { y0: 1 })
        ));
        // minimal covering refuses everything
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let g2 = Func::zero(w(2));
        let cov = build_covering(&k, &g2, w(2)).unwrap();
        assert!(second_solution(&k, &g2, &cov, 0).is_err());
        assert!(second_solution(&k, &g2, &cov, 1).is_err());

        // all-zeros 2×2, y0 = 1 → h = (0,1)
        let z = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let cov = build_covering(&z, &g2, w(2)).unwrap();
        let ss = second_solution(&z, &g2, &cov, 1).unwrap();
        assert_eq!((ss.h.eval(0), ss.h.eval(1)), (0.0, 1.0));
    }

    #[test]
    fn inverse_subdiff_identity() {
        let g = Func::zero(w(3));
        assert_eq!(
            inverse_subdiff_identity_check(&k2(), &g, w(3)).unwrap(),
            Applicability::Holds
        );
        // g violating g = BBᵀg: all-zeros kernel with g = (0,-1)
        let z = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let g = Func::from_values(w(2), alloc::vec![0.0, -1.0]);
        assert_eq!(
            inverse_subdiff_identity_check(&z, &g, w(2)).unwrap(),
            Applicability::Inapplicable
        );
    }

    #[test]
    fn decide_diagonal_kernel() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        match decide_strong_regularity(&k, w(2), Space::L1, &[], &[]).unwrap() {
            RegularityOutcome::Certified(c) => {
                assert!(c.bijection.is_identity());
                assert_eq!(c.margin, 1.0);
                assert_eq!(c.source, CandidateSource::Zero);
                assert!(c.dual_condition);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn decide_k2_needs_perestroika_witness() {
        match decide_strong_regularity(&k2(), w(3), Space::L1, &[], &[]).unwrap() {
            RegularityOutcome::Certified(c) => {
                assert!(c.bijection.is_identity());
                assert_eq!(c.margin, 0.25);
                assert_eq!(c.source, CandidateSource::Perestroika);
                assert_eq!(
                    (c.g.eval(0), c.g.eval(1), c.g.eval(2)),
                    (0.0, -0.25, 0.0)
                );
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn decide_explicit_candidate_on_k2() {
        let g = Func::from_values(w(3), alloc::vec![0.0, -0.25, 0.0]);
        match decide_strong_regularity(&k2(), w(3), Space::L1, &[g], &[]).unwrap() {
            RegularityOutcome::Certified(c) => {
                assert_eq!(c.source, CandidateSource::UserProvided(0));
                assert_eq!(c.margin, 0.25);
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn decide_refutes_ties() {
        let z = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        match decide_strong_regularity(&z, w(2), Space::L1, &[], &[]).unwrap() {
            RegularityOutcome::Refuted(rec) => match rec.kind {
                Refutation::SecondSolution { h, residual, .. } => {
                    assert_eq!(residual, 0.0);
                    // h = f + δ at the smallest inessential point
                    assert_eq!((h.eval(0), h.eval(1)), (1.0, 0.0));
                }
                other => panic!("expected second solution, got {other:?}"),
            },
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn decide_infeasible() {
        let ninf = f64::NEG_INFINITY;
        let k = Kernel::from_rows(&[
            &[0.0, ninf, ninf],
            &[0.0, ninf, ninf],
            &[ninf, 0.0, 0.0],
        ]);
        match decide_strong_regularity(&k, w(3), Space::L1, &[], &[]).unwrap() {
            RegularityOutcome::Refuted(rec) => assert_eq!(rec.kind, Refutation::Infeasible),
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn decide_zc_failure_is_an_error() {
        let ninf = f64::NEG_INFINITY;
        let k = Kernel::from_rows(&[&[0.0, ninf], &[ninf, ninf]]);
        assert_eq!(
            decide_strong_regularity(&k, w(2), Space::L1, &[], &[]),
            Err(DecideError::ZcFails)
        );
    }

    #[test]
    fn counterexample_is_refuted_with_claimed_second() {
        // the reciprocal kernel: g = 0, f = Bᵀg = 0, h = 1/(x+1)²
        let ce = reciprocal_kernel();
        let win = Window::new(0, 60);
        let g = Func::zero(win);
        let h = Func::from_tail(Tail::PowerDecay { c: 1.0, q: 2.0 });
        match decide_strong_regularity(&ce, win, Space::L1, &[], &[(g, h)]).unwrap() {
            RegularityOutcome::Refuted(rec) => {
                assert!(!rec.tc_holds);
                assert!(rec.window_relative);
                match rec.kind {
                    Refutation::SecondSolution { residual, .. } => {
                        assert!(residual > 0.0 && residual <= 2.0 / 60.0);
                    }
                    other => panic!("expected second solution, got {other:?}"),
                }
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn counterexample_without_claim_is_inconclusive() {
        let ce = reciprocal_kernel();
        let win = Window::new(0, 40);
        match decide_strong_regularity(&ce, win, Space::L1, &[], &[]).unwrap() {
            RegularityOutcome::Inconclusive(nw) => {
                assert!(!nw.tc_holds);
                assert!(!nw.tried.is_empty());
            }
            other => panic!("expected inconclusive, got {other:?}"),
        }
    }
}
