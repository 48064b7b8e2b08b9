//! ℓ*-similarity transforms c_{xy} = b_{H(x)K(y)} - φ_x - ψ_y, normal and
//! strongly normal predicates, LP-based normalization of finite kernels,
//! and the executable invariance suites.
//!
//! Similarities compose and invert, so they define equivalence relations;
//! both facts are exercised constructively in the tests. Banded kernels
//! only accept windowed H, K and φ, ψ with zero or constant tails — that
//! keeps every entry, envelope and normality check exact. Anything else is
//! refused rather than approximated.

use alloc::vec::Vec;

use crate::assignment::{self, SolutionMode};
use crate::bijection::Bijection;
use crate::func::{Func, Space, Tail};
use crate::kernel::{Kernel, KernelBody, TailFamily, Wrap};
use crate::num::{Bottom, ExtReal, Finite};
use crate::space::Window;
use crate::subdiff::{self, RegularityOutcome};
use crate::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimVariant {
    TwoSided,
    /// H = I (row order kept; the only kind usable for restricted solutions).
    Right,
    /// K = I.
    Left,
}

/// A similarity witness: two locally bounded bijections and two shift
/// functions in a declared sequence space.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    pub h: Bijection,
    pub k: Bijection,
    pub phi: Func,
    pub psi: Func,
    pub variant: SimVariant,
    pub space: Space,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimilarityError {
    /// Variant promises an identity map that isn't one.
    VariantMismatch,
    /// φ or ψ fails its declared space diagnostic.
    SpaceMismatch,
    /// Banded kernels require zero/constant tails on φ, ψ to stay in
    /// banded-plus-tail form.
    TailIncompatible,
    /// Bijection support or function window leaves the index set.
    OutOfRange,
    /// Composing tails left the representable family.
    Compose,
}

impl core::fmt::Display for SimilarityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            SimilarityError::VariantMismatch => "similarity variant promises an identity map",
            SimilarityError::SpaceMismatch => "shift function violates its declared space",
            SimilarityError::TailIncompatible => {
                "banded kernels require zero/constant tails on the shift functions"
            }
            SimilarityError::OutOfRange => "similarity data leaves the index set",
            SimilarityError::Compose => "similarity composition left the representable family",
        };
        write!(f, "{s}")
    }
}

impl Similarity {
    pub fn identity() -> Self {
        Similarity {
            h: Bijection::identity(),
            k: Bijection::identity(),
            phi: Func::from_tail(Tail::Zero),
            psi: Func::from_tail(Tail::Zero),
            variant: SimVariant::TwoSided,
            space: Space::L1,
        }
    }

    pub fn right(k: Bijection, phi: Func, psi: Func, space: Space) -> Self {
        Similarity { h: Bijection::identity(), k, phi, psi, variant: SimVariant::Right, space }
    }

    pub fn check(&self, kernel: &Kernel) -> Result<(), SimilarityError> {
        let set = kernel.index_set();
        match self.variant {
            SimVariant::Right if !self.h.is_identity() => return Err(SimilarityError::VariantMismatch),
            SimVariant::Left if !self.k.is_identity() => return Err(SimilarityError::VariantMismatch),
            _ => {}
        }
        for b in [&self.h, &self.k] {
            if let Some(s) = b.support() {
                if set.clip(s) != Some(s) {
                    return Err(SimilarityError::OutOfRange);
                }
            }
        }
        if !self.phi.in_space(self.space, &set) || !self.psi.in_space(self.space, &set) {
            return Err(SimilarityError::SpaceMismatch);
        }
        if kernel.is_banded() {
            for f in [&self.phi, &self.psi] {
                if matches!(f.tail, Tail::PowerDecay { .. }) {
                    return Err(SimilarityError::TailIncompatible);
                }
            }
        }
        Ok(())
    }

    /// The inverse transform: entries of the original kernel are recovered
    /// as c_{H^{-1}(x)K^{-1}(y)} + (φ∘H^{-1})_x + (ψ∘K^{-1})_y.
    pub fn inverse(&self) -> Similarity {
        let hinv = self.h.inverse();
        let kinv = self.k.inverse();
        Similarity {
            phi: self.phi.compose(&hinv).negate(),
            psi: self.psi.compose(&kinv).negate(),
            h: hinv,
            k: kinv,
            variant: self.variant,
            space: self.space,
        }
    }

    /// self after other: applying `other` then `self` equals applying the
    /// composition in one step.
    pub fn compose(&self, other: &Similarity) -> Result<Similarity, SimilarityError> {
        // c = other(b), d = self(c):
        // d_{xy} = b_{other.h(self.h(x)), other.k(self.k(y))}
        //          - (other.φ∘self.h + self.φ)_x - (other.ψ∘self.k + self.ψ)_y
        let phi = other
            .phi
            .compose(&self.h)
            .try_add(&self.phi)
            .map_err(|_| SimilarityError::Compose)?;
        let psi = other
            .psi
            .compose(&self.k)
            .try_add(&self.psi)
            .map_err(|_| SimilarityError::Compose)?;
        let variant = match (self.variant, other.variant) {
            (SimVariant::Right, SimVariant::Right) => SimVariant::Right,
            (SimVariant::Left, SimVariant::Left) => SimVariant::Left,
            _ => SimVariant::TwoSided,
        };
        Ok(Similarity {
            h: other.h.compose(&self.h),
            k: other.k.compose(&self.k),
            phi,
            psi,
            variant,
            space: self.space.max(other.space),
        })
    }
}

/// c_{xy} = b_{H(x)K(y)} - φ_x - ψ_y. Finite kernels materialize a dense
/// table; banded kernels keep the transform as an exact lazy wrap.
pub fn apply_similarity(k: &Kernel, s: &Similarity) -> Result<Kernel, SimilarityError> {
    s.check(k)?;
    match &k.body {
        KernelBody::Finite(rows) => {
            let n = rows.len();
            let table = (0..n as i64)
                .map(|x| {
                    (0..n as i64)
                        .map(|y| {
                            let hx = s.h.eval(x) as usize;
                            let ky = s.k.eval(y) as usize;
                            rows[hx][ky].sub_f64(s.phi.eval(x)).sub_f64(s.psi.eval(y))
                        })
                        .collect()
                })
                .collect();
            Ok(Kernel { body: KernelBody::Finite(table) })
        }
        KernelBody::Banded { core, wrap } => {
            let new_wrap = match wrap {
                None => Wrap {
                    h: s.h.clone(),
                    k: s.k.clone(),
                    phi: s.phi.clone(),
                    psi: s.psi.clone(),
                },
                Some(w0) => Wrap {
                    h: w0.h.compose(&s.h),
                    k: w0.k.compose(&s.k),
                    phi: w0
                        .phi
                        .compose(&s.h)
                        .try_add(&s.phi)
                        .map_err(|_| SimilarityError::Compose)?,
                    psi: w0
                        .psi
                        .compose(&s.k)
                        .try_add(&s.psi)
                        .map_err(|_| SimilarityError::Compose)?,
                },
            };
            Ok(Kernel { body: KernelBody::Banded { core: core.clone(), wrap: Some(new_wrap) } })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalReport {
    /// Diagonal ≡ 0 and off-diagonal ≤ 0.
    pub normal: bool,
    /// Off-diagonal < 0 pointwise (with zero diagonal).
    pub strongly_normal: bool,
    /// -sup of off-diagonal entries (+∞ when all are -∞).
    pub margin: f64,
    pub margin_attained: bool,
    /// Strictly normal pointwise yet margin 0: the off-diagonal supremum is
    /// a non-attained limit.
    pub margin_zero: bool,
}

/// Normality predicates for finite and banded kernels, exact.
pub fn normality(k: &Kernel) -> NormalReport {
    match &k.body {
        KernelBody::Finite(rows) => {
            let n = rows.len();
            let diag_zero = (0..n).all(|i| rows[i][i] == Finite(0.0));
            let mut sup = Bottom;
            let mut strict = true;
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        sup = sup.max(rows[x][y]);
                        if let Finite(v) = rows[x][y] {
                            if v >= 0.0 {
                                strict = false;
                            }
                        }
                    }
                }
            }
            report_from(diag_zero, sup, true, strict)
        }
        KernelBody::Banded { core, wrap: None } => {
            let diag_zero = core.diag.iter().all(|d| *d == Finite(0.0));
            let env = k.sup_at_least(1);
            let bands_strict = core
                .bands
                .iter()
                .all(|(_, t)| t.iter().all(|e| matches!(e, Bottom) || matches!(e, Finite(v) if *v < 0.0)));
            let tail_strict = match core.tail {
                TailFamily::MinusInf => true,
                TailFamily::Linear { a, b } => a * (core.width as f64 + 1.0) + b > 0.0,
                TailFamily::Power { .. } | TailFamily::Reciprocal { .. } => true,
            };
            report_from(diag_zero, env.value, env.attained, bands_strict && tail_strict)
        }
        KernelBody::Banded { core, wrap: Some(w) } => {
            // exact under the zero/constant tail restriction on φ, ψ
            let set = core.set;
            let u = k.irregular_region().unwrap_or(Window::new(0, 0));
            let reach = core.width
                + w.h.rho_to_identity()
                + w.k.rho_to_identity()
                + core.period as i64
                + 1;
            let p = set.clip(u.pad(reach)).expect("wrap region in index set");
            let q = set.clip(p.pad(core.width + 1)).unwrap();
            // diagonal: scan the irregular region, then per-residue formula
            let mut diag_zero = p.iter().all(|x| k.entry(x, x) == Finite(0.0));
            let shift = w.phi.tail.limit_at_infinity() + w.psi.tail.limit_at_infinity();
            for r in 0..core.period {
                match core.diag[r] {
                    Finite(d) => {
                        if d - shift != 0.0 {
                            diag_zero = false;
                        }
                    }
                    Bottom => diag_zero = false,
                }
            }
            // off-diagonal: the irregular block plus its rays, then the
            // untouched periodic regime
            let mut sup = Bottom;
            let mut strict = true;
            for x in p.iter() {
                for y in q.iter() {
                    if x != y {
                        let e = k.entry(x, y);
                        sup = sup.max(e);
                        if matches!(e, Finite(v) if v >= 0.0) {
                            strict = false;
                        }
                    }
                }
                for ray in [k.row_sup_outside(x, q), k.col_sup_outside(x, q)] {
                    sup = sup.max(ray);
                    if let Finite(v) = ray {
                        let limit_only = matches!(core.tail, TailFamily::Reciprocal { .. });
                        if v > 0.0 || (v == 0.0 && !limit_only) {
                            strict = false;
                        }
                    }
                }
            }
            let attained = !sup.is_bottom();
            let (far, far_attained) = far_offdiag_sup(core, shift);
            let attained = match (far, sup) {
                (Finite(a), Finite(b)) if a > b => far_attained,
                (_, Bottom) => far_attained,
                _ => attained,
            };
            match far {
                Finite(v) if v > 0.0 => strict = false,
                Finite(v) if v == 0.0 && far_attained => strict = false,
                _ => {}
            }
            report_from(diag_zero, sup.max(far), attained, strict)
        }
    }
}

fn far_offdiag_sup(core: &crate::kernel::BandCore, shift: f64) -> (ExtReal, bool) {
    let mut sup = Bottom;
    let mut attained = false;
    for (_, t) in &core.bands {
        for e in t {
            let v = e.sub_f64(shift);
            if !v.is_bottom() {
                attained = true;
            }
            sup = sup.max(v);
        }
    }
    let (ts, ta) = core.tail.sup_from(core.width + 1);
    let ts = ts.sub_f64(shift);
    match (ts, sup) {
        (Finite(a), Finite(b)) if a > b => attained = ta,
        (Finite(_), Bottom) => attained = ta,
        _ => {}
    }
    (sup.max(ts), attained)
}

fn report_from(diag_zero: bool, offdiag_sup: ExtReal, attained: bool, strict: bool) -> NormalReport {
    let nonpos = match offdiag_sup {
        Bottom => true,
        Finite(v) => v <= 0.0,
    };
    let normal = diag_zero && nonpos;
    let strongly = diag_zero && strict && nonpos;
    let margin = match offdiag_sup {
        Bottom => f64::INFINITY,
        // +0.0 normalizes the negative zero from negating a zero supremum
        Finite(v) => -v + 0.0,
    };
    NormalReport {
        normal,
        strongly_normal: strongly,
        margin,
        margin_attained: attained,
        margin_zero: strongly && margin == 0.0,
    }
}

pub fn is_normal(k: &Kernel) -> bool {
    normality(k).normal
}

pub fn is_strongly_normal(k: &Kernel) -> bool {
    normality(k).strongly_normal
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizeResult {
    /// The right-similarity (H = I, K = F) built from the optimal duals.
    pub similarity: Similarity,
    pub normal_kernel: Kernel,
    pub permutation: Vec<usize>,
}

/// Reduce a finite kernel to a normal one by the dual-LP similarity:
/// c_{xy} = b_{xF(y)} - φ*_x - ψ*_{F(y)} with (φ*, ψ*) optimal duals and F
/// the optimal permutation. Complementary slackness makes the diagonal
/// exactly zero and dual feasibility makes the rest nonpositive.
pub fn normalize_finite(k: &Kernel) -> Result<NormalizeResult, assignment::AssignError> {
    let r = assignment::solve_assignment(k)?;
    let n = r.permutation.len();
    let full = Window::new(0, n as i64 - 1);
    let kmap = Bijection::from_images(full, r.permutation.iter().map(|&j| j as i64).collect())
        .expect("optimal permutation");
    let phi = Func::from_values(full, r.row_duals.clone());
    let psi = Func::from_values(
        full,
        (0..n).map(|y| r.col_duals[r.permutation[y]]).collect(),
    );
    let sim = Similarity::right(kmap, phi, psi, Space::L1);
    let normal_kernel = apply_similarity(k, &sim).expect("finite similarity is always applicable");
    Ok(NormalizeResult { similarity: sim, normal_kernel, permutation: r.permutation })
}

// ---- invariance suites ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropKind {
    Zc,
    Tc,
    StrongRegularity,
    SolutionExistence,
}

impl PropKind {
    pub fn name(&self) -> &'static str {
        match self {
            PropKind::Zc => "ZC",
            PropKind::Tc => "TC",
            PropKind::StrongRegularity => "strong-regularity",
            PropKind::SolutionExistence => "solution-existence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PropStatus {
    /// Property evaluated on both sides and verdicts agree.
    Agree { before: Verdict, after: Verdict },
    Disagree { before: Verdict, after: Verdict },
    /// Combination outside the invariance hypotheses; not a failure.
    Refused { reason: RefusalReason },
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefusalReason {
    /// Solution transport needs an ℓ1 or ℓ0,1 similarity (compact mode).
    NeedsSummableShifts,
    /// Restricted solutions only transport along right-similarities.
    NeedsRightSimilarity,
    /// ℓ0 shifts need restricted mode plus bounded ball growth.
    NeedsRestrictedMode,
    /// ℓ∞ shifts support no solution transport at all.
    UnsupportedSpace,
}

impl RefusalReason {
    pub fn message(&self) -> &'static str {
        match self {
            RefusalReason::NeedsSummableShifts => {
                "solution transport in compact mode needs l1 or l0,1 shifts"
            }
            RefusalReason::NeedsRightSimilarity => {
                "restricted solutions transport along right-similarities only"
            }
            RefusalReason::NeedsRestrictedMode => {
                "l0 shifts transport restricted solutions only (bounded ball growth)"
            }
            RefusalReason::UnsupportedSpace => "linf shifts support no solution transport",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteEntry {
    pub prop: PropKind,
    pub status: PropStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
    /// True when no entry disagreed (refusals do not count as failures).
    pub all_preserved: bool,
}

pub struct SuiteOptions {
    pub window: Window,
    /// Base solution for transport checks (identity when None).
    pub solution: Option<Bijection>,
    pub mode: SolutionMode,
    pub space: Space,
}

/// Evaluate the requested properties on k and on its transform and report
/// agreement. Combinations outside the invariance hypotheses are refused,
/// not failed.
pub fn invariance_suite(
    k: &Kernel,
    s: &Similarity,
    props: &[PropKind],
    opts: &SuiteOptions,
) -> Result<SuiteReport, SimilarityError> {
    let c = apply_similarity(k, s)?;
    let set = k.index_set();
    let w = set.clip(opts.window).ok_or(SimilarityError::OutOfRange)?;
    let mut entries = Vec::new();
    for &prop in props {
        let status = match prop {
            PropKind::Zc => {
                let before = Verdict::from_bool(k.zc_check(w).ok);
                let after = Verdict::from_bool(c.zc_check(w).ok);
                agree(before, after)
            }
            PropKind::Tc => {
                let before = Verdict::from_bool(k.tc_holds());
                let after = Verdict::from_bool(c.tc_holds());
                agree(before, after)
            }
            PropKind::StrongRegularity => {
                let (before, witness) = reg_verdict(k, w, opts.space);
                // transport a certified witness to the transformed side:
                // g_c = g∘H - φ keeps the covering structure
                let extras: Vec<Func> = witness
                    .and_then(|g| g.compose(&s.h).try_add(&s.phi.negate()).ok())
                    .into_iter()
                    .collect();
                let (after, _) = reg_verdict_with(&c, w, opts.space, &extras);
                match (before, after) {
                    (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => {
                        PropStatus::Inconclusive
                    }
                    (b, a) => agree(b, a),
                }
            }
            PropKind::SolutionExistence => match gate_solution_transport(s, opts.mode) {
                Some(reason) => PropStatus::Refused { reason },
                None => solution_transport(k, &c, s, w, opts),
            },
        };
        entries.push(SuiteEntry { prop, status });
    }
    let all_preserved = entries
        .iter()
        .all(|e| !matches!(e.status, PropStatus::Disagree { .. }));
    Ok(SuiteReport { entries, all_preserved })
}

fn agree(before: Verdict, after: Verdict) -> PropStatus {
    if before == after {
        PropStatus::Agree { before, after }
    } else {
        PropStatus::Disagree { before, after }
    }
}

fn reg_verdict(k: &Kernel, w: Window, space: Space) -> (Verdict, Option<Func>) {
    reg_verdict_with(k, w, space, &[])
}

fn reg_verdict_with(
    k: &Kernel,
    w: Window,
    space: Space,
    extras: &[Func],
) -> (Verdict, Option<Func>) {
    match subdiff::decide_strong_regularity(k, w, space, extras, &[]) {
        Ok(RegularityOutcome::Certified(c)) => (Verdict::Holds, Some(c.g)),
        Ok(RegularityOutcome::Refuted(_)) => (Verdict::Fails, None),
        Ok(RegularityOutcome::Inconclusive(_)) => (Verdict::Inconclusive, None),
        // a ZC failure is itself similarity-invariant and refutes
        Err(subdiff::DecideError::ZcFails) => (Verdict::Fails, None),
        Err(_) => (Verdict::Inconclusive, None),
    }
}

/// Which (space, variant, mode) combinations transport solutions.
fn gate_solution_transport(s: &Similarity, mode: SolutionMode) -> Option<RefusalReason> {
    match (s.space, mode) {
        (Space::L1 | Space::L01, SolutionMode::Compact) => None,
        (Space::L1 | Space::L01, SolutionMode::RestrictedBalls) => {
            if s.variant == SimVariant::Right {
                None
            } else {
                Some(RefusalReason::NeedsRightSimilarity)
            }
        }
        (Space::L0, SolutionMode::RestrictedBalls) => {
            if s.variant == SimVariant::Right {
                // ball growth #B_n - #B_{n-1} is bounded for all supported
                // index sets (≤ 2), vacuously for finite ones
                None
            } else {
                Some(RefusalReason::NeedsRightSimilarity)
            }
        }
        (Space::L0, SolutionMode::Compact) => Some(RefusalReason::NeedsRestrictedMode),
        (Space::LInf, _) => Some(RefusalReason::UnsupportedSpace),
    }
}

fn solution_transport(
    k: &Kernel,
    c: &Kernel,
    s: &Similarity,
    w: Window,
    opts: &SuiteOptions,
) -> PropStatus {
    let f_b = opts.solution.clone().unwrap_or_else(Bijection::identity);
    // transported solution for c: K^{-1}∘F∘H, so that K∘F_c∘H^{-1} = F
    let f_c = s.k.inverse().compose(&f_b).compose(&s.h);
    let set = k.index_set();
    let mut wide = w;
    for b in [&f_b, &f_c, &s.h, &s.k] {
        if let Some(sup) = b.support() {
            wide = wide.union(sup);
        }
    }
    let shift = s.h.rho_to_identity() + s.k.rho_to_identity();
    let wide = match set.clip(wide.pad(shift)) {
        Some(w) => w,
        None => return PropStatus::Inconclusive,
    };
    // with M = window diameter the deviation families correspond exactly
    // under G ↦ K∘G∘H^{-1}, so the margins agree and so must the verdicts
    let m = wide.hi - wide.lo;
    let before = assignment::verify_local_strong_solution(k, &f_b, m, wide, opts.mode);
    let after = assignment::verify_local_strong_solution(c, &f_c, m, wide, opts.mode);
    match (before, after) {
        (Ok(rb), Ok(ra)) => agree(
            Verdict::from_bool(rb.verified),
            Verdict::from_bool(ra.verified),
        ),
        _ => PropStatus::Inconclusive,
    }
}
