//! Kernels b: X×X → ℝ ∪ {-∞}, as dense finite matrices or banded countable
//! kernels with a parametric far-off-diagonal tail.
//!
//! The banded body stores a periodic diagonal table, periodic band tables for
//! offsets 1 ≤ |k| ≤ W, and one of four tail families for |k| > W. The tail
//! family decides the tightness condition (TC) exactly: minus-infinity,
//! linear and power tails diverge to -∞, the reciprocal tail does not.
//!
//! A banded kernel may additionally carry a similarity wrap
//! (H, K, φ, ψ): entries are then b_{H(x)K(y)} - φ_x - ψ_y evaluated lazily,
//! which keeps windowed relabelings exact. φ and ψ are restricted to zero or
//! constant tails so the far structure stays periodic-plus-tail.


use alloc::vec::Vec;

use crate::bijection::Bijection;
use crate::func::Func;
use crate::num::{sup, Bottom, ExtReal, Finite};
use crate::space::{IndexKind, IndexSet, Window};

fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Far-off-diagonal entry family for |k| = d(x,y) > W.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailFamily {
    /// All far entries are -∞.
    MinusInf,
    /// -(a·|k| + b) with a > 0.
    Linear { a: f64, b: f64 },
    /// -c·|k|^q with c, q > 0.
    Power { c: f64, q: f64 },
    /// -c·|k|^(-q) with c, q > 0; tends to 0, so TC fails.
    Reciprocal { c: f64, q: f64 },
}

impl TailFamily {
    pub fn eval(&self, k_abs: i64) -> ExtReal {
        debug_assert!(k_abs >= 1);
        let k = k_abs as f64;
        match *self {
            TailFamily::MinusInf => Bottom,
            TailFamily::Linear { a, b } => Finite(-(a * k + b)),
            TailFamily::Power { c, q } => Finite(-c * powf(k, q)),
            TailFamily::Reciprocal { c, q } => Finite(-c * powf(k, -q)),
        }
    }

    /// sup over |k| ≥ m (limits count; `attained` says whether some k
    /// realizes the value).
    pub fn sup_from(&self, m: i64) -> (ExtReal, bool) {
        match *self {
            TailFamily::MinusInf => (Bottom, false),
            TailFamily::Linear { .. } | TailFamily::Power { .. } => (self.eval(m), true),
            TailFamily::Reciprocal { .. } => (Finite(0.0), false),
        }
    }

    /// Does sup{entries at distance ≥ m} tend to -∞?
    pub fn diverges(&self) -> bool {
        !matches!(self, TailFamily::Reciprocal { .. })
    }
}

/// Periodic banded body on ℕ or ℤ.
#[derive(Clone, Debug, PartialEq)]
pub struct BandCore {
    pub set: IndexSet,
    pub period: usize,
    /// diag[x mod p]
    pub diag: Vec<ExtReal>,
    pub width: i64,
    /// (offset k, table indexed by row residue x mod p), for 1 ≤ |k| ≤ width
    pub bands: Vec<(i64, Vec<ExtReal>)>,
    pub tail: TailFamily,
}

impl BandCore {
    fn residue(&self, x: i64) -> usize {
        x.rem_euclid(self.period as i64) as usize
    }

    fn band(&self, k: i64) -> Option<&Vec<ExtReal>> {
        self.bands.iter().find(|(off, _)| *off == k).map(|(_, t)| t)
    }

    fn entry(&self, x: i64, y: i64) -> ExtReal {
        debug_assert!(self.set.contains(x) && self.set.contains(y));
        let k = y - x;
        if k == 0 {
            self.diag[self.residue(x)]
        } else if k.abs() <= self.width {
            match self.band(k) {
                Some(t) => t[self.residue(x)],
                None => Bottom,
            }
        } else {
            self.tail.eval(k.abs())
        }
    }
}

/// Similarity wrap: entries b_{H(x)K(y)} - φ_x - ψ_y over a banded base.
#[derive(Clone, Debug, PartialEq)]
pub struct Wrap {
    pub h: Bijection,
    pub k: Bijection,
    pub phi: Func,
    pub psi: Func,
}

impl Wrap {
    /// The region outside which the wrap acts by a pure tail shift.
    fn region(&self) -> Option<Window> {
        let mut r: Option<Window> = None;
        let mut push = |w: Option<Window>| {
            if let Some(w) = w {
                r = Some(match r {
                    None => w,
                    Some(acc) => acc.union(w),
                });
            }
        };
        push(self.h.support());
        push(self.k.support());
        push(Some(self.phi.window));
        push(Some(self.psi.window));
        r
    }

    fn shift_bound(&self, set: &IndexSet) -> f64 {
        // sup of φ_x + ψ_y over all pairs, for envelope bounds
        let (plo, phi_) = self.phi.global_bounds(set);
        let (qlo, qhi) = self.psi.global_bounds(set);
        let _ = (phi_, qhi);
        -(plo + qlo)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelBody {
    Finite(Vec<Vec<ExtReal>>),
    Banded { core: BandCore, wrap: Option<Wrap> },
}

/// A max-plus kernel over a finite or countable index set.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub body: KernelBody,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    NotSquare,
    BadBandTable,
    BadTailParams,
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::NotSquare => write!(f, "finite kernel table must be square"),
            KernelError::BadBandTable => write!(f, "band tables must cover 1 ≤ |k| ≤ width with period-length rows"),
            KernelError::BadTailParams => write!(f, "tail family parameters out of range"),
        }
    }
}

/// A certified bound on an envelope-style supremum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvBound {
    pub value: ExtReal,
    pub attained: bool,
    pub exact: bool,
}

impl Kernel {
    pub fn finite(rows: Vec<Vec<ExtReal>>) -> Result<Self, KernelError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(KernelError::NotSquare);
        }
        Ok(Kernel { body: KernelBody::Finite(rows) })
    }

    /// Convenience: finite kernel from f64 entries (NEG_INFINITY → Bottom).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let table = rows
            .iter()
            .map(|r| r.iter().map(|&v| ExtReal::from(v)).collect())
            .collect();
        Kernel::finite(table).expect("square table")
    }

    pub fn banded(core: BandCore) -> Result<Self, KernelError> {
        if core.period == 0
            || core.diag.len() != core.period
            || core.set.is_finite()
        {
            return Err(KernelError::BadBandTable);
        }
        let mut offsets: Vec<i64> = core.bands.iter().map(|(k, _)| *k).collect();
        offsets.sort_unstable();
        let mut expected: Vec<i64> = (-core.width..=core.width).filter(|k| *k != 0).collect();
        expected.sort_unstable();
        if offsets != expected || core.bands.iter().any(|(_, t)| t.len() != core.period) {
            return Err(KernelError::BadBandTable);
        }
        let tail_ok = match core.tail {
            TailFamily::MinusInf => true,
            TailFamily::Linear { a, .. } => a > 0.0,
            TailFamily::Power { c, q } | TailFamily::Reciprocal { c, q } => c > 0.0 && q > 0.0,
        };
        if !tail_ok {
            return Err(KernelError::BadTailParams);
        }
        Ok(Kernel { body: KernelBody::Banded { core, wrap: None } })
    }

    pub fn index_set(&self) -> IndexSet {
        match &self.body {
            KernelBody::Finite(rows) => IndexSet::finite(rows.len()),
            KernelBody::Banded { core, .. } => core.set,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.body {
            KernelBody::Finite(rows) => Some(rows.len()),
            _ => None,
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.body, KernelBody::Banded { .. })
    }

    pub fn wrap(&self) -> Option<&Wrap> {
        match &self.body {
            KernelBody::Banded { wrap, .. } => wrap.as_ref(),
            _ => None,
        }
    }

    /// The window outside which banded entries follow the periodic+tail
    /// formula unperturbed (wrap region), if any.
    pub fn irregular_region(&self) -> Option<Window> {
        self.wrap().and_then(|w| w.region())
    }

    pub fn entry(&self, x: i64, y: i64) -> ExtReal {
        match &self.body {
            KernelBody::Finite(rows) => rows[x as usize][y as usize],
            KernelBody::Banded { core, wrap } => match wrap {
                None => core.entry(x, y),
                Some(w) => core
                    .entry(w.h.eval(x), w.k.eval(y))
                    .sub_f64(w.phi.eval(x))
                    .sub_f64(w.psi.eval(y)),
            },
        }
    }

    pub fn transpose(&self) -> Kernel {
        match &self.body {
            KernelBody::Finite(rows) => {
                let n = rows.len();
                let t = (0..n)
                    .map(|i| (0..n).map(|j| rows[j][i]).collect())
                    .collect();
                Kernel { body: KernelBody::Finite(t) }
            }
            KernelBody::Banded { core, wrap } => {
                let p = core.period as i64;
                let bands = core
                    .bands
                    .iter()
                    .map(|(k, _)| {
                        // b^T at offset k, row residue r reads b at offset -k,
                        // row residue (r + k) mod p
                        let table = (0..core.period)
                            .map(|r| {
                                let src = (r as i64 + k).rem_euclid(p) as usize;
                                core.band(-k).map(|b| b[src]).unwrap_or(Bottom)
                            })
                            .collect();
                        (*k, table)
                    })
                    .collect();
                let tcore = BandCore {
                    set: core.set,
                    period: core.period,
                    diag: core.diag.clone(),
                    width: core.width,
                    bands,
                    tail: core.tail,
                };
                let twrap = wrap.as_ref().map(|w| Wrap {
                    h: w.k.clone(),
                    k: w.h.clone(),
                    phi: w.psi.clone(),
                    psi: w.phi.clone(),
                });
                Kernel { body: KernelBody::Banded { core: tcore, wrap: twrap } }
            }
        }
    }

    /// sup{entry(x,y) : d(x,y) = m}, per-distance shell supremum.
    /// Exact for unwrapped bodies; an upper bound under a wrap.
    pub fn shell_sup(&self, m: i64) -> EnvBound {
        debug_assert!(m >= 1);
        match &self.body {
            KernelBody::Finite(rows) => {
                let n = rows.len() as i64;
                let mut best = Bottom;
                for x in 0..n {
                    for y in 0..n {
                        if (x - y).abs() == m {
                            best = best.max(rows[x as usize][y as usize]);
                        }
                    }
                }
                EnvBound { value: best, attained: !best.is_bottom(), exact: true }
            }
            KernelBody::Banded { core, wrap: None } => {
                if m <= core.width {
                    let mut best = Bottom;
                    for k in [-m, m] {
                        if let Some(t) = core.band(k) {
                            best = best.max(sup(t.iter().copied()));
                        }
                    }
                    EnvBound { value: best, attained: !best.is_bottom(), exact: true }
                } else {
                    EnvBound { value: core.tail.eval(m), attained: true, exact: true }
                }
            }
            KernelBody::Banded { core, wrap: Some(w) } => {
                let shift = rho_shift(w);
                let from = (m - shift).max(1);
                let (base, _) = self.core_sup_at_least(core, from);
                EnvBound {
                    value: base.add_f64(w.shift_bound(&core.set)),
                    attained: false,
                    exact: false,
                }
            }
        }
    }

    fn core_sup_at_least(&self, core: &BandCore, m: i64) -> (ExtReal, bool) {
        let mut best = Bottom;
        let mut attained = false;
        for k in m.max(1)..=core.width {
            for off in [-k, k] {
                if let Some(t) = core.band(off) {
                    let s = sup(t.iter().copied());
                    if !s.is_bottom() {
                        attained = true;
                    }
                    best = best.max(s);
                }
            }
        }
        let (ts, ta) = core.tail.sup_from(m.max(core.width + 1));
        if let (Finite(a), Finite(b)) = (ts, best) {
            if a > b {
                attained = ta;
            }
        } else if best.is_bottom() && !ts.is_bottom() {
            attained = ta;
        }
        (best.max(ts), attained)
    }

    /// sup{entry(x,y) : d(x,y) ≥ m} — the TC envelope. Upper bound under a
    /// wrap, exact otherwise (limits count as suprema).
    pub fn sup_at_least(&self, m: i64) -> EnvBound {
        debug_assert!(m >= 1);
        match &self.body {
            KernelBody::Finite(rows) => {
                let n = rows.len() as i64;
                let mut best = Bottom;
                for x in 0..n {
                    for y in 0..n {
                        if (x - y).abs() >= m {
                            best = best.max(rows[x as usize][y as usize]);
                        }
                    }
                }
                EnvBound { value: best, attained: !best.is_bottom(), exact: true }
            }
            KernelBody::Banded { core, wrap: None } => {
                let (v, attained) = self.core_sup_at_least(core, m);
                EnvBound { value: v, attained, exact: true }
            }
            KernelBody::Banded { core, wrap: Some(w) } => {
                let shift = rho_shift(w);
                let from = (m - shift).max(1);
                let (base, _) = self.core_sup_at_least(core, from);
                EnvBound {
                    value: base.add_f64(w.shift_bound(&core.set)),
                    attained: false,
                    exact: false,
                }
            }
        }
    }

    /// Condition (TC): sup{b_xy : d(x,y) ≥ m} → -∞. Exact: finite kernels
    /// hold vacuously, banded kernels via the tail family; a wrap preserves
    /// the verdict (locally bounded relabelings and bounded shifts).
    pub fn tc_holds(&self) -> bool {
        match &self.body {
            KernelBody::Finite(_) => true,
            KernelBody::Banded { core, .. } => core.tail.diverges(),
        }
    }

    /// sup over all entries (upper bound under a wrap).
    pub fn global_sup(&self) -> ExtReal {
        match &self.body {
            KernelBody::Finite(rows) => sup(rows.iter().flatten().copied()),
            KernelBody::Banded { core, wrap } => {
                let mut best = sup(core.diag.iter().copied());
                let (s, _) = self.core_sup_at_least(core, 1);
                best = best.max(s);
                match wrap {
                    None => best,
                    Some(w) => best.add_f64(w.shift_bound(&core.set)),
                }
            }
        }
    }

    /// Lower bound on diagonal entries (−∞ when some diagonal is -∞).
    pub fn diag_inf(&self) -> ExtReal {
        match &self.body {
            KernelBody::Finite(rows) => {
                let mut worst = Finite(f64::INFINITY);
                for (i, r) in rows.iter().enumerate() {
                    worst = match (worst, r[i]) {
                        (_, Bottom) => Bottom,
                        (Bottom, _) => Bottom,
                        (Finite(a), Finite(b)) => Finite(a.min(b)),
                    };
                }
                worst
            }
            KernelBody::Banded { core, wrap } => {
                let mut worst = Finite(f64::INFINITY);
                for &d in &core.diag {
                    worst = match (worst, d) {
                        (_, Bottom) | (Bottom, _) => Bottom,
                        (Finite(a), Finite(b)) => Finite(a.min(b)),
                    };
                }
                match (worst, wrap) {
                    (Finite(v), Some(w)) => {
                        let set = core.set;
                        let (plo, phi_up) = w.phi.global_bounds(&set);
                        let (qlo, qhi_up) = w.psi.global_bounds(&set);
                        let _ = (plo, qlo);
                        Finite(v - phi_up - qhi_up)
                    }
                    (v, _) => v,
                }
            }
        }
    }

    /// sup over off-diagonal entries (upper bound under a wrap; exact
    /// otherwise, limits counting as suprema).
    pub fn offdiag_sup(&self) -> EnvBound {
        match &self.body {
            KernelBody::Finite(rows) => {
                let n = rows.len();
                let mut best = Bottom;
                for x in 0..n {
                    for y in 0..n {
                        if x != y {
                            best = best.max(rows[x][y]);
                        }
                    }
                }
                EnvBound { value: best, attained: !best.is_bottom(), exact: true }
            }
            _ => self.sup_at_least(1),
        }
    }

    /// sup of entry(x, y) over y outside `e`. `x` must lie in `e`, and `e`
    /// must contain the wrap region. Upper bound (exact-or-limit for
    /// unwrapped bodies).
    pub fn row_sup_outside(&self, x: i64, e: Window) -> ExtReal {
        match &self.body {
            KernelBody::Finite(rows) => {
                let n = rows.len() as i64;
                let mut best = Bottom;
                for y in 0..n {
                    if !e.contains(y) {
                        best = best.max(rows[x as usize][y as usize]);
                    }
                }
                best
            }
            KernelBody::Banded { core, wrap } => {
                debug_assert!(e.contains(x));
                if let Some(w) = wrap {
                    if let Some(u) = w.region() {
                        debug_assert!(e.lo <= u.lo && e.hi >= u.hi, "eval window must cover wrap region");
                    }
                    // outside e: K(y) = y and ψ_y is pure tail
                    let xb = w.h.eval(x);
                    let base = banded_row_sup_outside(core, xb, e);
                    let (psi_lo, _) = w.psi.bounds_outside(&core.set, e);
                    return base.sub_f64(w.phi.eval(x)).sub_f64(psi_lo);
                }
                banded_row_sup_outside(core, x, e)
            }
        }
    }

    /// Transposed variant of `row_sup_outside`.
    pub fn col_sup_outside(&self, y: i64, e: Window) -> ExtReal {
        self.transpose().row_sup_outside(y, e)
    }

    /// Condition (ZC): no max-plus-zero row or column. The verdict is global
    /// (exact for banded bodies via periodicity); offenders are listed
    /// within `window`.
    pub fn zc_check(&self, window: Window) -> ZcReport {
        let set = self.index_set();
        let w = set.clip(window).expect("window must meet the index set");
        let mut offending_rows = Vec::new();
        let mut offending_cols = Vec::new();
        for x in w.iter() {
            if !self.row_nonzero(x) {
                offending_rows.push(x);
            }
            if !self.col_nonzero(x) {
                offending_cols.push(x);
            }
        }
        let ok = match &self.body {
            KernelBody::Finite(_) => offending_rows.is_empty() && offending_cols.is_empty(),
            KernelBody::Banded { core, .. } => {
                // representatives: boundary region + one full period beyond
                // the band width covers every row/column pattern
                let reps = self.zc_representatives(core);
                offending_rows.is_empty()
                    && offending_cols.is_empty()
                    && reps.iter().all(|&x| self.row_nonzero(x) && self.col_nonzero(x))
            }
        };
        ZcReport { ok, offending_rows, offending_cols }
    }

    fn zc_representatives(&self, core: &BandCore) -> Vec<i64> {
        let p = core.period as i64;
        let wdt = core.width;
        let mut reps: Vec<i64> = match core.set.kind {
            IndexKind::Naturals => (0..=(wdt + p)).collect(),
            IndexKind::Integers => (0..p).collect(),
            IndexKind::Finite(_) => unreachable!(),
        };
        if let Some(u) = self.irregular_region() {
            reps.extend(u.pad(wdt).iter().filter(|&x| core.set.contains(x)));
        }
        reps
    }

    fn row_nonzero(&self, x: i64) -> bool {
        match &self.body {
            KernelBody::Finite(rows) => rows[x as usize].iter().any(|e| !e.is_bottom()),
            KernelBody::Banded { core, .. } => {
                if !matches!(core.tail, TailFamily::MinusInf) {
                    return true;
                }
                let set = core.set;
                (-core.width..=core.width)
                    .filter(|k| set.contains(x + k))
                    .any(|k| !self.entry(x, x + k).is_bottom())
            }
        }
    }

    fn col_nonzero(&self, y: i64) -> bool {
        match &self.body {
            KernelBody::Finite(rows) => rows.iter().any(|r| !r[y as usize].is_bottom()),
            KernelBody::Banded { core, .. } => {
                if !matches!(core.tail, TailFamily::MinusInf) {
                    return true;
                }
                let set = core.set;
                (-core.width..=core.width)
                    .filter(|k| set.contains(y - k))
                    .any(|k| !self.entry(y - k, y).is_bottom())
            }
        }
    }

    /// Condition (TC) report with per-distance envelope samples.
    pub fn tc_check(&self) -> TcReport {
        let holds = self.tc_holds();
        let max_m = match &self.body {
            KernelBody::Finite(rows) => (rows.len() as i64 - 1).clamp(1, 4),
            KernelBody::Banded { core, .. } => core.width + 3,
        };
        let samples = (1..=max_m).map(|m| (m, self.shell_sup(m).value)).collect();
        TcReport { holds, samples }
    }
}

fn rho_shift(w: &Wrap) -> i64 {
    w.h.rho_to_identity() + w.k.rho_to_identity()
}

/// sup of core entries in row x over y outside e (x ∈ e).
fn banded_row_sup_outside(core: &BandCore, x: i64, e: Window) -> ExtReal {
    let mut best = Bottom;
    let r = core.residue(x);
    // right side: y ≥ e.hi + 1 (always exists for ℕ/ℤ)
    let m_right = e.hi + 1 - x;
    debug_assert!(m_right >= 1);
    for k in m_right..=core.width {
        if let Some(t) = core.band(k) {
            best = best.max(t[r]);
        }
    }
    best = best.max(core.tail.sup_from(m_right.max(core.width + 1)).0);
    // left side: y ≤ e.lo - 1
    let left_exists = match core.set.kind {
        IndexKind::Naturals => e.lo > 0,
        IndexKind::Integers => true,
        IndexKind::Finite(_) => unreachable!(),
    };
    if left_exists {
        let m_left = x - (e.lo - 1);
        debug_assert!(m_left >= 1);
        for k in m_left..=core.width {
            if let Some(t) = core.band(-k) {
                best = best.max(t[r]);
            }
        }
        best = best.max(core.tail.sup_from(m_left.max(core.width + 1)).0);
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZcReport {
    pub ok: bool,
    pub offending_rows: Vec<i64>,
    pub offending_cols: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcReport {
    pub holds: bool,
    /// (m, sup of entries at distance m)
    pub samples: Vec<(i64, ExtReal)>,
}

/// The running 3×3 example: zero diagonal, b_{01} = 0, all other
/// off-diagonal entries -1. Normal but not strongly normal.
#[cfg(test)]
pub fn k2() -> Kernel {
    Kernel::from_rows(&[
        &[0.0, 0.0, -1.0],
        &[-1.0, 0.0, -1.0],
        &[-1.0, -1.0, 0.0],
    ])
}

/// Off-diagonal -1/|x-y| on ℕ: strongly normal pointwise, satisfies (ZC)
/// but not (TC).
#[cfg(test)]
pub fn reciprocal_kernel() -> Kernel {
    Kernel::banded(BandCore {
        set: IndexSet::naturals(),
        period: 1,
        diag: vec![Finite(0.0)],
        width: 0,
        bands: vec![],
        tail: TailFamily::Reciprocal { c: 1.0, q: 1.0 },
    })
    .unwrap()
}
