//! Saturation graphs and the perestroika peeling algorithm.
//!
//! Given a normal kernel and a potential φ with b_{xy} + φ_y ≤ φ_x for all
//! x ≠ y, the saturation graph collects the tight pairs. Peeling lowers φ
//! at final points (no leaving edge) by min(ψ_x, gap/2) and raises it at
//! initial points symmetrically, within a positive summable budget ψ, until
//! no tight off-diagonal pair is left: then c_{xy} = b_{xy} + φ_y - φ_x is
//! strongly normal and φ is a regularity witness.
//!
//! Everything is window-relative: saturated edges crossing the window
//! boundary cap the path-length counters, a tight path connecting both
//! boundaries is flagged as a potential string (with one automatic retry at
//! double window), and purely-outside saturation is reported, never
//! silently claimed away.

use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::{self, SolutionMode, VerifyReport};
use crate::bijection::Bijection;
use crate::func::{Func, Tail};
use crate::kernel::Kernel;
use crate::num::{Bottom, Finite};
use crate::similarity::normality;
use crate::space::{IndexSet, Window};

/// Longest-path counters, capped when a crossing edge makes the true value
/// unknowable from the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathLen {
    Finite(usize),
    Capped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SatGraph {
    pub window: Window,
    /// Saturated vertices inside the window.
    pub verts: Vec<i64>,
    /// Window-internal saturated edges (x, y): b_{xy} + φ_y = φ_x.
    pub edges: Vec<(i64, i64)>,
    /// lp(x): longest path leaving x; ep(x): longest path entering x.
    pub lp: Vec<(i64, PathLen)>,
    pub ep: Vec<(i64, PathLen)>,
    /// I₀ / F₀: vertices with no entering / leaving edge (crossings count).
    pub initial: Vec<i64>,
    pub final_pts: Vec<i64>,
    /// Distance bound: every saturated pair satisfies d(x,y) ≤ m_sat.
    pub m_sat: i64,
    /// Window vertices with a saturated edge leaving/entering across the
    /// window boundary.
    pub out_crossing: Vec<i64>,
    pub in_crossing: Vec<i64>,
    /// A circuit inside the window, when one exists.
    pub circuit: Option<Vec<i64>>,
    /// Tight pairs exist wholly outside the window (periodic zeros).
    pub outside_saturation: bool,
}

impl SatGraph {
    pub fn lp_of(&self, x: i64) -> Option<PathLen> {
        self.lp.iter().find(|(v, _)| *v == x).map(|(_, l)| *l)
    }

    pub fn ep_of(&self, x: i64) -> Option<PathLen> {
        self.ep.iter().find(|(v, _)| *v == x).map(|(_, l)| *l)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SatError {
    /// b_{xy} + φ_y > φ_x somewhere: φ is not a subinvariant potential.
    Eq32Violation { x: i64, y: i64, excess: f64 },
    /// No distance bound for saturated pairs exists (TC fails too hard).
    NoEdgeBound,
    /// φ must have a zero or constant tail.
    BadPotentialTail,
    EmptyWindow,
}

impl core::fmt::Display for SatError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SatError::Eq32Violation { x, y, excess } => {
                write!(f, "b_xy + phi_y <= phi_x violated at ({x},{y}) by {excess}")
            }
            SatError::NoEdgeBound => write!(f, "no saturated-edge distance bound (tightness fails)"),
            SatError::BadPotentialTail => write!(f, "potential must have a zero or constant tail"),
            SatError::EmptyWindow => write!(f, "window does not meet the index set"),
        }
    }
}

/// Distance bound for saturated pairs: the smallest m with
/// sup{b_{xy} : d ≥ m} strictly below -(osc φ), where a non-attained
/// supremum exactly at the bound also excludes ties.
fn edge_bound(k: &Kernel, phi: &Func, set: &IndexSet, window: Window) -> Result<i64, SatError> {
    if let Some(n) = k.dim() {
        return Ok(n as i64);
    }
    let (lo, hi) = phi.global_bounds(set);
    let osc = hi - lo;
    let cap = window.len() as i64 + 256;
    for m in 1..=cap {
        let env = k.sup_at_least(m);
        match env.value {
            Bottom => return Ok(m),
            Finite(v) => {
                if v < -osc || (v == -osc && !env.attained) {
                    return Ok(m);
                }
            }
        }
    }
    Err(SatError::NoEdgeBound)
}

/// Build the saturation graph of (b, φ) on the window, verifying
/// b_{xy} + φ_y ≤ φ_x on the padded scan region first.
pub fn build_sat_graph(k: &Kernel, phi: &Func, window: Window) -> Result<SatGraph, SatError> {
    if matches!(phi.tail, Tail::PowerDecay { .. }) {
        return Err(SatError::BadPotentialTail);
    }
    let set = k.index_set();
    let w = set.clip(window).ok_or(SatError::EmptyWindow)?;
    let m_sat = edge_bound(k, phi, &set, w)?;
    let scan = set.clip(w.pad(m_sat)).unwrap();
    // verify (3.2) and collect tight pairs touching the window
    let mut edges: Vec<(i64, i64)> = Vec::new();
    let mut out_crossing: Vec<i64> = Vec::new();
    let mut in_crossing: Vec<i64> = Vec::new();
    for x in scan.iter() {
        let px = phi.eval(x);
        for y in (x - m_sat).max(scan.lo)..=(x + m_sat).min(scan.hi) {
            if y == x || !set.contains(y) {
                continue;
            }
            if let Finite(v) = k.entry(x, y).add_f64(phi.eval(y)) {
                if v > px {
                    return Err(SatError::Eq32Violation { x, y, excess: v - px });
                }
                if v == px {
                    match (w.contains(x), w.contains(y)) {
                        (true, true) => edges.push((x, y)),
                        (true, false) => out_crossing.push(x),
                        (false, true) => in_crossing.push(y),
                        (false, false) => {}
                    }
                }
            }
        }
    }
    out_crossing.sort_unstable();
    out_crossing.dedup();
    in_crossing.sort_unstable();
    in_crossing.dedup();
    // tight pairs wholly outside the scan region: periodic band zeros
    // against the flat tail of φ
    let outside_saturation = if k.is_banded() {
        let env = k.sup_at_least(1);
        matches!(env.value, Finite(v) if v == 0.0) && env.attained
    } else {
        false
    };
    let mut verts: Vec<i64> = edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(out_crossing.iter().copied())
        .chain(in_crossing.iter().copied())
        .collect();
    verts.sort_unstable();
    verts.dedup();
    let graph = assemble(w, verts, edges, out_crossing, in_crossing, m_sat, outside_saturation);
    Ok(graph)
}

fn assemble(
    window: Window,
    verts: Vec<i64>,
    edges: Vec<(i64, i64)>,
    out_crossing: Vec<i64>,
    in_crossing: Vec<i64>,
    m_sat: i64,
    outside_saturation: bool,
) -> SatGraph {
    let idx = |x: i64| verts.binary_search(&x).expect("vertex present");
    let n = verts.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &edges {
        succ[idx(a)].push(idx(b));
        pred[idx(b)].push(idx(a));
    }
    let out_cap: Vec<bool> = verts.iter().map(|v| out_crossing.contains(v)).collect();
    let in_cap: Vec<bool> = verts.iter().map(|v| in_crossing.contains(v)).collect();
    // circuit detection by iterative DFS colouring
    let circuit = find_circuit(&succ, &verts);
    let lp = longest_paths(&succ, &out_cap, circuit.is_some());
    let ep = longest_paths(&pred, &in_cap, circuit.is_some());
    let mut initial = Vec::new();
    let mut final_pts = Vec::new();
    for i in 0..n {
        if pred[i].is_empty() && !in_cap[i] {
            initial.push(verts[i]);
        }
        if succ[i].is_empty() && !out_cap[i] {
            final_pts.push(verts[i]);
        }
    }
    SatGraph {
        window,
        lp: verts.iter().copied().zip(lp).collect(),
        ep: verts.iter().copied().zip(ep).collect(),
        verts,
        edges,
        initial,
        final_pts,
        m_sat,
        out_crossing,
        in_crossing,
        circuit,
        outside_saturation,
    }
}

fn find_circuit(succ: &[Vec<usize>], verts: &[i64]) -> Option<Vec<i64>> {
    let n = succ.len();
    // 0 = unseen, 1 = on stack, 2 = done
    let mut colour = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for start in 0..n {
        if colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some(&mut (v, ref mut ei)) = stack.last_mut() {
            if *ei < succ[v].len() {
                let u = succ[v][*ei];
                *ei += 1;
                match colour[u] {
                    0 => {
                        colour[u] = 1;
                        parent[u] = v;
                        stack.push((u, 0));
                    }
                    1 => {
                        // found a cycle u -> ... -> v -> u
                        let mut cyc = vec![verts[u]];
                        let mut cur = v;
                        while cur != u {
                            cyc.push(verts[cur]);
                            cur = parent[cur];
                        }
                        cyc.push(verts[u]);
                        cyc.reverse();
                        return Some(cyc);
                    }
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Longest path lengths along `next`, with capped vertices propagating
/// upstream. When the graph is cyclic every vertex is capped.
fn longest_paths(next: &[Vec<usize>], capped: &[bool], cyclic: bool) -> Vec<PathLen> {
    let n = next.len();
    if cyclic {
        return vec![PathLen::Capped; n];
    }
    let mut memo: Vec<Option<PathLen>> = vec![None; n];
    fn go(
        v: usize,
        next: &[Vec<usize>],
        capped: &[bool],
        memo: &mut Vec<Option<PathLen>>,
    ) -> PathLen {
        if let Some(m) = memo[v] {
            return m;
        }
        let mut best = if capped[v] { PathLen::Capped } else { PathLen::Finite(0) };
        for &u in &next[v] {
            let sub = go(u, next, capped, memo);
            best = match (best, sub) {
                (PathLen::Capped, _) | (_, PathLen::Capped) => PathLen::Capped,
                (PathLen::Finite(a), PathLen::Finite(b)) => PathLen::Finite(a.max(b + 1)),
            };
        }
        memo[v] = Some(best);
        best
    }
    (0..n).map(|v| go(v, next, capped, &mut memo)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructReport {
    pub acyclic: bool,
    pub circuit: Option<Vec<i64>>,
    /// A saturated path connecting the in-boundary to the out-boundary: a
    /// window-relative string candidate.
    pub string_suspect: Option<Vec<i64>>,
    pub max_degree: usize,
    /// #ball(m_sat): the a-priori degree bound from tightness.
    pub degree_bound: usize,
    /// Every vertex has lp or ep finite.
    pub lp_ep_ok: bool,
    pub lp_ep_violations: Vec<i64>,
    /// V ≠ ∅ implies end points exist.
    pub endpoints_ok: bool,
    pub ok: bool,
}

/// The structural facts behind the peeling argument: no circuits or
/// strings, finite degrees, one-sided finite path lengths, and existence of
/// end points. Violations are findings, not errors.
pub fn structural_checks(g: &SatGraph) -> StructReport {
    let n = g.verts.len();
    let idx = |x: i64| g.verts.binary_search(&x).unwrap();
    let mut deg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &g.edges {
        deg[idx(a)] += 1;
        deg[idx(b)] += 1;
        succ[idx(a)].push(idx(b));
    }
    let max_degree = deg.iter().copied().max().unwrap_or(0);
    // string suspect: reachability from in-crossing to out-crossing
    let string_suspect = find_string_path(g, &succ);
    let mut lp_ep_violations = Vec::new();
    for (i, &v) in g.verts.iter().enumerate() {
        let lp = g.lp[i].1;
        let ep = g.ep[i].1;
        if matches!(lp, PathLen::Capped) && matches!(ep, PathLen::Capped) {
            lp_ep_violations.push(v);
        }
    }
    let endpoints_ok = g.verts.is_empty() || !g.initial.is_empty() || !g.final_pts.is_empty();
    let acyclic = g.circuit.is_none();
    let lp_ep_ok = lp_ep_violations.is_empty();
    let ok = acyclic && string_suspect.is_none() && lp_ep_ok && endpoints_ok;
    StructReport {
        acyclic,
        circuit: g.circuit.clone(),
        string_suspect,
        max_degree,
        degree_bound: (2 * g.m_sat) as usize,
        lp_ep_ok,
        lp_ep_violations,
        endpoints_ok,
        ok,
    }
}

fn find_string_path(g: &SatGraph, succ: &[Vec<usize>]) -> Option<Vec<i64>> {
    let n = g.verts.len();
    let idx = |x: i64| g.verts.binary_search(&x).unwrap();
    let mut from_in = vec![false; n];
    let mut queue: Vec<usize> = g.in_crossing.iter().map(|&v| idx(v)).collect();
    let mut parent = vec![usize::MAX; n];
    for &q in &queue {
        from_in[q] = true;
    }
    while let Some(v) = queue.pop() {
        if g.out_crossing.contains(&g.verts[v]) {
            // walk the parents back to an in-crossing vertex
            let mut path = vec![g.verts[v]];
            let mut cur = v;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(g.verts[cur]);
            }
            path.reverse();
            return Some(path);
        }
        for &u in &succ[v] {
            if !from_in[u] {
                from_in[u] = true;
                parent[u] = v;
                queue.push(u);
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeelMode {
    /// P_F: lower φ at final points.
    Final,
    /// P_I: raise φ at initial points.
    Initial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub mode: PeelMode,
    pub removed: Vec<i64>,
    pub deltas: Vec<(i64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerestroikaState {
    pub phi: Func,
    pub phi0: Func,
    pub budget: Func,
    pub window: Window,
    pub round: usize,
    pub history: Vec<RoundRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PeelError {
    Sat(SatError),
    /// (A(-φ))_x reached φ_x at an end point: either certification is too
    /// loose (enlarge the window) or finality was inconsistent.
    Imprecision { x: i64 },
}

impl core::fmt::Display for PeelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PeelError::Sat(e) => write!(f, "{e}"),
            PeelError::Imprecision { x } => {
                write!(f, "peel gap closed at x = {x}; enlarge the window")
            }
        }
    }
}

impl PerestroikaState {
    pub fn start(k: &Kernel, budget: Func, window: Window) -> Self {
        let w = k.index_set().clip(window).expect("window meets index set");
        let phi = Func::zero(w);
        PerestroikaState {
            phi: phi.clone(),
            phi0: phi,
            budget,
            window: w,
            round: 0,
            history: Vec::new(),
        }
    }

    /// max |φ - φ⁰|, for the budget invariant.
    pub fn drift_within_budget(&self) -> bool {
        self.window.iter().all(|x| {
            (self.phi.eval(x) - self.phi0.eval(x)).abs() <= self.budget.eval(x)
        })
    }
}

/// Budget ψ: constant ε on finite sets, ε·2^(-d(x, x̄)) on countable ones —
/// positive and summable either way.
pub fn budget_with_eps(set: &IndexSet, window: Window, eps: f64) -> Func {
    assert!(eps > 0.0, "budget must be positive");
    let w = set.clip(window).expect("window meets index set");
    let values = w
        .iter()
        .map(|x| {
            if set.is_finite() {
                eps
            } else {
                eps * libm::exp2(-((x - set.basepoint).abs() as f64))
            }
        })
        .collect();
    // the positive tail is irrelevant beyond the peel window; zero keeps
    // the function summable and exact
    Func::new(w, values, Tail::Zero)
}

/// The default budget, ε = 1/4.
pub fn default_budget(set: &IndexSet, window: Window) -> Func {
    budget_with_eps(set, window, 0.25)
}

/// One peeling step. Recomputes the saturation graph, updates φ at the
/// final (resp. initial) points by min(ψ_x, gap/2), and records the round.
/// No-op when the end-point set is empty.
pub fn peel_step(
    k: &Kernel,
    state: &PerestroikaState,
    mode: PeelMode,
) -> Result<(PerestroikaState, SatGraph), PeelError> {
    let g = build_sat_graph(k, &state.phi, state.window).map_err(PeelError::Sat)?;
    let targets: &[i64] = match mode {
        PeelMode::Final => &g.final_pts,
        PeelMode::Initial => &g.initial,
    };
    if targets.is_empty() {
        return Ok((state.clone(), g));
    }
    let set = k.index_set();
    let scan = set.clip(state.window.pad(g.m_sat)).unwrap();
    let mut next = state.phi.clone();
    let mut deltas = Vec::new();
    for &x in targets {
        // (A(-φ))_x = sup_{y≠x} (b_{xy} + φ_y), with A the off-diagonal
        // kernel; for P_I the transposed sup is used
        let mut a_up = Bottom;
        for y in scan.iter() {
            if y == x {
                continue;
            }
            let term = match mode {
                PeelMode::Final => k.entry(x, y).add_f64(state.phi.eval(y)),
                PeelMode::Initial => k.entry(y, x).sub_f64(state.phi.eval(y)),
            };
            a_up = a_up.max(term);
        }
        let (tail_lo, tail_hi) = state.phi.bounds_outside(&set, scan);
        let tail = match mode {
            PeelMode::Final => {
                let s = k.row_sup_outside(x, scan);
                if tail_hi == f64::NEG_INFINITY { Bottom } else { s.add_f64(tail_hi) }
            }
            PeelMode::Initial => {
                let s = k.col_sup_outside(x, scan);
                if tail_lo == f64::INFINITY { Bottom } else { s.sub_f64(tail_lo) }
            }
        };
        a_up = a_up.max(tail);
        let reference = match mode {
            PeelMode::Final => state.phi.eval(x),
            PeelMode::Initial => -state.phi.eval(x),
        };
        let gap = match a_up {
            Bottom => f64::INFINITY,
            Finite(v) => reference - v,
        };
        if gap <= 0.0 {
            return Err(PeelError::Imprecision { x });
        }
        let delta = state.budget.eval(x).min(gap / 2.0);
        let signed = match mode {
            PeelMode::Final => -delta,
            PeelMode::Initial => delta,
        };
        let i = next.window.offset(x);
        next.values[i] += signed;
        deltas.push((x, signed));
    }
    let mut out = state.clone();
    out.phi = next;
    out.round += 1;
    out.history.push(RoundRecord {
        round: out.round,
        mode,
        removed: targets.to_vec(),
        deltas,
    });
    Ok((out, g))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    NotNormal,
    IdentityNotStrongSolution { margin: f64, violating: Option<Bijection> },
    Circuit(Vec<i64>),
    /// A saturated path spans the window in both directions even after the
    /// automatic retry at double window.
    StringSuspect(Vec<i64>),
    /// Vertices with both path-length counters capped.
    LpEpCapped(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PerestroikaOutcome {
    Success(PerestroikaSuccess),
    Finding(Finding),
    /// Round budget exhausted; enlarge the window or raise max_rounds.
    Exhausted { rounds: usize },
    Error(PeelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerestroikaSuccess {
    pub phi: Func,
    /// min over pairs touching the window of φ_x - b_{xy} - φ_y; > 0 means
    /// c_{xy} = b_{xy} + φ_y - φ_x is strongly normal on the window.
    pub margin: f64,
    pub rounds: usize,
    pub trace: Vec<RoundRecord>,
    pub identity_check: VerifyReport,
    /// Tight pairs persist outside the window (claims are window-relative).
    pub outside_saturation: bool,
}

pub struct PerestroikaOptions {
    pub budget: Option<Func>,
    pub max_rounds: usize,
    /// Deviation radius for the identity pre-check (0 = auto: 2·bandwidth
    /// or the full dimension).
    pub verify_radius: i64,
    pub mode: SolutionMode,
}

impl Default for PerestroikaOptions {
    fn default() -> Self {
        PerestroikaOptions { budget: None, max_rounds: 0, verify_radius: 0, mode: SolutionMode::RestrictedBalls }
    }
}

/// The full pipeline: check normality and the identity solution, peel final
/// points to stabilization, then initial points, and return the strict
/// potential with its margin — or a structural finding explaining why the
/// hypotheses fail.
pub fn run_perestroika(k: &Kernel, window: Window, opts: &PerestroikaOptions) -> PerestroikaOutcome {
    run_inner(k, window, opts, true)
}

fn run_inner(
    k: &Kernel,
    window: Window,
    opts: &PerestroikaOptions,
    allow_retry: bool,
) -> PerestroikaOutcome {
    let set = k.index_set();
    let w = match set.clip(window) {
        Some(w) => w,
        None => return PerestroikaOutcome::Error(PeelError::Sat(SatError::EmptyWindow)),
    };
    if !normality(k).normal {
        return PerestroikaOutcome::Finding(Finding::NotNormal);
    }
    let radius = if opts.verify_radius > 0 {
        opts.verify_radius
    } else {
        match &k.body {
            crate::kernel::KernelBody::Finite(rows) => rows.len() as i64,
            crate::kernel::KernelBody::Banded { core, .. } => (2 * core.width).max(2),
        }
    };
    let identity_check =
        match assignment::verify_local_strong_solution(k, &Bijection::identity(), radius, w, opts.mode) {
            Ok(r) => r,
            Err(_) => {
                return PerestroikaOutcome::Finding(Finding::IdentityNotStrongSolution {
                    margin: f64::NEG_INFINITY,
                    violating: None,
                })
            }
        };
    if !identity_check.verified {
        // on a normal kernel a zero-loss deviation is a zero-weight circuit
        // in Sat(0); surface that structure when it is visible
        if let Ok(g) = build_sat_graph(k, &Func::zero(w), w) {
            if let Some(c) = g.circuit {
                return PerestroikaOutcome::Finding(Finding::Circuit(c));
            }
        }
        return PerestroikaOutcome::Finding(Finding::IdentityNotStrongSolution {
            margin: identity_check.margin,
            violating: identity_check.violating.clone(),
        });
    }
    let budget = opts.budget.clone().unwrap_or_else(|| default_budget(&set, w));
    let max_rounds = if opts.max_rounds > 0 { opts.max_rounds } else { 2 * w.len() + 8 };
    let mut state = PerestroikaState::start(k, budget, w);

    // final-point phase to stabilization, then initial-point phase
    let mut last_graph = None;
    for phase in [PeelMode::Final, PeelMode::Initial] {
        loop {
            if state.round > max_rounds {
                return PerestroikaOutcome::Exhausted { rounds: state.round };
            }
            let before = state.round;
            let (next, g) = match peel_step(k, &state, phase) {
                Ok(r) => r,
                Err(e) => return PerestroikaOutcome::Error(e),
            };
            if let Some(c) = &g.circuit {
                return PerestroikaOutcome::Finding(Finding::Circuit(c.clone()));
            }
            debug_assert!(next.drift_within_budget());
            let stalled = next.round == before;
            state = next;
            last_graph = Some(g);
            if stalled {
                break;
            }
        }
    }
    let g = last_graph.expect("at least one graph built");
    if !g.verts.is_empty() {
        let report = structural_checks(&g);
        if let Some(path) = report.string_suspect {
            if allow_retry {
                let bigger = w.pad(w.len() as i64);
                return run_inner(k, bigger, opts, false);
            }
            return PerestroikaOutcome::Finding(Finding::StringSuspect(path));
        }
        if let Some(c) = report.circuit {
            return PerestroikaOutcome::Finding(Finding::Circuit(c));
        }
        if !report.lp_ep_ok {
            return PerestroikaOutcome::Finding(Finding::LpEpCapped(report.lp_ep_violations));
        }
        // end points exist but the round budget did not let us finish
        return PerestroikaOutcome::Exhausted { rounds: state.round };
    }
    // success: compute the window margin of c_{xy} = b_{xy} + φ_y - φ_x
    let m_sat = g.m_sat;
    let scan = set.clip(w.pad(m_sat)).unwrap();
    let mut margin = f64::INFINITY;
    for x in scan.iter() {
        for y in (x - m_sat).max(scan.lo)..=(x + m_sat).min(scan.hi) {
            if y == x || (!w.contains(x) && !w.contains(y)) {
                continue;
            }
            if let Finite(v) = k.entry(x, y).add_f64(state.phi.eval(y)) {
                margin = margin.min(state.phi.eval(x) - v);
            }
        }
    }
    // pairs at distance > m_sat: strict by the envelope bound
    if let Finite(env) = k.sup_at_least(m_sat + 1).value {
        let (lo, hi) = state.phi.global_bounds(&set);
        margin = margin.min(-(env + (hi - lo)));
    }
    PerestroikaOutcome::Success(PerestroikaSuccess {
        phi: state.phi.clone(),
        margin,
        rounds: state.round,
        trace: state.history.clone(),
        identity_check,
        outside_saturation: g.outside_saturation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{k2, BandCore, TailFamily};
    use crate::num::ExtReal;

    fn chain_kernel() -> Kernel {
        // zeros 0→1→2 saturated with φ = 0, everything else -1
        Kernel::from_rows(&[
            &[0.0, 0.0, -1.0],
            &[-1.0, 0.0, 0.0],
            &[-1.0, -1.0, 0.0],
        ])
    }

    #[test]
    fn k2_graph_has_one_edge() {
        let g = build_sat_graph(&k2(), &Func::zero(Window::new(0, 2)), Window::new(0, 2)).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(g.verts, vec![0, 1]);
        assert_eq!(g.initial, vec![0]);
        assert_eq!(g.final_pts, vec![1]);
        assert!(structural_checks(&g).ok);
    }

    #[test]
    fn strongly_normal_graph_is_empty() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        let g = build_sat_graph(&k, &Func::zero(Window::new(0, 1)), Window::new(0, 1)).unwrap();
        assert!(g.verts.is_empty() && g.edges.is_empty());
    }

    #[test]
    fn chain_levels() {
        let g = build_sat_graph(&chain_kernel(), &Func::zero(Window::new(0, 2)), Window::new(0, 2))
            .unwrap();
        assert_eq!(g.lp_of(0), Some(PathLen::Finite(2)));
        assert_eq!(g.ep_of(2), Some(PathLen::Finite(2)));
        assert_eq!(g.initial, vec![0]);
        assert_eq!(g.final_pts, vec![2]);
    }

    #[test]
    fn eq32_violation_is_refused() {
        let k = Kernel::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let r = build_sat_graph(&k, &Func::zero(Window::new(0, 1)), Window::new(0, 1));
        assert!(matches!(r, Err(SatError::Eq32Violation { x: 0, y: 1, .. })));
    }

    #[test]
    fn circuit_is_found() {
        let k = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let g = build_sat_graph(&k, &Func::zero(Window::new(0, 1)), Window::new(0, 1)).unwrap();
        assert!(g.circuit.is_some());
        let report = structural_checks(&g);
        assert!(!report.ok && !report.acyclic);
    }

    #[test]
    fn string_suspect_on_zero_chain_band() {
        // b_{x,x+1} = 0 for all x: an infinite saturated chain
        let k = Kernel::banded(BandCore {
            set: crate::IndexSet::integers(),
            period: 1,
            diag: alloc::vec![Finite(0.0)],
            width: 1,
            bands: alloc::vec![
                (-1, alloc::vec![Finite(-1.0)]),
                (1, alloc::vec![Finite(0.0)]),
            ],
            tail: TailFamily::Linear { a: 1.0, b: 0.0 },
        })
        .unwrap();
        let w = Window::new(-5, 5);
        let g = build_sat_graph(&k, &Func::zero(w), w).unwrap();
        assert!(!g.in_crossing.is_empty() && !g.out_crossing.is_empty());
        let report = structural_checks(&g);
        assert!(report.string_suspect.is_some());
        assert!(!report.lp_ep_ok);
        // the full pipeline retries at double window, then reports
        match run_perestroika(&k, w, &PerestroikaOptions::default()) {
            PerestroikaOutcome::Finding(Finding::StringSuspect(_)) => {}
            other => panic!("expected string finding, got {other:?}"),
        }
    }

    #[test]
    fn peel_k2_by_hand() {
        // (A(-0))_1 = max(b_10, b_12) = -1, gap 1, ψ = 1/4:
        // φ'_1 = -min(1/4, 1/2) = -1/4, and the graph empties
        let w = Window::new(0, 2);
        let state = PerestroikaState::start(&k2(), default_budget(&crate::IndexSet::finite(3), w), w);
        let (s1, g0) = peel_step(&k2(), &state, PeelMode::Final).unwrap();
        assert_eq!(g0.final_pts, vec![1]);
        assert_eq!(s1.phi.eval(1), -0.25);
        assert_eq!(s1.phi.eval(0), 0.0);
        let g1 = build_sat_graph(&k2(), &s1.phi, w).unwrap();
        assert!(g1.verts.is_empty());
    }

    #[test]
    fn monotone_peeling_level_shift() {
        // F_n(P_F(φ)) = F_{n+1}(φ) on the chain kernel
        let k = chain_kernel();
        let w = Window::new(0, 2);
        let state = PerestroikaState::start(&k, default_budget(&crate::IndexSet::finite(3), w), w);
        let g0 = build_sat_graph(&k, &state.phi, w).unwrap();
        let f1_before: Vec<i64> = g0
            .lp
            .iter()
            .filter(|(_, l)| *l == PathLen::Finite(1))
            .map(|(v, _)| *v)
            .collect();
        let (s1, _) = peel_step(&k, &state, PeelMode::Final).unwrap();
        let g1 = build_sat_graph(&k, &s1.phi, w).unwrap();
        assert_eq!(g1.final_pts, f1_before, "peeled finals are the old level-1 set");
    }

    #[test]
    fn full_run_on_k2() {
        match run_perestroika(&k2(), Window::new(0, 2), &PerestroikaOptions::default()) {
            PerestroikaOutcome::Success(s) => {
                assert_eq!(s.phi.eval(0), 0.0);
                assert_eq!(s.phi.eval(1), -0.25);
                assert_eq!(s.phi.eval(2), 0.0);
                assert_eq!(s.margin, 0.25);
                assert!(s.identity_check.verified);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn strongly_normal_is_immediate() {
        let k = Kernel::from_rows(&[&[0.0, -1.0], &[-2.0, 0.0]]);
        match run_perestroika(&k, Window::new(0, 1), &PerestroikaOptions::default()) {
            PerestroikaOutcome::Success(s) => {
                assert_eq!(s.phi.eval(0), 0.0);
                assert_eq!(s.phi.eval(1), 0.0);
                assert_eq!(s.margin, 1.0);
                assert_eq!(s.rounds, 0); // both phases stall immediately
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn circuit_kernel_is_a_finding() {
        let k = Kernel::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]);
        match run_perestroika(&k, Window::new(0, 1), &PerestroikaOptions::default()) {
            PerestroikaOutcome::Finding(Finding::Circuit(c)) => {
                assert_eq!(c.len(), 3); // the two-cycle 0 → 1 → 0
            }
            other => panic!("expected circuit finding, got {other:?}"),
        }
    }

    #[test]
    fn banded_acyclic_zero_pattern_peels() {
        // period 4, zero band edges x → x+1 for x ≡ 0 (mod 4)
        let z = ExtReal::finite(0.0);
        let m = ExtReal::finite(-1.0);
        let k = Kernel::banded(BandCore {
            set: crate::IndexSet::integers(),
            period: 4,
            diag: alloc::vec![z; 4],
            width: 1,
            bands: alloc::vec![
                (-1, alloc::vec![m; 4]),
                (1, alloc::vec![z, m, m, m]),
            ],
            tail: TailFamily::Linear { a: 0.5, b: 0.5 },
        })
        .unwrap();
        let w = Window::new(-10, 10);
        match run_perestroika(&k, w, &PerestroikaOptions::default()) {
            PerestroikaOutcome::Success(s) => {
                assert!(s.margin > 0.0, "margin = {}", s.margin);
                assert!(s.outside_saturation, "zeros repeat outside the window");
                // budget honoured
                for x in w.iter() {
                    assert!(s.phi.eval(x).abs() <= 0.25 * libm::exp2(-(x.abs() as f64)) + 1e-15);
                }
            }
            other => panic!("expected success, got {other:?}"),
        }
    }
}
