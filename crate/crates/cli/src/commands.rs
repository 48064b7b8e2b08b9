//! Command implementations. Each returns an exit code, a human-readable
//! text report, and one self-describing machine record; the caller prints
//! one of the two. Exit codes: 0 = positive verdict/success, 1 = definite
//! refutation or finding, 2 = inconclusive, 3 = input error.

use maxplus_core::assignment::{self, SolutionMode};
use maxplus_core::bijection::Bijection;
use maxplus_core::closure::{btilde, kleene_plus, potentials, CloseEntry, PotVal};
use maxplus_core::func::{Func, Space};
use maxplus_core::kernel::Kernel;
use maxplus_core::num::ExtReal;
use maxplus_core::perestroika::{
    self, budget_with_eps, build_sat_graph, run_perestroika, structural_checks, PathLen,
    PerestroikaOptions, PerestroikaOutcome, SatError,
};
use maxplus_core::similarity::{
    invariance_suite, normality, normalize_finite, PropKind, PropStatus, Similarity, SuiteOptions,
};
use maxplus_core::space::{IndexKind, Window};
use maxplus_core::subdiff::{decide_strong_regularity, DecideError, Refutation, RegularityOutcome};
use maxplus_core::Verdict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::fmt::Write as _;

use crate::format::KernelFile;
use crate::gen;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub struct CommandOutput {
    pub exit: i32,
    pub text: String,
    pub machine: Value,
}

fn input_error(command: &str, msg: String) -> CommandOutput {
    CommandOutput {
        exit: EXIT_INPUT,
        text: format!("error: {msg}\n"),
        machine: json!({
            "schema": "maxplus.report.v1",
            "command": command,
            "error": msg,
            "exit": EXIT_INPUT,
        }),
    }
}

#[derive(Clone, Copy)]
pub struct CommonOpts {
    pub window: i64,
    pub distance: i64,
    pub budget_eps: f64,
    pub mode: SolutionMode,
    pub seed: u64,
    pub space: Space,
    pub tolerance: f64,
}

impl Default for CommonOpts {
    fn default() -> Self {
        CommonOpts {
            window: 20,
            distance: 0,
            budget_eps: 0.25,
            mode: SolutionMode::RestrictedBalls,
            seed: 0,
            space: Space::L1,
            tolerance: 1e-9,
        }
    }
}

/// The verdict window: the full table for finite kernels, [0, N] on ℕ,
/// [-N, N] on ℤ.
pub fn resolve_window(k: &Kernel, n: i64) -> Window {
    let set = k.index_set();
    match set.kind {
        IndexKind::Finite(sz) => Window::new(0, sz as i64 - 1),
        IndexKind::Naturals => Window::new(0, n.max(1)),
        IndexKind::Integers => Window::new(-n.max(1), n.max(1)),
    }
}

fn ext_json(e: ExtReal) -> Value {
    match e {
        ExtReal::Bottom => json!("-inf"),
        ExtReal::Finite(v) => json!(v),
    }
}

fn window_json(w: Window) -> Value {
    json!([w.lo, w.hi])
}

pub fn check(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    let zc = k.zc_check(w);
    let tc = k.tc_check();
    let norm = normality(k);
    let ok = zc.ok && tc.holds;
    let mut text = String::new();
    let _ = writeln!(text, "window {w}");
    let _ = writeln!(text, "ZC: {}", if zc.ok { "holds" } else { "fails" });
    if !zc.ok {
        let _ = writeln!(text, "  zero rows within window: {:?}", zc.offending_rows);
        let _ = writeln!(text, "  zero columns within window: {:?}", zc.offending_cols);
    }
    let _ = writeln!(text, "TC: {}", if tc.holds { "holds" } else { "fails" });
    let _ = writeln!(text, "  envelope samples (m, sup at distance m):");
    for (m, v) in &tc.samples {
        let _ = writeln!(text, "    {m}  {v}");
    }
    let _ = writeln!(
        text,
        "normality: normal = {}, strongly normal = {}, margin = {}{}",
        norm.normal,
        norm.strongly_normal,
        norm.margin,
        if norm.margin_zero { " (margin zero: supremum is a non-attained limit)" } else { "" }
    );
    let machine = json!({
        "schema": "maxplus.report.v1",
        "command": "check",
        "window": window_json(w),
        "zc": { "ok": zc.ok, "offending_rows": zc.offending_rows, "offending_cols": zc.offending_cols },
        "tc": { "holds": tc.holds, "envelope": tc.samples.iter().map(|(m, v)| json!([m, ext_json(*v)])).collect::<Vec<_>>() },
        "normality": {
            "normal": norm.normal,
            "strongly_normal": norm.strongly_normal,
            "margin": norm.margin,
            "margin_attained": norm.margin_attained,
            "margin_zero": norm.margin_zero,
        },
        "exit": if ok { EXIT_OK } else { EXIT_FINDING },
    });
    CommandOutput { exit: if ok { EXIT_OK } else { EXIT_FINDING }, text, machine }
}

pub fn assign(file: &KernelFile) -> CommandOutput {
    match assignment::solve_assignment(&file.kernel) {
        Ok(r) => {
            let mut text = String::new();
            let _ = writeln!(text, "optimal permutation: {:?}", r.permutation);
            let _ = writeln!(text, "value: {}", r.value);
            let _ = writeln!(text, "row duals:    {:?}", r.row_duals);
            let _ = writeln!(text, "column duals: {:?}", r.col_duals);
            let _ = writeln!(text, "unique: {}", r.unique);
            if let Some((p, v)) = &r.second_best {
                let _ = writeln!(text, "second best: {:?} with value {v}", p);
            }
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "assign",
                "permutation": r.permutation,
                "value": r.value,
                "row_duals": r.row_duals,
                "col_duals": r.col_duals,
                "unique": r.unique,
                "second_best": r.second_best.as_ref().map(|(p, v)| json!({"permutation": p, "value": v})),
                "exit": EXIT_OK,
            });
            CommandOutput { exit: EXIT_OK, text, machine }
        }
        Err(assignment::AssignError::Infeasible) => CommandOutput {
            exit: EXIT_FINDING,
            text: "infeasible: every permutation hits a -inf edge\n".into(),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "assign",
                "infeasible": true,
                "exit": EXIT_FINDING,
            }),
        },
        Err(e) => input_error("assign", e.to_string()),
    }
}

pub fn unique(file: &KernelFile) -> CommandOutput {
    match assignment::is_unique_optimal(&file.kernel) {
        Ok(u) => {
            let exit = if u.unique { EXIT_OK } else { EXIT_FINDING };
            let mut text = String::new();
            let _ = writeln!(text, "unique optimal assignment: {}", u.unique);
            if let Some(wit) = &u.witness {
                let _ = writeln!(text, "second optimal permutation: {:?}", wit);
            }
            if let Some(gap) = u.gap {
                let _ = writeln!(text, "gap to second best: {gap}");
            }
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "unique",
                "unique": u.unique,
                "witness": u.witness,
                "gap": u.gap,
                "exit": exit,
            });
            CommandOutput { exit, text, machine }
        }
        Err(assignment::AssignError::Infeasible) => CommandOutput {
            exit: EXIT_FINDING,
            text: "infeasible assignment\n".into(),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "unique",
                "infeasible": true,
                "exit": EXIT_FINDING,
            }),
        },
        Err(e) => input_error("unique", e.to_string()),
    }
}

pub fn normalize(file: &KernelFile) -> CommandOutput {
    match normalize_finite(&file.kernel) {
        Ok(r) => {
            let n = r.permutation.len();
            let norm = normality(&r.normal_kernel);
            let mut text = String::new();
            let _ = writeln!(text, "permutation F: {:?}", r.permutation);
            let _ = writeln!(text, "phi*: {:?}", r.similarity.phi.values);
            let _ = writeln!(text, "psi∘F: {:?}", r.similarity.psi.values);
            let _ = writeln!(text, "normal: {} (strongly normal: {})", norm.normal, norm.strongly_normal);
            let _ = writeln!(text, "normalized kernel:");
            let mut entries = Vec::new();
            for x in 0..n as i64 {
                let row: Vec<String> =
                    (0..n as i64).map(|y| r.normal_kernel.entry(x, y).to_string()).collect();
                let _ = writeln!(text, "  {}", row.join(" "));
                entries.push(
                    (0..n as i64)
                        .map(|y| ext_json(r.normal_kernel.entry(x, y)))
                        .collect::<Vec<_>>(),
                );
            }
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "normalize",
                "permutation": r.permutation,
                "phi": r.similarity.phi.values,
                "psi": r.similarity.psi.values,
                "normal": norm.normal,
                "strongly_normal": norm.strongly_normal,
                "kernel": entries,
                "exit": EXIT_OK,
            });
            CommandOutput { exit: EXIT_OK, text, machine }
        }
        Err(assignment::AssignError::Infeasible) => CommandOutput {
            exit: EXIT_FINDING,
            text: "infeasible assignment: no normal form\n".into(),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "normalize",
                "infeasible": true,
                "exit": EXIT_FINDING,
            }),
        },
        Err(e) => input_error("normalize", e.to_string()),
    }
}

pub fn closure(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    let c = kleene_plus(k, w);
    let mut text = String::new();
    let _ = writeln!(text, "window {w}, iterations {}", c.iterations);
    if c.plus_infinity {
        let _ = writeln!(text, "positive circuit: {:?}", c.witness_circuit.as_ref().unwrap());
    }
    let _ = writeln!(text, "interior exact: {}", c.interior_exact);
    let mut rows = Vec::new();
    for x in w.iter() {
        let mut row_text = Vec::new();
        let mut row_json = Vec::new();
        for y in w.iter() {
            let (t, j) = match c.at(x, y) {
                CloseEntry::Bottom => ("-inf".to_string(), json!("-inf")),
                CloseEntry::PlusInf => ("+inf".to_string(), json!("+inf")),
                CloseEntry::Finite(v) => (format!("{v}"), json!(v)),
            };
            row_text.push(t);
            row_json.push(j);
        }
        let _ = writeln!(text, "  {}", row_text.join(" "));
        rows.push(row_json);
    }
    let machine = json!({
        "schema": "maxplus.report.v1",
        "command": "closure",
        "window": window_json(w),
        "plus_infinity": c.plus_infinity,
        "witness_circuit": c.witness_circuit,
        "iterations": c.iterations,
        "interior_exact": c.interior_exact,
        "closure": rows,
        "exit": EXIT_OK,
    });
    CommandOutput { exit: EXIT_OK, text, machine }
}

pub fn potentials_cmd(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    let f = file.bijection("F").cloned().unwrap_or_else(Bijection::identity);
    let bt = match btilde(k, &f, w) {
        Ok(bt) => bt,
        Err(e) => return input_error("potentials", e.to_string()),
    };
    let c = maxplus_core::closure::kleene_plus_matrix(&bt, !k.is_banded());
    let p = potentials(&bt, &c, opts.tolerance);
    let pot = |v: &PotVal| match v {
        PotVal::Finite(x) => json!(x),
        PotVal::PlusInf => json!("+inf"),
    };
    let mut text = String::new();
    let _ = writeln!(text, "window {w} (window-relative for banded kernels)");
    let _ = writeln!(text, "phi-bar: {:?}", p.phi);
    let _ = writeln!(text, "psi-bar: {:?}", p.psi);
    let _ = writeln!(text, "finite: {}, nonnegative: {}, all zero: {}", p.finite, p.nonnegative, p.all_zero);
    let _ = writeln!(text, "fixed point (rows):      {}", p.eq_fixed_point_phi);
    let _ = writeln!(text, "fixed point (columns):   {}", p.eq_fixed_point_psi);
    let _ = writeln!(text, "closure fixed point:     {}", p.eq_closure_fixed_point);
    let _ = writeln!(text, "rows at -psi-bar:        {}", p.eq_neg_psi);
    let _ = writeln!(text, "columns at -phi-bar:     {}", p.eq_neg_phi);
    let _ = writeln!(text, "sup identity:            {}", p.sup_identity);
    let _ = writeln!(text, "far pairs nonpositive:   {} (sup {:?})", p.far_nonpositive, p.far_sup);
    let machine = json!({
        "schema": "maxplus.report.v1",
        "command": "potentials",
        "window": window_json(w),
        "tolerance": opts.tolerance,
        "phi": p.phi.iter().map(pot).collect::<Vec<_>>(),
        "psi": p.psi.iter().map(pot).collect::<Vec<_>>(),
        "finite": p.finite,
        "nonnegative": p.nonnegative,
        "all_zero": p.all_zero,
        "identities": {
            "fixed_point_rows": p.eq_fixed_point_phi.to_string(),
            "fixed_point_cols": p.eq_fixed_point_psi.to_string(),
            "closure_fixed_point": p.eq_closure_fixed_point.to_string(),
            "neg_psi_rows": p.eq_neg_psi.to_string(),
            "neg_phi_cols": p.eq_neg_phi.to_string(),
            "sup_identity": p.sup_identity.to_string(),
        },
        "far_nonpositive": p.far_nonpositive.to_string(),
        "far_sup": p.far_sup,
        "exit": EXIT_OK,
    });
    CommandOutput { exit: EXIT_OK, text, machine }
}

pub fn sat(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    let phi = file
        .func("phi")
        .cloned()
        .unwrap_or_else(|| Func::zero(w));
    let g = match build_sat_graph(k, &phi, w) {
        Ok(g) => g,
        Err(SatError::Eq32Violation { x, y, excess }) => {
            return input_error(
                "sat",
                format!("phi is not subinvariant: b+phi exceeds phi at ({x},{y}) by {excess}"),
            )
        }
        Err(e) => return input_error("sat", e.to_string()),
    };
    let report = structural_checks(&g);
    let exit = if report.ok { EXIT_OK } else { EXIT_FINDING };
    let plen = |p: &PathLen| match p {
        PathLen::Finite(n) => json!(n),
        PathLen::Capped => json!("capped"),
    };
    let mut text = String::new();
    let _ = writeln!(text, "window {w}, edge distance bound {}", g.m_sat);
    let _ = writeln!(text, "vertices: {:?}", g.verts);
    let _ = writeln!(text, "edges: {:?}", g.edges);
    let _ = writeln!(text, "initial points: {:?}", g.initial);
    let _ = writeln!(text, "final points: {:?}", g.final_pts);
    let _ = writeln!(text, "boundary crossings in/out: {:?} / {:?}", g.in_crossing, g.out_crossing);
    let _ = writeln!(text, "outside saturation: {}", g.outside_saturation);
    let _ = writeln!(text, "acyclic: {}", report.acyclic);
    if let Some(c) = &report.circuit {
        let _ = writeln!(text, "circuit: {:?}", c);
    }
    if let Some(s) = &report.string_suspect {
        let _ = writeln!(text, "string suspect (spans the window): {:?}", s);
    }
    let _ = writeln!(text, "lp/ep one-sided finite: {}", report.lp_ep_ok);
    let _ = writeln!(text, "end points exist: {}", report.endpoints_ok);
    let _ = writeln!(text, "all structural checks: {}", report.ok);
    let machine = json!({
        "schema": "maxplus.report.v1",
        "command": "sat",
        "window": window_json(w),
        "m_sat": g.m_sat,
        "vertices": g.verts,
        "edges": g.edges,
        "initial": g.initial,
        "final": g.final_pts,
        "in_crossing": g.in_crossing,
        "out_crossing": g.out_crossing,
        "outside_saturation": g.outside_saturation,
        "lp": g.lp.iter().map(|(v, l)| json!([v, plen(l)])).collect::<Vec<_>>(),
        "ep": g.ep.iter().map(|(v, l)| json!([v, plen(l)])).collect::<Vec<_>>(),
        "checks": {
            "acyclic": report.acyclic,
            "circuit": report.circuit,
            "string_suspect": report.string_suspect,
            "max_degree": report.max_degree,
            "degree_bound": report.degree_bound,
            "lp_ep_ok": report.lp_ep_ok,
            "endpoints_ok": report.endpoints_ok,
            "ok": report.ok,
        },
        "exit": exit,
    });
    CommandOutput { exit, text, machine }
}

pub fn perestroika_cmd(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    let set = k.index_set();
    let run_opts = PerestroikaOptions {
        budget: Some(budget_with_eps(&set, w, opts.budget_eps)),
        max_rounds: 0,
        verify_radius: opts.distance,
        mode: opts.mode,
    };
    match run_perestroika(k, w, &run_opts) {
        PerestroikaOutcome::Success(s) => {
            let mut text = String::new();
            let _ = writeln!(text, "success after {} rounds, margin {}", s.rounds, s.margin);
            let _ = writeln!(
                text,
                "identity pre-check margin: {} over {} window points",
                s.identity_check.margin, s.identity_check.window_len
            );
            let _ = writeln!(text, "outside saturation: {}", s.outside_saturation);
            let _ = writeln!(text, "phi on {}:", s.phi.window);
            let vals: Vec<String> = s.phi.values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(text, "  {}", vals.join(" "));
            for r in &s.trace {
                let _ = writeln!(
                    text,
                    "round {} mode {:?} removed {:?} deltas {:?}",
                    r.round, r.mode, r.removed, r.deltas
                );
            }
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "perestroika",
                "window": window_json(w),
                "budget_eps": opts.budget_eps,
                "margin": s.margin,
                "rounds": s.rounds,
                "outside_saturation": s.outside_saturation,
                "phi": { "window": window_json(s.phi.window), "values": s.phi.values },
                "trace": s.trace.iter().map(|r| json!({
                    "round": r.round,
                    "mode": format!("{:?}", r.mode),
                    "removed": r.removed,
                    "deltas": r.deltas,
                })).collect::<Vec<_>>(),
                "exit": EXIT_OK,
            });
            CommandOutput { exit: EXIT_OK, text, machine }
        }
        PerestroikaOutcome::Finding(fnd) => {
            let msg = format!("{fnd:?}");
            CommandOutput {
                exit: EXIT_FINDING,
                text: format!("finding: {msg}\n"),
                machine: json!({
                    "schema": "maxplus.report.v1",
                    "command": "perestroika",
                    "window": window_json(w),
                    "finding": msg,
                    "exit": EXIT_FINDING,
                }),
            }
        }
        PerestroikaOutcome::Exhausted { rounds } => CommandOutput {
            exit: EXIT_INCONCLUSIVE,
            text: format!("round budget exhausted after {rounds} rounds; enlarge the window\n"),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "perestroika",
                "window": window_json(w),
                "exhausted_after": rounds,
                "advice": "enlarge the window",
                "exit": EXIT_INCONCLUSIVE,
            }),
        },
        PerestroikaOutcome::Error(e) => CommandOutput {
            exit: EXIT_INCONCLUSIVE,
            text: format!("{e}\n"),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "perestroika",
                "window": window_json(w),
                "error": e.to_string(),
                "exit": EXIT_INCONCLUSIVE,
            }),
        },
    }
}

pub fn regular(file: &KernelFile, opts: &CommonOpts) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    // candidate witnesses: funcs named g*; claimed second solutions:
    // the pair (second_g, second_h)
    let candidates: Vec<Func> = file
        .funcs
        .iter()
        .filter(|(n, _)| n.starts_with('g'))
        .map(|(_, f)| f.clone())
        .collect();
    let claimed: Vec<(Func, Func)> = match (file.func("second_g"), file.func("second_h")) {
        (Some(g), Some(h)) => vec![(g.clone(), h.clone())],
        _ => Vec::new(),
    };
    match decide_strong_regularity(k, w, opts.space, &candidates, &claimed) {
        Err(DecideError::ZcFails) => CommandOutput {
            exit: EXIT_FINDING,
            text: "condition ZC fails: a zero row or column leaves the conjugacy partial — not strongly regular\n".into(),
            machine: json!({
                "schema": "maxplus.report.v1",
                "command": "regular",
                "window": window_json(w),
                "refuted": "zc-fails",
                "exit": EXIT_FINDING,
            }),
        },
        Err(e) => input_error("regular", e.to_string()),
        Ok(RegularityOutcome::Certified(c)) => {
            let images: Vec<i64> = c.window.iter().map(|x| c.bijection.eval(x)).collect();
            let mut text = String::new();
            let _ = writeln!(text, "certified strongly regular on {} ({})", c.window,
                if c.window_relative { "window-relative" } else { "exact" });
            let _ = writeln!(text, "witness source: {:?}", c.source);
            let _ = writeln!(text, "g: {:?}", c.g.values);
            let _ = writeln!(text, "f = Bᵀg: {:?}", c.f.values);
            let _ = writeln!(text, "bijection images: {:?}", images);
            let _ = writeln!(text, "strict margin: {}", c.margin);
            let _ = writeln!(text, "max displacement: {}", c.displacement);
            let _ = writeln!(text, "space {:?}: g ∈ {}, f ∈ {}", c.space, c.g_in_space, c.f_in_space);
            let _ = writeln!(text, "dual condition (iii): {}", c.dual_condition);
            let _ = writeln!(text, "TC holds: {}", c.tc_holds);
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "regular",
                "window": window_json(c.window),
                "window_relative": c.window_relative,
                "certified": true,
                "source": format!("{:?}", c.source),
                "g": { "window": window_json(c.g.window), "values": c.g.values },
                "f": { "window": window_json(c.f.window), "values": c.f.values },
                "bijection": images,
                "margin": c.margin,
                "displacement": c.displacement,
                "space": c.space.name(),
                "dual_condition": c.dual_condition,
                "tc_holds": c.tc_holds,
                "exit": EXIT_OK,
            });
            CommandOutput { exit: EXIT_OK, text, machine }
        }
        Ok(RegularityOutcome::Refuted(rec)) => {
            let (kind, detail) = match &rec.kind {
                Refutation::SecondSolution { h, residual, .. } => (
                    "second-solution",
                    json!({
                        "h": { "window": window_json(h.window), "values": h.values },
                        "residual": residual,
                    }),
                ),
                Refutation::SecondOptimalAssignment { optimal, second, value } => (
                    "second-optimal-assignment",
                    json!({ "optimal": optimal, "second": second, "value": value }),
                ),
                Refutation::Infeasible => ("infeasible", json!({})),
            };
            let mut text = String::new();
            let _ = writeln!(text, "refuted ({kind}) on {} ({})", rec.window,
                if rec.window_relative { "window-relative" } else { "exact" });
            let _ = writeln!(text, "TC holds: {}", rec.tc_holds);
            let _ = writeln!(text, "detail: {detail}");
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "regular",
                "window": window_json(rec.window),
                "window_relative": rec.window_relative,
                "refuted": kind,
                "detail": detail,
                "tc_holds": rec.tc_holds,
                "exit": EXIT_FINDING,
            });
            CommandOutput { exit: EXIT_FINDING, text, machine }
        }
        Ok(RegularityOutcome::Inconclusive(nw)) => {
            let mut text = String::new();
            let _ = writeln!(text, "inconclusive: no candidate witness certified on {}", nw.window);
            for (src, fail) in &nw.tried {
                let _ = writeln!(text, "  {:?}: {:?}", src, fail);
            }
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "regular",
                "window": window_json(nw.window),
                "inconclusive": true,
                "tried": nw.tried.iter().map(|(s, f)| json!({
                    "source": format!("{s:?}"),
                    "reason": format!("{f:?}"),
                })).collect::<Vec<_>>(),
                "tc_holds": nw.tc_holds,
                "exit": EXIT_INCONCLUSIVE,
            });
            CommandOutput { exit: EXIT_INCONCLUSIVE, text, machine }
        }
    }
}

pub fn invariance(file: &KernelFile, opts: &CommonOpts, props: &[PropKind]) -> CommandOutput {
    let k = &file.kernel;
    let w = resolve_window(k, opts.window);
    // similarity from embedded blocks, else seeded random
    let sim = match (file.func("phi"), file.func("psi")) {
        (Some(phi), Some(psi)) => Similarity {
            h: file.bijection("H").cloned().unwrap_or_else(Bijection::identity),
            k: file.bijection("K").cloned().unwrap_or_else(Bijection::identity),
            phi: phi.clone(),
            psi: psi.clone(),
            variant: maxplus_core::similarity::SimVariant::TwoSided,
            space: opts.space,
        },
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            match k.dim() {
                Some(n) => gen::random_similarity_finite(&mut rng, n, opts.space),
                None => gen::random_similarity_banded(&mut rng, w, opts.space),
            }
        }
    };
    let suite_opts = SuiteOptions {
        window: w,
        solution: file.bijection("F").cloned(),
        mode: opts.mode,
        space: opts.space,
    };
    match invariance_suite(k, &sim, props, &suite_opts) {
        Err(e) => input_error("invariance", e.to_string()),
        Ok(report) => {
            let mut any_disagree = false;
            let mut any_inconclusive = false;
            let mut text = String::new();
            let mut entries = Vec::new();
            for e in &report.entries {
                let status = match &e.status {
                    PropStatus::Agree { before, after } => {
                        format!("agree (before {before}, after {after})")
                    }
                    PropStatus::Disagree { before, after } => {
                        any_disagree = true;
                        format!("DISAGREE (before {before}, after {after})")
                    }
                    PropStatus::Refused { reason } => format!("refused: {}", reason.message()),
                    PropStatus::Inconclusive => {
                        any_inconclusive = true;
                        "inconclusive".to_string()
                    }
                };
                let _ = writeln!(text, "{}: {status}", e.prop.name());
                entries.push(json!({ "prop": e.prop.name(), "status": status }));
            }
            let exit = if any_disagree {
                EXIT_FINDING
            } else if any_inconclusive {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            let machine = json!({
                "schema": "maxplus.report.v1",
                "command": "invariance",
                "window": window_json(w),
                "seed": opts.seed,
                "space": opts.space.name(),
                "entries": entries,
                "all_preserved": report.all_preserved,
                "exit": exit,
            });
            CommandOutput { exit, text, machine }
        }
    }
}

/// Verdict → display helper shared with text output.
pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Closure entry rendering for tests.
pub fn close_entry_str(e: CloseEntry) -> String {
    match e {
        CloseEntry::Bottom => "-inf".into(),
        CloseEntry::PlusInf => "+inf".into(),
        CloseEntry::Finite(v) => format!("{v}"),
    }
}

/// Re-export for tests that sweep normality.
pub use maxplus_core::similarity::normality as kernel_normality;

#[allow(unused)]
fn _assert_perestroika_types(o: &PerestroikaOutcome) {
    if let PerestroikaOutcome::Success(s) = o {
        let _ = perestroika::structural_checks;
        let _ = &s.trace;
    }
}
