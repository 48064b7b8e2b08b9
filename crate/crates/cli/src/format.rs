//! The kernel file format: a line-based text schema for finite tables,
//! banded kernels, and embedded function/bijection blocks.
//!
//! ```text
//! maxplus v1
//! kernel finite 3
//! row 0 0 -1
//! row -1 0 -1
//! row -1 -1 0
//! func g 0 2
//! values 0 -0.25 0
//! tail zero
//! bijection F 0 2
//! images 0 1 2
//! ```
//!
//! Banded kernels list the index set, period, width, one `diag` line, one
//! `band k ...` line per offset 1 ≤ |k| ≤ width, and a tail family:
//!
//! ```text
//! kernel banded naturals period 1 width 0
//! diag 0
//! tail reciprocal 1 1
//! ```
//!
//! `-inf` is the bottom entry. Numbers serialize through Rust's shortest
//! round-trip formatting, so parse∘serialize is the identity on canonical
//! files and byte-identical across runs.

use maxplus_core::bijection::Bijection;
use maxplus_core::func::{Func, Tail};
use maxplus_core::kernel::{BandCore, Kernel, KernelBody, TailFamily};
use maxplus_core::num::{Bottom, ExtReal, Finite};
use maxplus_core::space::{IndexKind, IndexSet, Window};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFile {
    pub kernel: Kernel,
    pub funcs: Vec<(String, Func)>,
    pub bijections: Vec<(String, Bijection)>,
}

impl KernelFile {
    pub fn new(kernel: Kernel) -> Self {
        KernelFile { kernel, funcs: Vec::new(), bijections: Vec::new() }
    }

    pub fn func(&self, name: &str) -> Option<&Func> {
        self.funcs.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn bijection(&self, name: &str) -> Option<&Bijection> {
        self.bijections.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }
}

fn parse_ext(tok: &str, line: usize) -> Result<ExtReal, ParseError> {
    if tok == "-inf" {
        return Ok(Bottom);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Finite(v)),
        _ => err(line, format!("bad entry `{tok}` (finite number or -inf)")),
    }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(line, format!("bad {what} `{tok}`")),
    }
}

fn parse_i64(tok: &str, line: usize, what: &str) -> Result<i64, ParseError> {
    tok.parse::<i64>().map_err(|_| ParseError { line, msg: format!("bad {what} `{tok}`") })
}

struct Lines<'a> {
    iter: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { iter: text.lines().enumerate().peekable() }
    }

    /// Next meaningful line as (1-based number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        loop {
            let (i, line) = self.iter.next()?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        loop {
            let (_, line) = self.iter.peek()?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                self.iter.next();
                continue;
            }
            return t.split_whitespace().next();
        }
    }
}

pub fn parse(text: &str) -> Result<KernelFile, ParseError> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.next_tokens().ok_or(ParseError { line: 1, msg: "empty file".into() })?;
    if header != ["maxplus", "v1"] {
        return err(ln, "expected header `maxplus v1`");
    }
    let (ln, kw) = lines
        .next_tokens()
        .ok_or(ParseError { line: ln, msg: "expected a kernel block".into() })?;
    if kw.first() != Some(&"kernel") {
        return err(ln, "expected `kernel finite <n>` or `kernel banded ...`");
    }
    let kernel = match kw.get(1) {
        Some(&"finite") => parse_finite(&mut lines, &kw, ln)?,
        Some(&"banded") => parse_banded(&mut lines, &kw, ln)?,
        _ => return err(ln, "kernel kind must be `finite` or `banded`"),
    };
    let mut file = KernelFile::new(kernel);
    while let Some(kwd) = lines.peek_keyword() {
        match kwd {
            "func" => {
                let (name, f) = parse_func(&mut lines)?;
                file.funcs.push((name, f));
            }
            "bijection" => {
                let (name, b) = parse_bijection(&mut lines)?;
                file.bijections.push((name, b));
            }
            other => {
                let (ln, _) = lines.next_tokens().unwrap();
                return err(ln, format!("unexpected block `{other}`"));
            }
        }
    }
    Ok(file)
}

fn parse_finite(lines: &mut Lines, kw: &[&str], ln: usize) -> Result<Kernel, ParseError> {
    let n = parse_i64(kw.get(2).copied().unwrap_or(""), ln, "size")? as usize;
    if n == 0 {
        return err(ln, "finite kernel must be nonempty");
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, toks) = lines
            .next_tokens()
            .ok_or(ParseError { line: ln, msg: "missing row".into() })?;
        if toks.first() != Some(&"row") {
            return err(ln, "expected `row ...`");
        }
        if toks.len() != n + 1 {
            return err(ln, format!("non-square finite table: row has {} entries, expected {n}", toks.len() - 1));
        }
        let row: Result<Vec<ExtReal>, _> = toks[1..].iter().map(|t| parse_ext(t, ln)).collect();
        rows.push(row?);
    }
    Kernel::finite(rows).map_err(|e| ParseError { line: ln, msg: e.to_string() })
}

fn parse_banded(lines: &mut Lines, kw: &[&str], ln: usize) -> Result<Kernel, ParseError> {
    let set = match kw.get(2) {
        Some(&"naturals") => IndexSet::naturals(),
        Some(&"integers") => IndexSet::integers(),
        _ => return err(ln, "banded index set must be `naturals` or `integers`"),
    };
    if kw.get(3) != Some(&"period") || kw.get(5) != Some(&"width") {
        return err(ln, "expected `kernel banded <set> period <p> width <w>`");
    }
    let period = parse_i64(kw.get(4).copied().unwrap_or(""), ln, "period")?;
    if period <= 0 {
        return err(ln, "period must be positive");
    }
    let width = parse_i64(kw.get(6).copied().unwrap_or(""), ln, "width")?;
    if width < 0 {
        return err(ln, "width must be nonnegative");
    }
    let period = period as usize;
    let (dln, dtoks) = lines
        .next_tokens()
        .ok_or(ParseError { line: ln, msg: "missing diag line".into() })?;
    if dtoks.first() != Some(&"diag") || dtoks.len() != period + 1 {
        return err(dln, format!("expected `diag` with {period} entries"));
    }
    let diag: Result<Vec<ExtReal>, _> = dtoks[1..].iter().map(|t| parse_ext(t, dln)).collect();
    let diag = diag?;
    let mut bands = Vec::new();
    let mut tail = None;
    let mut last_ln = dln;
    while let Some((bln, toks)) = lines.next_tokens() {
        last_ln = bln;
        match toks.first() {
            Some(&"band") => {
                let k = parse_i64(toks.get(1).copied().unwrap_or(""), bln, "band offset")?;
                if k == 0 || k.abs() > width {
                    return err(bln, format!("band offset {k} outside 1 ≤ |k| ≤ {width}"));
                }
                if toks.len() != period + 2 {
                    return err(bln, format!("band needs {period} entries"));
                }
                let t: Result<Vec<ExtReal>, _> =
                    toks[2..].iter().map(|t| parse_ext(t, bln)).collect();
                bands.push((k, t?));
            }
            Some(&"tail") => {
                tail = Some(parse_tail_family(&toks, bln)?);
                break;
            }
            _ => return err(bln, "expected `band ...` or `tail ...`"),
        }
    }
    let tail = match tail {
        Some(t) => t,
        None => return err(last_ln, "banded kernel needs a tail line"),
    };
    bands.sort_by_key(|(k, _)| *k);
    Kernel::banded(BandCore { set, period, diag, width, bands, tail })
        .map_err(|e| ParseError { line: ln, msg: e.to_string() })
}

fn parse_tail_family(toks: &[&str], ln: usize) -> Result<TailFamily, ParseError> {
    match toks.get(1) {
        Some(&"minusinf") => Ok(TailFamily::MinusInf),
        Some(&"linear") => {
            let a = parse_f64(toks.get(2).copied().unwrap_or(""), ln, "tail slope a")?;
            let b = parse_f64(toks.get(3).copied().unwrap_or(""), ln, "tail offset b")?;
            if a <= 0.0 {
                return err(ln, "linear tail needs a > 0");
            }
            Ok(TailFamily::Linear { a, b })
        }
        Some(&"power") => {
            let c = parse_f64(toks.get(2).copied().unwrap_or(""), ln, "tail scale c")?;
            let q = parse_f64(toks.get(3).copied().unwrap_or(""), ln, "tail exponent q")?;
            if c <= 0.0 || q <= 0.0 {
                return err(ln, "power tail needs c,q > 0");
            }
            Ok(TailFamily::Power { c, q })
        }
        Some(&"reciprocal") => {
            let c = parse_f64(toks.get(2).copied().unwrap_or(""), ln, "tail scale c")?;
            let q = parse_f64(toks.get(3).copied().unwrap_or(""), ln, "tail exponent q")?;
            if c <= 0.0 || q <= 0.0 {
                return err(ln, "reciprocal tail needs c,q > 0");
            }
            Ok(TailFamily::Reciprocal { c, q })
        }
        other => err(ln, format!("unknown tail family `{}`", other.unwrap_or(&"?"))),
    }
}

fn parse_func(lines: &mut Lines) -> Result<(String, Func), ParseError> {
    let (ln, toks) = lines.next_tokens().unwrap();
    let name = toks.get(1).map(|s| s.to_string()).unwrap_or_default();
    if name.is_empty() {
        return err(ln, "func needs a name");
    }
    let lo = parse_i64(toks.get(2).copied().unwrap_or(""), ln, "window lo")?;
    let hi = parse_i64(toks.get(3).copied().unwrap_or(""), ln, "window hi")?;
    if lo > hi {
        return err(ln, "func window is empty");
    }
    let (vln, vtoks) = lines
        .next_tokens()
        .ok_or(ParseError { line: ln, msg: "missing values line".into() })?;
    if vtoks.first() != Some(&"values") {
        return err(vln, "expected `values ...`");
    }
    let need = (hi - lo + 1) as usize;
    if vtoks.len() != need + 1 {
        return err(vln, format!("func needs {need} values"));
    }
    let vals: Result<Vec<f64>, _> = vtoks[1..]
        .iter()
        .map(|t| parse_f64(t, vln, "func value"))
        .collect();
    let (tln, ttoks) = lines
        .next_tokens()
        .ok_or(ParseError { line: vln, msg: "missing tail line".into() })?;
    if ttoks.first() != Some(&"tail") {
        return err(tln, "expected `tail ...`");
    }
    let tail = match ttoks.get(1) {
        Some(&"zero") => Tail::Zero,
        Some(&"constant") => {
            Tail::Constant(parse_f64(ttoks.get(2).copied().unwrap_or(""), tln, "tail constant")?)
        }
        Some(&"powerdecay") => {
            let c = parse_f64(ttoks.get(2).copied().unwrap_or(""), tln, "tail scale c")?;
            let q = parse_f64(ttoks.get(3).copied().unwrap_or(""), tln, "tail exponent q")?;
            if q <= 0.0 {
                return err(tln, "powerdecay tail needs q > 0");
            }
            Tail::PowerDecay { c, q }
        }
        other => return err(tln, format!("unknown func tail `{}`", other.unwrap_or(&"?"))),
    };
    Ok((name, Func::new(Window::new(lo, hi), vals?, tail)))
}

fn parse_bijection(lines: &mut Lines) -> Result<(String, Bijection), ParseError> {
    let (ln, toks) = lines.next_tokens().unwrap();
    let name = toks.get(1).map(|s| s.to_string()).unwrap_or_default();
    if name.is_empty() {
        return err(ln, "bijection needs a name");
    }
    let lo = parse_i64(toks.get(2).copied().unwrap_or(""), ln, "window lo")?;
    let hi = parse_i64(toks.get(3).copied().unwrap_or(""), ln, "window hi")?;
    if lo > hi {
        return err(ln, "bijection window is empty");
    }
    let (iln, itoks) = lines
        .next_tokens()
        .ok_or(ParseError { line: ln, msg: "missing images line".into() })?;
    if itoks.first() != Some(&"images") {
        return err(iln, "expected `images ...`");
    }
    let need = (hi - lo + 1) as usize;
    if itoks.len() != need + 1 {
        return err(iln, format!("bijection needs {need} images"));
    }
    let imgs: Result<Vec<i64>, _> = itoks[1..]
        .iter()
        .map(|t| parse_i64(t, iln, "image"))
        .collect();
    let b = Bijection::from_images(Window::new(lo, hi), imgs?)
        .map_err(|e| ParseError { line: iln, msg: e.to_string() })?;
    Ok((name, b))
}

fn fmt_ext(e: ExtReal) -> String {
    match e {
        Bottom => "-inf".to_string(),
        Finite(v) => format!("{v}"),
    }
}

/// Canonical serialization; stable across runs and the identity under
/// parse∘serialize.
pub fn serialize(file: &KernelFile) -> String {
    let mut out = String::from("maxplus v1\n");
    match &file.kernel.body {
        KernelBody::Finite(rows) => {
            out.push_str(&format!("kernel finite {}\n", rows.len()));
            for row in rows {
                out.push_str("row");
                for e in row {
                    out.push(' ');
                    out.push_str(&fmt_ext(*e));
                }
                out.push('\n');
            }
        }
        KernelBody::Banded { core, wrap } => {
            assert!(wrap.is_none(), "wrapped banded kernels are in-memory only");
            let set = match core.set.kind {
                IndexKind::Naturals => "naturals",
                IndexKind::Integers => "integers",
                IndexKind::Finite(_) => unreachable!(),
            };
            out.push_str(&format!(
                "kernel banded {set} period {} width {}\n",
                core.period, core.width
            ));
            out.push_str("diag");
            for e in &core.diag {
                out.push(' ');
                out.push_str(&fmt_ext(*e));
            }
            out.push('\n');
            for (k, t) in &core.bands {
                out.push_str(&format!("band {k}"));
                for e in t {
                    out.push(' ');
                    out.push_str(&fmt_ext(*e));
                }
                out.push('\n');
            }
            match core.tail {
                TailFamily::MinusInf => out.push_str("tail minusinf\n"),
                TailFamily::Linear { a, b } => out.push_str(&format!("tail linear {a} {b}\n")),
                TailFamily::Power { c, q } => out.push_str(&format!("tail power {c} {q}\n")),
                TailFamily::Reciprocal { c, q } => {
                    out.push_str(&format!("tail reciprocal {c} {q}\n"))
                }
            }
        }
    }
    for (name, f) in &file.funcs {
        out.push_str(&format!("func {name} {} {}\n", f.window.lo, f.window.hi));
        out.push_str("values");
        for v in &f.values {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
        match f.tail {
            Tail::Zero => out.push_str("tail zero\n"),
            Tail::Constant(c) => out.push_str(&format!("tail constant {c}\n")),
            Tail::PowerDecay { c, q } => out.push_str(&format!("tail powerdecay {c} {q}\n")),
        }
    }
    for (name, b) in &file.bijections {
        let w = b.support().expect("serializable bijections carry a window");
        out.push_str(&format!("bijection {name} {} {}\n", w.lo, w.hi));
        out.push_str("images");
        for x in w.iter() {
            out.push_str(&format!(" {}", b.eval(x)));
        }
        out.push('\n');
    }
    out
}
