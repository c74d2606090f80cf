//! Parsing of command-line values, constraint files and function lookup.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use quadest::benchlib::{
    constrained_example, find, load_corpus, load_corpus_from_dir, pathological_set, BenchmarkEntry,
    PATHOLOGICAL_X0,
};
use quadest::{parse, BoxDomain, Expression, Halfspace};

pub const CORPUS_DIR_VAR: &str = "QUADEST_CORPUS_DIR";

/// `lo,hi;lo,hi;...`
pub fn parse_bounds(s: &str) -> Result<BoxDomain> {
    let pairs = s
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v = parse_point(p)?;
            match v[..] {
                [lo, hi] => Ok([lo, hi]),
                _ => bail!("bound {p:?} should be lo,hi"),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if pairs.is_empty() {
        bail!("empty bounds");
    }
    Ok(BoxDomain::from_pairs(&pairs)?)
}

/// `v,v,...`
pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?}")))
        .collect()
}

/// One constraint per line. `a0 ... a(d-1) b` means `a·x + b <= 0`;
/// `a0 ... a(d-1) <= c` and `a0 ... a(d-1) >= c` are also accepted.
/// Blank lines and `#` comments are skipped.
pub fn parse_constraints(text: &str, dim: usize) -> Result<Vec<Halfspace>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("constraint line {}", n + 1);
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let nums = |t: &[&str]| -> Result<Vec<f64>> {
            t.iter().map(|v| v.parse::<f64>().with_context(|| format!("{}: bad number {v:?}", at()))).collect()
        };
        let (normal, offset) = match tokens.iter().position(|t| *t == "<=" || *t == ">=") {
            Some(k) => {
                if k + 2 != tokens.len() {
                    bail!("{}: expected a single right-hand side after {}", at(), tokens[k]);
                }
                let a = nums(&tokens[..k])?;
                let c: f64 = nums(&tokens[k + 1..])?[0];
                if tokens[k] == "<=" {
                    (a, -c)
                } else {
                    (a.iter().map(|v| -v).collect(), c)
                }
            }
            None => {
                let mut a = nums(&tokens)?;
                let b = a.pop().ok_or_else(|| anyhow!("{}: empty", at()))?;
                (a, b)
            }
        };
        if normal.len() != dim {
            bail!("{}: {} coefficients for a {dim}-dimensional function", at(), normal.len());
        }
        out.push(Halfspace::new(normal, offset).with_context(at)?);
    }
    Ok(out)
}

pub fn read_constraints(path: &Path, dim: usize) -> Result<Vec<Halfspace>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_constraints(&text, dim).with_context(|| path.display().to_string())
}

/// The corpus from `QUADEST_CORPUS_DIR` when set, otherwise the bundled one.
pub fn corpus() -> Result<Vec<BenchmarkEntry>> {
    match std::env::var_os(CORPUS_DIR_VAR) {
        Some(dir) => load_corpus_from_dir(Path::new(&dir)).with_context(|| format!("loading corpus from {dir:?}")),
        None => Ok(load_corpus()?),
    }
}

/// A function with its box and the construction point used when none is
/// given.
pub struct Target {
    pub expression: String,
    pub f: Expression,
    pub bounds: BoxDomain,
    pub default_x0: Vec<f64>,
}

/// Looks `name` up in the corpus, then among the quadratic-like test
/// functions and the constrained example (`illustrative`).
pub fn named(name: &str) -> Result<Target> {
    let from = |e: &BenchmarkEntry, x0: Vec<f64>| -> Result<Target> {
        Ok(Target { expression: e.expression.clone(), f: e.function()?, bounds: e.bounds.clone(), default_x0: x0 })
    };
    let corpus = corpus()?;
    if let Some(e) = find(&corpus, name) {
        return from(e, e.bounds.center());
    }
    if let Some(e) = pathological_set().iter().find(|e| e.name == name) {
        return from(e, PATHOLOGICAL_X0.to_vec());
    }
    let ex = constrained_example();
    if ex.entry.name == name {
        return from(&ex.entry, ex.x0);
    }
    bail!("no function named {name:?}")
}

pub fn inline(expr: &str, bounds: BoxDomain) -> Result<Target> {
    let f = parse(expr, bounds.dim()).with_context(|| format!("parsing {expr:?}"))?;
    Ok(Target { expression: expr.into(), f, default_x0: bounds.center(), bounds })
}
