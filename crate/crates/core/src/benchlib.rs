//! The benchmark corpus: 31 convex terms taken from MINLPLib and COCONUT
//! problems, the quadratic-like functions used to study slow convergence,
//! and the small constrained example.
//!
//! Manifests are JSON arrays of
//! `{name, source, term, dimension, expression, bounds, parameters}`;
//! parameters are substituted into the expression when it is parsed.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, BoxError};
use crate::expr::{parse_with_params, Expression, ParseError};
use crate::polytope::Halfspace;

const BUNDLED: [(&str, &str); 4] = [
    ("dim1.json", include_str!("../corpus/dim1.json")),
    ("dim2.json", include_str!("../corpus/dim2.json")),
    ("dim3.json", include_str!("../corpus/dim3.json")),
    ("dim4.json", include_str!("../corpus/dim4.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    MINLPLib,
    GlobalLib,
    CUTE,
    CSTP,
    /// Functions defined here rather than taken from a library.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkEntry {
    pub name: String,
    pub source: Source,
    /// Where the term occurs in the source problem.
    pub term: String,
    pub expression: String,
    pub bounds: BoxDomain,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    name: String,
    source: Source,
    #[serde(default)]
    term: String,
    dimension: usize,
    expression: String,
    bounds: Vec<[f64; 2]>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}: {source}")]
    Json { file: String, source: serde_json::Error },
    #[error("{file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("entry {name}: dimension {dimension} but {bounds} bounds")]
    Dimension { name: String, dimension: usize, bounds: usize },
    #[error("entry {name}: {source}")]
    Bounds { name: String, source: BoxError },
    #[error("entry {name}: {source}")]
    Parse { name: String, source: ParseError },
    #[error("duplicate entry name {0}")]
    Duplicate(String),
}

impl BenchmarkEntry {
    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn function(&self) -> Result<Expression, ParseError> {
        let params: HashMap<String, f64> = self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        parse_with_params(&self.expression, self.dimension(), &params)
    }

    fn from_raw(raw: RawEntry) -> Result<Self, CorpusError> {
        if raw.bounds.len() != raw.dimension {
            return Err(CorpusError::Dimension { name: raw.name, dimension: raw.dimension, bounds: raw.bounds.len() });
        }
        let bounds = match BoxDomain::from_pairs(&raw.bounds) {
            Ok(b) => b,
            Err(source) => return Err(CorpusError::Bounds { name: raw.name, source }),
        };
        let entry = Self {
            name: raw.name,
            source: raw.source,
            term: raw.term,
            expression: raw.expression,
            bounds,
            parameters: raw.parameters,
        };
        if let Err(source) = entry.function() {
            return Err(CorpusError::Parse { name: entry.name, source });
        }
        Ok(entry)
    }

    fn synthetic(name: &str, expression: &str, bounds: &[[f64; 2]]) -> Self {
        Self {
            name: name.into(),
            source: Source::Synthetic,
            term: String::new(),
            expression: expression.into(),
            bounds: BoxDomain::from_pairs(bounds).expect("valid bounds"),
            parameters: BTreeMap::new(),
        }
    }
}

/// Parses one manifest.
pub fn parse_manifest(file: &str, text: &str) -> Result<Vec<BenchmarkEntry>, CorpusError> {
    let raw: Vec<RawEntry> =
        serde_json::from_str(text).map_err(|source| CorpusError::Json { file: file.into(), source })?;
    raw.into_iter().map(BenchmarkEntry::from_raw).collect()
}

fn check_unique(entries: &[BenchmarkEntry]) -> Result<(), CorpusError> {
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if !seen.insert(e.name.as_str()) {
            return Err(CorpusError::Duplicate(e.name.clone()));
        }
    }
    Ok(())
}

/// The bundled corpus, ordered by dimension and then as listed.
pub fn load_corpus() -> Result<Vec<BenchmarkEntry>, CorpusError> {
    let mut all = Vec::new();
    for (file, text) in BUNDLED {
        all.extend(parse_manifest(file, text)?);
    }
    check_unique(&all)?;
    Ok(all)
}

/// Every `*.json` manifest in `dir`, in file-name order.
pub fn load_corpus_from_dir(dir: &Path) -> Result<Vec<BenchmarkEntry>, CorpusError> {
    let io = |source| CorpusError::Io { file: dir.display().to_string(), source };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut all = Vec::new();
    for path in files {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { file: name.clone(), source })?;
        all.extend(parse_manifest(&name, &text)?);
    }
    check_unique(&all)?;
    Ok(all)
}

/// Bundled manifests as `(file name, contents)`.
pub fn bundled_manifests() -> &'static [(&'static str, &'static str)] {
    &BUNDLED
}

/// Looks an entry up by exact name, or by problem name when only one entry
/// comes from that problem.
pub fn find<'a>(entries: &'a [BenchmarkEntry], name: &str) -> Option<&'a BenchmarkEntry> {
    if let Some(e) = entries.iter().find(|e| e.name == name) {
        return Some(e);
    }
    let mut matches = entries.iter().filter(|e| e.name.split('.').next() == Some(name));
    let first = matches.next()?;
    matches.next().is_none().then_some(first)
}

/// Quadratic-like functions on `[-1, 1]²`, all used with `x0 = (0.5, 0.5)`:
/// increasingly non-quadratic separable ones, then quadratics with growing
/// coupling.
pub fn pathological_set() -> Vec<BenchmarkEntry> {
    let sq = [[-1.0, 1.0], [-1.0, 1.0]];
    [
        ("quadratic", "x0^2 + x1^2"),
        ("quartic", "x0^4 + x1^4"),
        ("sextic", "x0^6 + x1^6"),
        ("coupled", "x0^2 + x1^2 + x0*x1"),
        ("rank_one", "x0^2 + x1^2 + 2*x0*x1"),
    ]
    .into_iter()
    .map(|(name, expr)| BenchmarkEntry::synthetic(name, expr, &sq))
    .collect()
}

/// Construction point used with [`pathological_set`].
pub const PATHOLOGICAL_X0: [f64; 2] = [0.5, 0.5];

/// `exp(½x₀² + x₁² + ¼x₀ + ¼x₁ + 1)` on `[0, 1]²` at `x0 = (1, 1)`, with the
/// constraints `x₀ + x₁ >= 1` and `x₀ - x₁ <= 0`.
pub struct ConstrainedExample {
    pub entry: BenchmarkEntry,
    pub x0: Vec<f64>,
    pub constraints: Vec<Halfspace>,
}

pub fn constrained_example() -> ConstrainedExample {
    ConstrainedExample {
        entry: BenchmarkEntry::synthetic(
            "illustrative",
            "exp(0.5*x0^2 + x1^2 + 0.25*x0 + 0.25*x1 + 1)",
            &[[0.0, 1.0], [0.0, 1.0]],
        ),
        x0: vec![1.0, 1.0],
        constraints: vec![
            Halfspace::new(vec![-1.0, -1.0], 1.0).expect("valid"),
            Halfspace::new(vec![1.0, -1.0], 0.0).expect("valid"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::is_psd;

    #[test]
    fn counts_per_dimension() {
        let corpus = load_corpus().unwrap();
        assert_eq!(corpus.len(), 31);
        let count = |d| corpus.iter().filter(|e| e.dimension() == d).count();
        assert_eq!([count(1), count(2), count(3), count(4)], [14, 8, 6, 3]);
    }

    #[test]
    fn harker_tls12_weapon() {
        let corpus = load_corpus().unwrap();
        let harker = find(&corpus, "harker").unwrap();
        assert_eq!(harker.bounds, BoxDomain::from_pairs(&[[0.0, 4.0]]).unwrap());
        let f = harker.function().unwrap();
        assert!((f.eval(&[2.0]).unwrap() - 0.166666666666667 * 8.0).abs() < 1e-14);

        let tls = find(&corpus, "tls12").unwrap();
        assert_eq!(tls.bounds, BoxDomain::from_pairs(&[[1.0, 100.0], [1.0, 86.0]]).unwrap());
        assert_eq!(tls.function().unwrap().eval(&[4.0, 9.0]).unwrap(), -6.0);

        let weapon = find(&corpus, "weapon").unwrap();
        assert_eq!(weapon.dimension(), 4);
        assert_eq!(weapon.function().unwrap().eval(&[0.0; 4]).unwrap(), 50.0);
        assert_eq!(weapon.parameters["c"], 0.18632957819149348);
    }

    #[test]
    fn lookup_by_problem_requires_uniqueness() {
        let corpus = load_corpus().unwrap();
        assert!(find(&corpus, "gams01").is_none());
        assert_eq!(find(&corpus, "gams01.e24").unwrap().dimension(), 3);
        assert!(find(&corpus, "nosuch").is_none());
    }

    #[test]
    fn corpus_is_convex_at_sample_points() {
        for e in load_corpus().unwrap() {
            let f = e.function().unwrap();
            for x in crate::metrics::latin_hypercube_seeded(100, &e.bounds, 11) {
                let h = f.hessian(&x).unwrap();
                assert!(is_psd(&h), "{} at {:?}: {:?}", e.name, x, h);
            }
        }
    }

    #[test]
    fn pathological_hessians_are_constant_for_quadratics() {
        let set = pathological_set();
        assert_eq!(set.len(), 5);
        for e in [&set[0], &set[3], &set[4]] {
            let f = e.function().unwrap();
            assert_eq!(f.hessian(&[0.1, -0.7]).unwrap(), f.hessian(&[0.9, 0.3]).unwrap());
        }
        assert_eq!(set[4].function().unwrap().hessian(&[0.0, 0.0]).unwrap(), vec![vec![2.0, 2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn manifest_errors_name_the_entry() {
        let bad = r#"[{"name": "oops", "source": "CUTE", "dimension": 1, "expression": "x0 +", "bounds": [[0, 1]]}]"#;
        let err = parse_manifest("t.json", bad).unwrap_err();
        assert!(err.to_string().contains("oops"), "{err}");
        let bad = r#"[{"name": "dims", "source": "CUTE", "dimension": 2, "expression": "x0", "bounds": [[0, 1]]}]"#;
        assert!(matches!(parse_manifest("t.json", bad), Err(CorpusError::Dimension { .. })));
    }
}
