//! Benchmark driver: five Latin hypercube construction points per corpus
//! function, scaled runs, tightness over `100·d` samples, and per-dimension
//! summaries.

use rayon::prelude::*;
use serde::Serialize;

use crate::benchlib::BenchmarkEntry;
use crate::cutplane::{run, Config, ProblemInstance, Status};
use crate::metrics::{latin_hypercube, rng, tightness_on};

pub const POINTS_PER_FUNCTION: usize = 5;

/// One underestimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailRow {
    pub name: String,
    pub dimension: usize,
    pub point: usize,
    pub x0: Vec<f64>,
    pub alpha: f64,
    pub metric: f64,
    pub cpu_ms: f64,
    pub vertices: usize,
    pub iterations: usize,
    pub status: Status,
    pub scale_factor: f64,
}

/// Per-dimension summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dimension: usize,
    pub n_functions: usize,
    pub n_underestimators: usize,
    pub avg_metric: f64,
    pub min_metric: f64,
    pub max_metric: f64,
    pub avg_cpu_ms: f64,
    pub min_cpu_ms: f64,
    pub max_cpu_ms: f64,
    pub avg_vertices: f64,
    pub min_vertices: usize,
    pub max_vertices: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryFailure {
    pub name: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub details: Vec<DetailRow>,
    pub summary: Vec<BenchRow>,
    pub failures: Vec<EntryFailure>,
}

/// Construction points for entry number `index` under `seed`.
pub fn construction_points(entry: &BenchmarkEntry, index: usize, seed: u64) -> Vec<Vec<f64>> {
    latin_hypercube(POINTS_PER_FUNCTION, &entry.bounds, &mut rng(seed, 2 * index as u64))
}

/// All underestimators of one entry.
pub fn run_entry(entry: &BenchmarkEntry, index: usize, cfg: &Config) -> Result<Vec<DetailRow>, EntryFailure> {
    let fail = |message: String| EntryFailure { name: entry.name.clone(), message };
    let f = entry.function().map_err(|e| fail(e.to_string()))?;
    let proto = ProblemInstance::new(f, entry.bounds.clone(), entry.bounds.center())
        .auto_scaled(cfg)
        .map_err(|e| fail(e.to_string()))?;
    let mut sample_rng = rng(cfg.seed, 2 * index as u64 + 1);
    let mut rows = Vec::with_capacity(POINTS_PER_FUNCTION);
    for (point, x0) in construction_points(entry, index, cfg.seed).into_iter().enumerate() {
        let inst = ProblemInstance { x0: x0.clone(), ..proto.clone() };
        let r = run(&inst, cfg).map_err(|e| fail(format!("construction point {point}: {e}")))?;
        let samples = latin_hypercube(100 * entry.dimension(), &entry.bounds, &mut sample_rng);
        let metric = tightness_on(&inst.f, &r.quadratic, &samples).map_err(|e| fail(e.to_string()))?.metric;
        rows.push(DetailRow {
            name: entry.name.clone(),
            dimension: entry.dimension(),
            point,
            x0,
            alpha: r.alpha,
            metric,
            cpu_ms: r.wall_time.as_secs_f64() * 1e3,
            vertices: r.vertices_enumerated,
            iterations: r.iterations,
            status: r.status,
            scale_factor: r.scale_factor,
        });
    }
    Ok(rows)
}

/// Runs every entry in parallel; output order follows `entries`.
pub fn run_corpus(entries: &[BenchmarkEntry], cfg: &Config) -> BenchReport {
    let results: Vec<_> = entries.par_iter().enumerate().map(|(i, e)| run_entry(e, i, cfg)).collect();
    let mut report = BenchReport::default();
    for r in results {
        match r {
            Ok(rows) => report.details.extend(rows),
            Err(f) => report.failures.push(f),
        }
    }
    report.summary = summarize(&report.details);
    report
}

pub fn summarize(details: &[DetailRow]) -> Vec<BenchRow> {
    let mut dims: Vec<usize> = details.iter().map(|d| d.dimension).collect();
    dims.sort();
    dims.dedup();
    dims.into_iter()
        .map(|dimension| {
            let rows: Vec<&DetailRow> = details.iter().filter(|d| d.dimension == dimension).collect();
            let mut names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
            names.dedup();
            let n = rows.len() as f64;
            let stat = |g: &dyn Fn(&DetailRow) -> f64| {
                let vals = rows.iter().map(|r| g(r));
                let avg = vals.clone().sum::<f64>() / n;
                (avg, vals.clone().fold(f64::INFINITY, f64::min), vals.fold(f64::NEG_INFINITY, f64::max))
            };
            let (avg_metric, min_metric, max_metric) = stat(&|r| r.metric);
            let (avg_cpu_ms, min_cpu_ms, max_cpu_ms) = stat(&|r| r.cpu_ms);
            let (avg_vertices, min_v, max_v) = stat(&|r| r.vertices as f64);
            BenchRow {
                dimension,
                n_functions: names.len(),
                n_underestimators: rows.len(),
                avg_metric,
                min_metric,
                max_metric,
                avg_cpu_ms,
                min_cpu_ms,
                max_cpu_ms,
                avg_vertices,
                min_vertices: min_v as usize,
                max_vertices: max_v as usize,
            }
        })
        .collect()
}
