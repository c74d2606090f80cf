//! Latin hypercube sampling and the hypervolume tightness metric
//! `∫(q - ℓ) / ∫(f - ℓ)`, where `ℓ` is `q` with `alpha = 0`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::BoxDomain;
use crate::expr::EvalError;
use crate::function::SmoothFunction;
use crate::quad::QuadraticUnderestimator;

/// Deterministic generator for `(seed, stream)`; distinct streams are
/// independent, so work can be split per function or construction point.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `n` points, one per stratum along every axis, uniformly jittered inside
/// each cell and mapped into the box.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, bounds: &BoxDomain, rng: &mut R) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut unit = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        for (point, &s) in unit.iter_mut().zip(&strata) {
            point[j] = (s as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    unit.iter().map(|u| bounds.from_unit(u)).collect()
}

/// [`latin_hypercube`] from a fresh generator for `seed`.
pub fn latin_hypercube_seeded(n: usize, bounds: &BoxDomain, seed: u64) -> Vec<Vec<f64>> {
    latin_hypercube(n, bounds, &mut rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub metric: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub numerator: f64,
    pub denominator: f64,
    /// `f` is (numerically) linear on the box; the metric is reported as 1.
    pub flat: bool,
}

/// Monte-Carlo tightness over `100·d` Latin hypercube samples of the box.
pub fn tightness<F: SmoothFunction + ?Sized>(
    f: &F,
    q: &QuadraticUnderestimator,
    bounds: &BoxDomain,
    seed: u64,
) -> Result<TightnessReport, EvalError> {
    let samples = latin_hypercube_seeded(100 * bounds.dim(), bounds, seed);
    let mut report = tightness_on(f, q, &samples)?;
    report.seed = seed;
    Ok(report)
}

/// Tightness over the given sample points.
pub fn tightness_on<F: SmoothFunction + ?Sized>(
    f: &F,
    q: &QuadraticUnderestimator,
    samples: &[Vec<f64>],
) -> Result<TightnessReport, EvalError> {
    let (mut numerator, mut denominator) = (0.0, 0.0);
    for x in samples {
        let l = q.linear(x);
        numerator += q.eval(x) - l;
        denominator += f.value(x)? - l;
    }
    let flat = denominator < 1e-12;
    let metric = if flat { 1.0 } else { numerator / denominator };
    Ok(TightnessReport { metric, n_samples: samples.len(), seed: 0, numerator, denominator, flat })
}
