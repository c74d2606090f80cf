#![allow(dead_code)]

//! Independent oracles and invariant checks shared by the integration tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use quadest::benchlib::{constrained_example, BenchmarkEntry};
use quadest::cutplane::{run, run_traced, Config, ProblemInstance, RunResult, Status, TraceEvent};
use quadest::metrics::latin_hypercube_seeded;
use quadest::polytope::{Halfspace, Polytope};
use quadest::{BoxDomain, Expression, QuadraticUnderestimator};

pub const EPS: f64 = 1e-3;

/// Every vertex of `{v : a·v + b <= 0 for all h}`, by solving each
/// `d`-subset of halfspaces as equalities.
pub fn brute_force_vertices(halfspaces: &[Halfspace], d: usize) -> Vec<Vec<f64>> {
    let m = halfspaces.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        let a = DMatrix::from_fn(d, d, |i, j| halfspaces[subset[i]].normal()[j]);
        let b = DVector::from_fn(d, |i, _| -halfspaces[subset[i]].offset());
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            let feasible = x.iter().all(|v| v.is_finite())
                && halfspaces.iter().all(|h| h.eval(&x) <= 1e-9 * (1.0 + h.norm()));
            if feasible && !out.iter().any(|y| close(y, &x, 1e-7)) {
                out.push(x);
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < m - d + i {
                subset[i] += 1;
                for j in i + 1..d {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Compares a polytope with the brute-force oracle and checks degrees.
pub fn check_against_oracle(p: &Polytope, tol: f64) -> Result<(), String> {
    let d = p.dim();
    let oracle = brute_force_vertices(p.halfspaces(), d);
    if oracle.len() != p.len() {
        return Err(format!("{} vertices, oracle has {}", p.len(), oracle.len()));
    }
    for (id, v) in p.vertices() {
        if !oracle.iter().any(|o| close(o, &v.coords, tol)) {
            return Err(format!("vertex {id} {:?} not in oracle set", v.coords));
        }
        if v.neighbors.len() != d {
            return Err(format!("vertex {id} has degree {}", v.neighbors.len()));
        }
    }
    p.check_invariants(1e-8)
}

/// A random cut through an interior point of the polytope, with normal
/// drawn uniformly from the sphere.
pub fn random_cut(p: &Polytope, rng: &mut ChaCha8Rng) -> Halfspace {
    let d = p.dim();
    let verts: Vec<Vec<f64>> = p.vertices().map(|(_, v)| v.coords.clone()).collect();
    let mut weights: Vec<f64> = verts.iter().map(|_| rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let point: Vec<f64> = (0..d).map(|j| verts.iter().zip(&weights).map(|(v, w)| v[j] * w).sum()).collect();
    let normal: Vec<f64> = loop {
        let n: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            break n.iter().map(|v| v / norm).collect();
        }
    };
    let offset = -normal.iter().zip(&point).map(|(a, b)| a * b).sum::<f64>();
    Halfspace::new(normal, offset).unwrap()
}

/// Runs `sequences` random cut sequences and checks each final polytope
/// (and every intermediate one) against the oracle.
pub fn polytope_oracle_suite(sequences: usize, seed: u64) -> Result<(), String> {
    (0..sequences).into_par_iter().try_for_each(|k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let d = 2 + k % 4;
        let pairs: Vec<[f64; 2]> = (0..d)
            .map(|_| {
                let lo = rng.gen::<f64>() * 4.0 - 2.0;
                [lo, lo + 0.5 + rng.gen::<f64>() * 3.0]
            })
            .collect();
        let mut p: Polytope = Polytope::from_box(&BoxDomain::from_pairs(&pairs).unwrap());
        let cuts = rng.gen_range(3..=10);
        for c in 0..cuts {
            let h = random_cut(&p, &mut rng);
            p.cut(&h).map_err(|e| format!("sequence {k} cut {c}: {e}"))?;
            check_against_oracle(&p, 1e-6).map_err(|e| format!("sequence {k} (d = {d}) cut {c}: {e}"))?;
        }
        Ok(())
    })
}

/// Central-difference gradient and Hessian (the latter from the exact
/// gradient), with relative steps.
pub fn finite_differences(f: &Expression, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let step = 1e-6 * x[i].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        g[i] = (f.eval(&xp).unwrap() - f.eval(&xm).unwrap()) / (2.0 * step);
        let gp = f.grad(&xp).unwrap();
        let gm = f.grad(&xm).unwrap();
        for j in 0..n {
            h[j][i] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    (g, h)
}

/// Largest AD/FD discrepancy over `n_points` interior Latin hypercube
/// points, relative to the max-norm of the derivative at the point, floored
/// at 1e-3 of the derivative's largest max-norm over the sample.
pub fn derivative_discrepancy(entry: &BenchmarkEntry, n_points: usize, seed: u64) -> (f64, f64) {
    let f = entry.function().unwrap();
    // shrink the box a little so central differences stay inside it
    let inner: Vec<[f64; 2]> = entry
        .bounds
        .lower()
        .iter()
        .zip(entry.bounds.upper())
        .map(|(l, u)| [l + 1e-3 * (u - l), u - 1e-3 * (u - l)])
        .collect();
    let inner = BoxDomain::from_pairs(&inner).unwrap();
    let max_norm = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |m, x| m.max(x.abs()));
    let samples: Vec<_> = latin_hypercube_seeded(n_points, &inner, seed)
        .into_iter()
        .map(|x| {
            let d = f.eval_hessian(&x).unwrap();
            let fd = finite_differences(&f, &x);
            (x, d, fd)
        })
        .collect();
    let g_floor = 1e-3 * samples.iter().map(|(_, d, _)| max_norm(&mut d.gradient.iter().copied())).fold(0.0, f64::max);
    let h_floor =
        1e-3 * samples.iter().map(|(_, d, _)| max_norm(&mut d.hessian.iter().flatten().copied())).fold(0.0, f64::max);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for (x, d, (g, h)) in &samples {
        let gscale = max_norm(&mut d.gradient.iter().copied()).max(g_floor).max(f64::MIN_POSITIVE);
        let hscale = max_norm(&mut d.hessian.iter().flatten().copied()).max(h_floor).max(f64::MIN_POSITIVE);
        for i in 0..x.len() {
            worst_g = worst_g.max((g[i] - d.gradient[i]).abs() / gscale);
            for j in 0..x.len() {
                worst_h = worst_h.max((h[i][j] - d.hessian[i][j]).abs() / hscale);
            }
        }
    }
    (worst_g, worst_h)
}

/// Smallest `2(f - ℓ)/curvature` over a grid, capped at 1, and the grid
/// point attaining it; points where the curvature term vanishes are skipped.
pub fn grid_alpha(f: &Expression, bounds: &BoxDomain, x0: &[f64], per_axis: usize) -> (f64, Option<Vec<f64>>) {
    let q = QuadraticUnderestimator::build(f, x0).unwrap();
    let d = bounds.dim();
    let total = per_axis.pow(d as u32);
    let point = |k: usize| -> Vec<f64> {
        let mut rest = k;
        (0..d)
            .map(|j| {
                let i = rest % per_axis;
                rest /= per_axis;
                let (lo, hi) = (bounds.lower()[j], bounds.upper()[j]);
                lo + (hi - lo) * i as f64 / (per_axis - 1) as f64
            })
            .collect()
    };
    let (ratio, k) = (0..total)
        .into_par_iter()
        .map(|k| {
            let x = point(k);
            let r = match q.alpha_candidate(f, &x).unwrap() {
                Some(_) => 2.0 * (f.eval(&x).unwrap() - q.linear(&x)) / q.curvature(&x),
                None => f64::INFINITY,
            };
            (r, k)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    if ratio < 1.0 {
        (ratio, Some(point(k)))
    } else {
        (1.0, None)
    }
}

/// Largest `q - f` in scaled units over `n` samples of the feasible region.
pub fn max_overestimate(inst: &ProblemInstance, r: &RunResult, n: usize, seed: u64) -> f64 {
    let samples = latin_hypercube_seeded(n, &inst.bounds, seed);
    samples
        .par_iter()
        .filter(|x| inst.constraints.iter().all(|h| h.eval(x) <= 0.0))
        .map(|x| (r.quadratic.eval(x) - inst.f.eval(x).unwrap()) * inst.scaling)
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Trace invariants: lower bound non-decreasing, alpha non-increasing and
/// in `[0, 1]`.
pub fn check_trace(events: &[TraceEvent]) -> Result<(), String> {
    for w in events.windows(2) {
        if w[1].lb < w[0].lb - 1e-12 * (1.0 + w[0].lb.abs()) {
            return Err(format!("lower bound dropped at iteration {}: {} -> {}", w[1].iteration, w[0].lb, w[1].lb));
        }
        if w[1].alpha > w[0].alpha {
            return Err(format!("alpha increased at iteration {}", w[1].iteration));
        }
    }
    if events.iter().any(|e| !(0.0..=1.0).contains(&e.alpha)) {
        return Err("alpha left [0, 1]".into());
    }
    Ok(())
}

/// Coincidence at `x0` and at the last decrement point, and that any
/// larger `alpha` overestimates some decrement point.
pub fn check_properties(inst: &ProblemInstance, r: &RunResult) -> Result<(), String> {
    let s = inst.scaling;
    let f0 = inst.f.eval(&inst.x0).unwrap();
    if (r.quadratic.eval(&inst.x0) - f0).abs() * s > 1e-6 {
        return Err("q does not coincide with f at x0".into());
    }
    let Some(last) = r.decrement_points.last() else { return Ok(()) };
    let fl = inst.f.eval(last).unwrap();
    if (r.quadratic.eval(last) - fl).abs() * s > 1e-6 {
        return Err(format!("q does not coincide with f at the last decrement point {last:?}"));
    }
    let bumped = r.quadratic.with_alpha(r.alpha + 1e-6);
    if !r.decrement_points.iter().any(|x| bumped.eval(x) > inst.f.eval(x).unwrap()) {
        return Err("alpha + 1e-6 still underestimates every decrement point".into());
    }
    Ok(())
}

/// Runs with a trace and checks every run-level invariant.
pub fn checked_run(inst: &ProblemInstance, cfg: &Config) -> Result<RunResult, String> {
    let mut events = Vec::new();
    let r = run_traced(inst, cfg, |e| events.push(e.clone())).map_err(|e| e.to_string())?;
    check_trace(&events)?;
    if r.status == Status::Converged && r.lower_bound <= -cfg.epsilon {
        return Err(format!("converged with lower bound {}", r.lower_bound));
    }
    check_properties(inst, &r)?;
    Ok(r)
}

/// The constrained example with the first `k` constraints, scaled.
pub fn constrained_instance(k: usize) -> ProblemInstance {
    let ex = constrained_example();
    ProblemInstance::new(ex.entry.function().unwrap(), ex.entry.bounds.clone(), ex.x0.clone())
        .with_constraints(ex.constraints[..k].to_vec())
        .auto_scaled(&Config::default())
        .unwrap()
}

/// Alphas for 0, 1 and 2 constraints; also checks that every decrement
/// point is feasible.
pub fn constrained_alphas() -> Result<[f64; 3], String> {
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let inst = constrained_instance(k);
        let r = run(&inst, &Config::default()).map_err(|e| e.to_string())?;
        for x in &r.decrement_points {
            if inst.constraints.iter().any(|h| h.eval(x) > 1e-8) {
                return Err(format!("decrement point {x:?} violates a constraint"));
            }
        }
        *slot = r.alpha;
    }
    Ok(out)
}
