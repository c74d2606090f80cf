//! Projected-gradient minimization of a smooth convex function over a box,
//! optionally intersected with halfspaces.
//!
//! Projection onto the intersection uses Dykstra's alternating projections.
//! The returned lower bound is certified: for convex `f` and any point `y`,
//! `f(x) >= f(y) + ∇f(y)·(x - y)` everywhere, and the minimum of that
//! linear function over a polytope is attained at one of its vertices.

use crate::domain::BoxDomain;
use crate::expr::EvalError;
use crate::function::SmoothFunction;
use crate::polytope::{dot, Halfspace};

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified lower bound on `f` over the region, `<= value`.
    pub lower_bound: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MinimizeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no start point could be evaluated")]
    NoStart,
}

/// Feasible set `box ∩ {x : a·x + b <= 0}`.
#[derive(Debug, Clone, Copy)]
pub struct Region<'a> {
    pub bounds: &'a BoxDomain,
    pub constraints: &'a [Halfspace],
}

impl Region<'_> {
    /// Euclidean projection onto the region (Dykstra's method).
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        self.bounds.project(&mut x);
        if self.constraints.is_empty() {
            return x;
        }
        let n = y.len();
        let sets = self.constraints.len() + 1;
        let mut increments = vec![vec![0.0; n]; sets];
        let mut x = y.to_vec();
        let scale = 1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for _ in 0..10_000 {
            let before = x.clone();
            for (k, inc) in increments.iter_mut().enumerate() {
                let z: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
                let mut p = z.clone();
                if k == 0 {
                    self.bounds.project(&mut p);
                } else {
                    let h = &self.constraints[k - 1];
                    let s = h.eval(&z);
                    if s > 0.0 {
                        let nn = dot(h.normal(), h.normal());
                        for (pi, ai) in p.iter_mut().zip(h.normal()) {
                            *pi -= s / nn * ai;
                        }
                    }
                }
                for i in 0..n {
                    inc[i] = z[i] - p[i];
                }
                x = p;
            }
            let moved = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved <= 1e-15 * scale {
                break;
            }
        }
        self.bounds.project(&mut x);
        x
    }
}

/// Multi-start projected gradient descent with Armijo backtracking.
///
/// `vertices` are the extreme points of the region, used for the
/// certified lower bound.
pub fn minimize<F: SmoothFunction + ?Sized>(
    f: &F,
    region: Region<'_>,
    starts: &[Vec<f64>],
    vertices: &[Vec<f64>],
    tol: f64,
) -> Result<Minimum, MinimizeError> {
    let diameter = region
        .bounds
        .lower()
        .iter()
        .zip(region.bounds.upper())
        .map(|(l, u)| (u - l) * (u - l))
        .sum::<f64>()
        .sqrt();
    let mut best: Option<Minimum> = None;
    for start in starts {
        let Ok(m) = descend(f, region, start, diameter, tol) else { continue };
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.ok_or(MinimizeError::NoStart)?;
    let (_, g) = f.value_grad(&best.x)?;
    let slope = vertices
        .iter()
        .map(|v| g.iter().zip(v.iter().zip(&best.x)).map(|(gi, (vi, xi))| gi * (vi - xi)).sum::<f64>())
        .fold(0.0, f64::min);
    best.lower_bound = best.value + slope;
    Ok(best)
}

fn descend<F: SmoothFunction + ?Sized>(
    f: &F,
    region: Region<'_>,
    start: &[f64],
    diameter: f64,
    tol: f64,
) -> Result<Minimum, EvalError> {
    let mut x = region.project(start);
    let (mut fx, mut g) = f.value_grad(&x)?;
    let mut step = f64::NAN;
    let mut iterations = 0;
    for _ in 0..5_000 {
        iterations += 1;
        let gnorm = dot(&g, &g).sqrt();
        if gnorm == 0.0 {
            break;
        }
        if !step.is_finite() {
            step = diameter / gnorm;
        }
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let y = region.project(&trial);
            let dir: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
            if let Ok(fy) = f.value(&y) {
                if fy <= fx + 1e-4 * dir {
                    accepted = Some((y, fy));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let moved = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let improvement = fx - fy;
        x = y;
        fx = fy;
        g = f.value_grad(&x)?.1;
        step *= 2.0;
        if moved <= tol * (1.0 + diameter) || improvement <= tol * 1e-4 * (1.0 + fx.abs()) {
            break;
        }
    }
    Ok(Minimum { x, value: fx, lower_bound: fx, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn unit_square() -> BoxDomain {
        BoxDomain::from_pairs(&[[0.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn projection_onto_box_and_halfspace() {
        let b = unit_square();
        let cons = [Halfspace::new(vec![-1.0, -1.0], 1.0).unwrap()];
        let r = Region { bounds: &b, constraints: &cons };
        let p = r.project(&[0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9, "{p:?}");
        let p = r.project(&[2.0, -1.0]);
        assert!((p[0] - 1.0).abs() < 1e-9 && p[1].abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn interior_minimum() {
        let f = parse("(x0 - 0.3)^2 + 2*(x1 - 0.6)^2 + 1", 2).unwrap();
        let b = unit_square();
        let r = Region { bounds: &b, constraints: &[] };
        let m = minimize(&f, r, &[b.center()], &b.vertices(), 1e-10).unwrap();
        assert!((m.x[0] - 0.3).abs() < 1e-5 && (m.x[1] - 0.6).abs() < 1e-5);
        assert!(m.lower_bound <= 1.0 && m.lower_bound > 1.0 - 1e-6);
    }

    #[test]
    fn boundary_minimum_with_constraints() {
        // exp(...) on the triangle {(0,1), (1,1), (0.5,0.5)}: minimized at (0.5,0.5)
        let f = parse("exp(0.5*x0^2 + x1^2 + 0.25*x0 + 0.25*x1 + 1)", 2).unwrap();
        let b = unit_square();
        let cons = [
            Halfspace::new(vec![-1.0, -1.0], 1.0).unwrap(),
            Halfspace::new(vec![1.0, -1.0], 0.0).unwrap(),
        ];
        let verts = vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.5]];
        let r = Region { bounds: &b, constraints: &cons };
        let m = minimize(&f, r, &[vec![0.5, 0.8], verts[0].clone(), verts[1].clone()], &verts, 1e-10).unwrap();
        let want = 1.625f64.exp();
        assert!((m.value - want).abs() < 1e-6 * want, "{m:?}");
        assert!(m.lower_bound <= want + 1e-12 && m.lower_bound > want - 1e-4 * want);
    }

    #[test]
    fn lower_bound_is_certified_even_from_a_poor_point() {
        let f = parse("x0^2", 1).unwrap();
        let b = BoxDomain::from_pairs(&[[-1.0, 2.0]]).unwrap();
        let r = Region { bounds: &b, constraints: &[] };
        let m = minimize(&f, r, &[vec![2.0]], &b.vertices(), 1e-12).unwrap();
        assert!(m.lower_bound <= 0.0 && m.value >= 0.0);
    }
}
