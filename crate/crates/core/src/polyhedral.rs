//! External linear constraints: intersect the box with them in `x`-space,
//! then lift the resulting polytope into `(x, t)` space.
//!
//! The cutting-plane loop only ever sees vertices of the constrained region,
//! so the quadratic is free to overestimate `f` where the constraints are
//! violated.

use crate::domain::BoxDomain;
use crate::function::SmoothFunction;
use crate::minimize::{minimize, MinimizeError, Region};
use crate::polytope::{CutOutcome, Halfspace, Polytope, PolytopeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegionError {
    #[error("constraint {index} has {got} coefficients, box has dimension {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
    #[error("constraints leave no feasible point in the box (constraint {index} empties it)")]
    Infeasible { index: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("minimizing f over the region failed: {0}")]
    Minimize(#[from] MinimizeError),
    #[error("f cannot be evaluated at region vertex {0:?}")]
    VertexEval(Vec<f64>),
}

/// Box intersected with the non-redundant external constraints.
#[derive(Debug, Clone)]
pub struct ConstrainedRegion {
    bounds: BoxDomain,
    constraints: Vec<Halfspace>,
    discarded: Vec<usize>,
    polytope: Polytope,
}

/// Cuts the box polytope with each constraint in order. Constraints no
/// vertex of the current polytope violates are discarded.
pub fn intersect_box(bounds: &BoxDomain, constraints: &[Halfspace]) -> Result<ConstrainedRegion, RegionError> {
    let mut polytope = Polytope::from_box(bounds);
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for (index, h) in constraints.iter().enumerate() {
        if h.dim() != bounds.dim() {
            return Err(RegionError::Dimension { index, expected: bounds.dim(), got: h.dim() });
        }
        if polytope.vertices_violating(h).is_empty() {
            discarded.push(index);
            continue;
        }
        match polytope.cut(h)? {
            CutOutcome::Applied(report) if report.halfspace.is_some() => kept.push(h.clone()),
            CutOutcome::Applied(_) => discarded.push(index),
            CutOutcome::Emptied => return Err(RegionError::Infeasible { index }),
        }
    }
    Ok(ConstrainedRegion { bounds: bounds.clone(), constraints: kept, discarded, polytope })
}

/// Result of lifting a region over `f`.
#[derive(Debug, Clone)]
pub struct Lifted<T> {
    pub polytope: Polytope<T>,
    pub t_lower: f64,
    pub t_upper: f64,
}

impl ConstrainedRegion {
    pub fn bounds(&self) -> &BoxDomain {
        &self.bounds
    }

    /// Constraints that actually cut the box, in input order.
    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }

    /// Input indices of redundant constraints.
    pub fn discarded(&self) -> &[usize] {
        &self.discarded
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.polytope.vertices().map(|(_, v)| v.coords.clone()).collect()
    }

    /// Mean of the vertices, an interior point of the region.
    pub fn center(&self) -> Vec<f64> {
        let verts = self.vertices();
        let n = self.bounds.dim();
        let mut c = vec![0.0; n];
        for v in &verts {
            for i in 0..n {
                c[i] += v[i] / verts.len() as f64;
            }
        }
        c
    }

    /// `x` is in the box and satisfies every retained constraint within `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.bounds.contains(x) && self.constraints.iter().all(|h| h.eval(x) <= tol * (1.0 + h.norm()))
    }

    /// `t` bounds over the region: the lower from convex minimization with
    /// the constraints included, the upper from the largest vertex value.
    pub fn t_bounds<F: SmoothFunction + ?Sized>(&self, f: &F, tol: f64) -> Result<(f64, f64), RegionError> {
        let verts = self.vertices();
        let mut t_upper = f64::NEG_INFINITY;
        for v in &verts {
            let fv = f.value(v).map_err(|_| RegionError::VertexEval(v.clone()))?;
            t_upper = t_upper.max(fv);
        }
        let mut starts = vec![self.center()];
        starts.extend(verts.iter().cloned());
        let region = Region { bounds: &self.bounds, constraints: &self.constraints };
        let m = minimize(f, region, &starts, &verts, tol)?;
        let mut t_lower = m.lower_bound.min(t_upper);
        if t_upper - t_lower <= 1e-12 * (1.0 + t_upper.abs()) {
            t_lower = t_upper - 1e-9 * (1.0 + t_upper.abs());
        }
        Ok((t_lower, t_upper))
    }

    /// Prism of the region over `[t_lower, t_upper]`.
    pub fn lift<T: Clone + Default, F: SmoothFunction + ?Sized>(&self, f: &F, tol: f64) -> Result<Lifted<T>, RegionError> {
        let (t_lower, t_upper) = self.t_bounds(f, tol)?;
        Ok(Lifted { polytope: self.polytope.lift(t_lower, t_upper), t_lower, t_upper })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn unit_square() -> BoxDomain {
        BoxDomain::from_pairs(&[[0.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn close(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.iter().zip(q).all(|(x, y)| (x - y).abs() < 1e-6))
    }

    // x0 + x1 >= 1  <=>  -x0 - x1 + 1 <= 0
    fn sum_at_least_one() -> Halfspace {
        Halfspace::new(vec![-1.0, -1.0], 1.0).unwrap()
    }

    fn diagonal() -> Halfspace {
        Halfspace::new(vec![1.0, -1.0], 0.0).unwrap()
    }

    #[test]
    fn one_constraint_gives_triangle() {
        let r = intersect_box(&unit_square(), &[sum_at_least_one()]).unwrap();
        let want = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        assert!(close(&sorted(r.vertices()), &want), "{:?}", r.vertices());
    }

    #[test]
    fn two_constraints_give_the_illustrative_triangle() {
        let r = intersect_box(&unit_square(), &[sum_at_least_one(), diagonal()]).unwrap();
        let want = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 1.0]];
        assert!(close(&sorted(r.vertices()), &want), "{:?}", r.vertices());
        assert!(r.discarded().is_empty());
        r.polytope().check_invariants(1e-8).unwrap();
    }

    #[test]
    fn redundant_constraint_is_discarded() {
        let r = intersect_box(&unit_square(), &[Halfspace::new(vec![1.0, 0.0], -2.0).unwrap()]).unwrap();
        assert_eq!(r.vertices().len(), 4);
        assert_eq!(r.discarded(), &[0]);
        assert!(r.constraints().is_empty());
    }

    #[test]
    fn infeasible_constraints_are_reported() {
        let err = intersect_box(&unit_square(), &[Halfspace::new(vec![1.0, 1.0], 3.0).unwrap()]).unwrap_err();
        assert_eq!(err, RegionError::Infeasible { index: 0 });
        let err = intersect_box(&unit_square(), &[Halfspace::new(vec![1.0], 0.0).unwrap()]).unwrap_err();
        assert!(matches!(err, RegionError::Dimension { .. }));
    }

    #[test]
    fn lift_of_square() {
        let f = parse("x0^2 + x1^2", 2).unwrap();
        let r = intersect_box(&unit_square(), &[]).unwrap();
        let lifted: Lifted<()> = r.lift(&f, 1e-10).unwrap();
        assert!(lifted.t_lower <= 0.0 && lifted.t_lower > -1e-8);
        assert_eq!(lifted.t_upper, 2.0);
        assert_eq!(lifted.polytope.len(), 8);
        lifted.polytope.check_invariants(1e-12).unwrap();
    }

    #[test]
    fn lift_of_illustrative_triangle() {
        let f = parse("exp(0.5*x0^2 + x1^2 + 0.25*x0 + 0.25*x1 + 1)", 2).unwrap();
        let r = intersect_box(&unit_square(), &[sum_at_least_one(), diagonal()]).unwrap();
        let lifted: Lifted<()> = r.lift(&f, 1e-10).unwrap();
        // KKT at (0.5, 0.5): ∇(exponent) = (0.75, 1.25) = 1·(1, 1) + 0.25·(-1, 1),
        // both multipliers nonnegative, so the constrained minimum is there.
        let want = 1.625f64.exp();
        assert!(lifted.t_lower <= want + 1e-9 && lifted.t_lower > want * (1.0 - 1e-5), "{}", lifted.t_lower);
        // the diagonal passes through the (1, 1) corner; its offset gets perturbed
        assert!((lifted.t_upper - 3.0f64.exp()).abs() < 1e-7 * 3.0f64.exp(), "{}", lifted.t_upper);
        assert_eq!(lifted.polytope.len(), 6);
    }
}
