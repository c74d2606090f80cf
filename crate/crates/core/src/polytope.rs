//! Online vertex enumeration for a bounded simple polytope under successive
//! halfspace cuts.
//!
//! Every vertex records the indices of the `d` halfspaces that are tight at
//! it. In a simple polytope two vertices share an edge exactly when their
//! active sets have `d - 1` indices in common, so adjacency never needs a
//! geometric test. A cut removes the violating vertices and creates one new
//! vertex on each edge joining a removed vertex to a kept one. Cuts that
//! pass through an existing vertex would break simplicity; their offset is
//! nudged until no vertex lies on the cutting hyperplane.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;

pub type VertexId = usize;

/// `normal · v + offset <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    normal: Vec<f64>,
    offset: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolytopeError {
    #[error("halfspace normal is zero or not finite")]
    InvalidHalfspace,
    #[error("halfspace has dimension {got}, polytope has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("could not perturb the cut offset away from a degenerate vertex")]
    PerturbationFailed,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self, PolytopeError> {
        let ok = offset.is_finite()
            && normal.iter().all(|v| v.is_finite())
            && normal.iter().any(|v| *v != 0.0);
        if !ok {
            return Err(PolytopeError::InvalidHalfspace);
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `normal · v + offset`; positive values violate the halfspace.
    pub fn eval(&self, v: &[f64]) -> f64 {
        dot(&self.normal, v) + self.offset
    }

    pub fn norm(&self) -> f64 {
        dot(&self.normal, &self.normal).sqrt()
    }

    /// Appends `extra` zero coefficients, e.g. to lift an `x`-space
    /// constraint into `(x, t)` space.
    pub fn extended(&self, extra: usize) -> Self {
        let mut normal = self.normal.clone();
        normal.resize(normal.len() + extra, 0.0);
        Self { normal, offset: self.offset }
    }

    fn degeneracy_tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.norm())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct Vertex<T> {
    pub coords: Vec<f64>,
    /// Sorted indices of the halfspaces tight at this vertex.
    pub active: Vec<usize>,
    pub neighbors: Vec<VertexId>,
    pub payload: T,
}

/// Result of [`Polytope::cut`].
#[derive(Debug, Clone, Default)]
pub struct CutReport {
    /// Vertices strictly outside the cut, with their coordinates.
    pub removed: Vec<(VertexId, Vec<f64>)>,
    /// Vertices created on the cutting hyperplane.
    pub created: Vec<VertexId>,
    /// Index of the stored halfspace, `None` when the cut was redundant.
    pub halfspace: Option<usize>,
    /// Amount added to the offset to restore simplicity (0 when none).
    pub perturbation: f64,
}

#[derive(Debug, Clone)]
pub enum CutOutcome {
    Applied(CutReport),
    /// The cut would remove every vertex; the polytope is left untouched.
    Emptied,
}

#[derive(Debug, Clone)]
pub struct Polytope<T = ()> {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: BTreeMap<VertexId, Vertex<T>>,
    next_id: VertexId,
}

impl<T: Clone + Default> Polytope<T> {
    /// The box as `2d` bound halfspaces (index `2i` is the lower bound of
    /// coordinate `i`, `2i + 1` the upper) and its `2^d` corners.
    pub fn from_box(bounds: &BoxDomain) -> Self {
        let d = bounds.dim();
        let mut halfspaces = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut lo = vec![0.0; d];
            lo[i] = -1.0;
            halfspaces.push(Halfspace { normal: lo, offset: bounds.lower()[i] });
            let mut hi = vec![0.0; d];
            hi[i] = 1.0;
            halfspaces.push(Halfspace { normal: hi, offset: -bounds.upper()[i] });
        }
        let mut vertices = BTreeMap::new();
        for (mask, coords) in bounds.vertices().into_iter().enumerate() {
            let active = (0..d).map(|i| 2 * i + (mask >> i & 1)).collect();
            let neighbors = (0..d).map(|i| mask ^ (1 << i)).collect();
            vertices.insert(mask, Vertex { coords, active, neighbors, payload: T::default() });
        }
        let next_id = vertices.len();
        Self { dim: d, halfspaces, vertices, next_id }
    }

    /// Prism `self × [t_lower, t_upper]` in one more dimension. Existing
    /// halfspaces keep their indices; the two bounds on the new coordinate
    /// are appended (lower, then upper). Payloads start from default.
    pub fn lift<U: Clone + Default>(&self, t_lower: f64, t_upper: f64) -> Polytope<U> {
        let d = self.dim;
        let m = self.halfspaces.len();
        let mut halfspaces: Vec<Halfspace> = self.halfspaces.iter().map(|h| h.extended(1)).collect();
        let mut lo = vec![0.0; d + 1];
        lo[d] = -1.0;
        halfspaces.push(Halfspace { normal: lo, offset: t_lower });
        let mut hi = vec![0.0; d + 1];
        hi[d] = 1.0;
        halfspaces.push(Halfspace { normal: hi, offset: -t_upper });

        let index: HashMap<VertexId, usize> = self.vertices.keys().enumerate().map(|(k, id)| (*id, k)).collect();
        let bottom = |id: VertexId| 2 * index[&id];
        let top = |id: VertexId| 2 * index[&id] + 1;
        let mut vertices = BTreeMap::new();
        for (id, v) in &self.vertices {
            for (level, t, bound) in [(0, t_lower, m), (1, t_upper, m + 1)] {
                let mut coords = v.coords.clone();
                coords.push(t);
                let mut active = v.active.clone();
                active.push(bound);
                let mut neighbors: Vec<VertexId> =
                    v.neighbors.iter().map(|n| if level == 0 { bottom(*n) } else { top(*n) }).collect();
                neighbors.push(if level == 0 { top(*id) } else { bottom(*id) });
                let new_id = if level == 0 { bottom(*id) } else { top(*id) };
                vertices.insert(new_id, Vertex { coords, active, neighbors, payload: U::default() });
            }
        }
        let next_id = vertices.len();
        Polytope { dim: d + 1, halfspaces, vertices, next_id }
    }
}

impl<T: Default> Polytope<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex<T>> {
        self.vertices.get(&id)
    }

    pub fn vertex_mut(&mut self, id: VertexId) -> Option<&mut Vertex<T>> {
        self.vertices.get_mut(&id)
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &Vertex<T>)> {
        self.vertices.iter().map(|(id, v)| (*id, v))
    }

    /// Total number of vertices ever held, including removed ones.
    pub fn ids_issued(&self) -> usize {
        self.next_id
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.values().map(|v| v.neighbors.len()).sum::<usize>() / 2
    }

    /// Vertices with `normal · v + offset > 0`. Empty means `h` is redundant.
    pub fn vertices_violating(&self, h: &Halfspace) -> Vec<VertexId> {
        self.vertices.iter().filter(|(_, v)| h.eval(&v.coords) > 0.0).map(|(id, _)| *id).collect()
    }

    /// Intersects the polytope with `h`.
    pub fn cut(&mut self, h: &Halfspace) -> Result<CutOutcome, PolytopeError> {
        if h.dim() != self.dim {
            return Err(PolytopeError::Dimension { expected: self.dim, got: h.dim() });
        }
        let (offset, perturbation) = self.nondegenerate_offset(h)?;
        let h = Halfspace { normal: h.normal.clone(), offset };
        let slack: HashMap<VertexId, f64> = self.vertices.iter().map(|(id, v)| (*id, h.eval(&v.coords))).collect();
        let removed_ids: Vec<VertexId> = self.vertices.keys().copied().filter(|id| slack[id] > 0.0).collect();
        if removed_ids.is_empty() {
            return Ok(CutOutcome::Applied(CutReport { perturbation, ..CutReport::default() }));
        }
        if removed_ids.len() == self.vertices.len() {
            return Ok(CutOutcome::Emptied);
        }

        let index = self.halfspaces.len();
        self.halfspaces.push(h);
        let mut created = Vec::new();
        for &out_id in &removed_ids {
            let out = &self.vertices[&out_id];
            let s_out = slack[&out_id];
            let kept: Vec<VertexId> = out.neighbors.iter().copied().filter(|n| slack[n] <= 0.0).collect();
            for in_id in kept {
                let s_in = slack[&in_id];
                let out = &self.vertices[&out_id];
                let inner = &self.vertices[&in_id];
                let lambda = s_out / (s_out - s_in);
                let coords: Vec<f64> =
                    out.coords.iter().zip(&inner.coords).map(|(u, w)| u + lambda * (w - u)).collect();
                let mut active: Vec<usize> =
                    out.active.iter().copied().filter(|a| inner.active.binary_search(a).is_ok()).collect();
                active.push(index);
                let id = self.next_id;
                self.next_id += 1;
                self.vertices.insert(id, Vertex { coords, active, neighbors: vec![in_id], payload: T::default() });
                let inner = self.vertices.get_mut(&in_id).expect("kept vertex");
                for n in inner.neighbors.iter_mut() {
                    if *n == out_id {
                        *n = id;
                    }
                }
                created.push(id);
            }
        }

        // New edges lie in the cutting facet: two created vertices are
        // adjacent when their old active sets share d - 2 indices.
        let mut by_ridge: BTreeMap<Vec<usize>, Vec<VertexId>> = BTreeMap::new();
        for &id in &created {
            let old: Vec<usize> = self.vertices[&id].active.iter().copied().filter(|a| *a != index).collect();
            for skip in 0..old.len() {
                let key: Vec<usize> =
                    old.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, a)| *a).collect();
                by_ridge.entry(key).or_default().push(id);
            }
        }
        for group in by_ridge.values() {
            for (i, &a) in group.iter().enumerate() {
                for &b in &group[i + 1..] {
                    self.vertices.get_mut(&a).unwrap().neighbors.push(b);
                    self.vertices.get_mut(&b).unwrap().neighbors.push(a);
                }
            }
        }

        let removed = removed_ids
            .into_iter()
            .map(|id| (id, self.vertices.remove(&id).expect("removed vertex").coords))
            .collect();
        Ok(CutOutcome::Applied(CutReport { removed, created, halfspace: Some(index), perturbation }))
    }

    /// Returns an offset for `h` such that no vertex lies within the
    /// degeneracy tolerance of the hyperplane, and the shift applied.
    ///
    /// Both directions are tried with geometrically growing shifts; the one
    /// that leaves fewer vertices wins, ties going to the loosening shift.
    fn nondegenerate_offset(&self, h: &Halfspace) -> Result<(f64, f64), PolytopeError> {
        let tol = h.degeneracy_tolerance();
        let slack = |offset: f64| -> Vec<(VertexId, f64)> {
            self.vertices.iter().map(|(id, v)| (*id, dot(&h.normal, &v.coords) + offset)).collect()
        };
        if slack(h.offset).iter().all(|(_, s)| s.abs() > tol) {
            return Ok((h.offset, 0.0));
        }
        let delta0 = 1e-9 * (1.0 + h.offset.abs());
        let mut best: Option<(usize, f64)> = None;
        for sign in [-1.0, 1.0] {
            let mut delta = delta0;
            for _ in 0..40 {
                let shift = sign * delta;
                let s = slack(h.offset + shift);
                if s.iter().all(|(_, v)| v.abs() > tol) {
                    let outside: HashMap<VertexId, bool> = s.iter().map(|(id, v)| (*id, *v > 0.0)).collect();
                    let crossings = self
                        .vertices
                        .iter()
                        .filter(|(id, _)| outside[id])
                        .map(|(_, v)| v.neighbors.iter().filter(|n| !outside[n]).count())
                        .sum::<usize>();
                    let kept = outside.values().filter(|o| !**o).count();
                    let resulting = kept + crossings;
                    if best.is_none_or(|(c, _)| resulting < c) {
                        best = Some((resulting, shift));
                    }
                    break;
                }
                delta *= 10.0;
            }
        }
        best.map(|(_, shift)| (h.offset + shift, shift)).ok_or(PolytopeError::PerturbationFailed)
    }

    /// One line per vertex: coordinates, then `|`, then active indices.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in self.vertices.values() {
            let coords: Vec<String> = v.coords.iter().map(|c| format!("{c:.12}")).collect();
            let active: Vec<String> = v.active.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "{} | {}", coords.join(" "), active.join(" "));
        }
        out
    }

    /// Checks the structural invariants: `d` active halfspaces per vertex,
    /// tightness and feasibility within `tol`, adjacency consistent with the
    /// shared-active-set rule, and degree `d`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        let d = self.dim;
        for (id, v) in &self.vertices {
            if v.active.len() != d {
                return Err(format!("vertex {id} has {} active halfspaces", v.active.len()));
            }
            for &a in &v.active {
                let h = &self.halfspaces[a];
                let r = h.eval(&v.coords).abs() / (1.0 + h.norm());
                if r > tol {
                    return Err(format!("vertex {id} not tight on halfspace {a} (residual {r:e})"));
                }
            }
            for (k, h) in self.halfspaces.iter().enumerate() {
                let s = h.eval(&v.coords) / (1.0 + h.norm());
                if s > tol {
                    return Err(format!("vertex {id} violates halfspace {k} by {s:e}"));
                }
            }
            if v.neighbors.len() != d {
                return Err(format!("vertex {id} has degree {}", v.neighbors.len()));
            }
            for n in &v.neighbors {
                let w = self.vertices.get(n).ok_or_else(|| format!("vertex {id} links to missing {n}"))?;
                if !w.neighbors.contains(id) {
                    return Err(format!("edge {id}-{n} is not symmetric"));
                }
                let shared = v.active.iter().filter(|a| w.active.contains(a)).count();
                if shared + 1 != d {
                    return Err(format!("edge {id}-{n} shares {shared} halfspaces"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> Polytope {
        Polytope::from_box(&BoxDomain::new(vec![0.0; d], vec![1.0; d]).unwrap())
    }

    fn coords(p: &Polytope) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = p.vertices().map(|(_, v)| v.coords.clone()).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    fn applied(o: CutOutcome) -> CutReport {
        match o {
            CutOutcome::Applied(r) => r,
            CutOutcome::Emptied => panic!("unexpected empty polytope"),
        }
    }

    #[test]
    fn boxes_have_hypercube_structure() {
        let sq = unit(2);
        assert_eq!((sq.len(), sq.edge_count()), (4, 4));
        let cube = unit(3);
        assert_eq!((cube.len(), cube.edge_count()), (8, 12));
        cube.check_invariants(1e-12).unwrap();
        let lifted = Polytope::<()>::from_box(&BoxDomain::from_pairs(&[[-1.0, 1.0], [-1.0, 1.0]]).unwrap()).lift::<()>(0.0, 2.0);
        assert_eq!((lifted.len(), lifted.edge_count()), (8, 12));
        lifted.check_invariants(1e-12).unwrap();
    }

    #[test]
    fn corner_cut_of_square() {
        let mut sq = unit(2);
        let r = applied(sq.cut(&Halfspace::new(vec![1.0, 1.0], -1.5).unwrap()).unwrap());
        assert_eq!(r.removed.len(), 1);
        assert_eq!(r.removed[0].1, vec![1.0, 1.0]);
        let mut made: Vec<Vec<f64>> = r.created.iter().map(|id| sq.vertex(*id).unwrap().coords.clone()).collect();
        made.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(made, vec![vec![0.5, 1.0], vec![1.0, 0.5]]);
        assert_eq!(sq.len(), 5);
        sq.check_invariants(1e-12).unwrap();
    }

    #[test]
    fn redundant_cut_changes_nothing() {
        let mut sq = unit(2);
        let h = Halfspace::new(vec![1.0, 0.0], -2.0).unwrap();
        assert!(sq.vertices_violating(&h).is_empty());
        let r = applied(sq.cut(&h).unwrap());
        assert!(r.removed.is_empty() && r.created.is_empty() && r.halfspace.is_none());
        assert_eq!(sq.len(), 4);
        assert_eq!(sq.halfspaces().len(), 4);
    }

    #[test]
    fn violating_vertices_follow_sign_test() {
        let sq = unit(2);
        let all = Halfspace::new(vec![1.0, 0.0], 5.0).unwrap();
        assert_eq!(sq.vertices_violating(&all).len(), 4);
        let mixed = Halfspace::new(vec![1.0, -1.0], -0.5).unwrap();
        let ids = sq.vertices_violating(&mixed);
        assert_eq!(ids.len(), 1);
        assert_eq!(sq.vertex(ids[0]).unwrap().coords, vec![1.0, 0.0]);
    }

    #[test]
    fn emptying_cut_is_reported_and_leaves_polytope() {
        let mut sq = unit(2);
        let out = sq.cut(&Halfspace::new(vec![1.0, 1.0], 5.0).unwrap()).unwrap();
        assert!(matches!(out, CutOutcome::Emptied));
        assert_eq!(sq.len(), 4);
    }

    #[test]
    fn cube_corner_cut() {
        let mut cube = unit(3);
        let r = applied(cube.cut(&Halfspace::new(vec![1.0, 1.0, 1.0], -2.5).unwrap()).unwrap());
        assert_eq!(r.removed.len(), 1);
        assert_eq!(r.created.len(), 3);
        cube.check_invariants(1e-12).unwrap();
        assert_eq!(cube.len(), 10);
    }

    #[test]
    fn degenerate_cut_through_vertex_is_perturbed() {
        let mut sq = unit(2);
        sq.cut(&Halfspace::new(vec![-1.0, -1.0], 1.0).unwrap()).unwrap();
        // triangle (1,0) (0,1) (1,1); the diagonal x0 = x1 passes through (1,1)
        let r = applied(sq.cut(&Halfspace::new(vec![1.0, -1.0], 0.0).unwrap()).unwrap());
        assert!(r.perturbation != 0.0);
        sq.check_invariants(1e-8).unwrap();
        let got = coords(&sq);
        let want = [vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 1.0]];
        assert_eq!(got.len(), 3);
        for (g, w) in got.iter().zip(&want) {
            assert!(g.iter().zip(w).all(|(a, b)| (a - b).abs() < 1e-6), "{got:?}");
        }
    }

    #[test]
    fn interval_cuts() {
        let mut seg = unit(1);
        let r = applied(seg.cut(&Halfspace::new(vec![1.0], -0.25).unwrap()).unwrap());
        assert_eq!(r.created.len(), 1);
        assert_eq!(coords(&seg), vec![vec![0.0], vec![0.25]]);
        seg.check_invariants(1e-12).unwrap();
    }

    #[test]
    fn dump_lists_one_vertex_per_line() {
        let sq = unit(2);
        let text = sq.dump();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().ends_with("| 0 2"));
    }
}
