//! The cutting-plane search for the tightest `alpha`.
//!
//! The epigraph of `f` over the (constrained) box is outer-approximated by
//! a polytope in `(x, t)` space. Each iteration looks at the vertex that
//! minimizes `t - q(x)`; if the quadratic sits more than `epsilon` above
//! it, the vertex is cut off with a supporting halfspace of the epigraph,
//! and any newly created vertex where `q` overestimates `f` lowers `alpha`
//! until `q` touches `f` there.

mod separate;

pub use separate::{separate, SeparateError, Separation};

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::domain::BoxDomain;
use crate::expr::{EvalError, Expression};
use crate::function::{Scaled, SmoothFunction};
use crate::minimize::{minimize, MinimizeError, Region};
use crate::polyhedral::{intersect_box, RegionError};
use crate::polytope::{CutOutcome, Halfspace, Polytope, PolytopeError, VertexId};
use crate::quad::{QuadError, QuadraticUnderestimator, UnderestimatorRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Convergence tolerance on `t - q`, in scaled units.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    pub bisection_tol: f64,
    /// Tolerance of the minimization that gives the lower `t` bound.
    pub tmin_tol: f64,
    /// Seed for sampling done around a run (construction points, metrics).
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self { epsilon: 1e-3, max_iterations: 100_000, time_limit: None, bisection_tol: 1e-10, tmin_tol: 1e-8, seed: 0 }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), CutplaneError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.epsilon) || !positive(self.bisection_tol) || !positive(self.tmin_tol) {
            return Err(CutplaneError::InvalidConfig("tolerances must be finite and positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CutplaneError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CutplaneError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: function has {expected} variables, {what} has {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("construction point {0:?} lies outside the box")]
    OutsideBox(Vec<f64>),
    #[error("construction point violates constraint {0}")]
    Infeasible(usize),
    #[error("scaling factor must be finite and positive, got {0}")]
    BadScaling(f64),
    #[error("function is identically zero on the box; it cannot be scaled")]
    ZeroFunction,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Separate(#[from] SeparateError),
    #[error("a separating cut removed every vertex of the outer approximation")]
    Emptied,
}

/// One underestimation problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub f: Expression,
    pub bounds: BoxDomain,
    pub x0: Vec<f64>,
    /// Linear constraints over `x`, `a·x + b <= 0`.
    pub constraints: Vec<Halfspace>,
    /// Factor applied to `f` before the search.
    pub scaling: f64,
}

impl ProblemInstance {
    pub fn new(f: Expression, bounds: BoxDomain, x0: Vec<f64>) -> Self {
        Self { f, bounds, x0, constraints: Vec::new(), scaling: 1.0 }
    }

    pub fn with_constraints(mut self, constraints: Vec<Halfspace>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_scaling(mut self, factor: f64) -> Self {
        self.scaling = factor;
        self
    }

    /// Sets the scaling factor to `1 / max(|min f|, |max f|)` over the box.
    pub fn auto_scaled(mut self, cfg: &Config) -> Result<Self, CutplaneError> {
        self.scaling = scale(&self.f, &self.bounds, cfg.tmin_tol)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CutplaneError> {
        let n = self.f.n_vars();
        if self.bounds.dim() != n {
            return Err(CutplaneError::Dimension { what: "box", expected: n, got: self.bounds.dim() });
        }
        if self.x0.len() != n {
            return Err(CutplaneError::Dimension { what: "construction point", expected: n, got: self.x0.len() });
        }
        if !self.bounds.contains(&self.x0) {
            return Err(CutplaneError::OutsideBox(self.x0.clone()));
        }
        for (i, h) in self.constraints.iter().enumerate() {
            if h.dim() != n {
                return Err(CutplaneError::Dimension { what: "constraint", expected: n, got: h.dim() });
            }
            if h.eval(&self.x0) > 1e-9 * (1.0 + h.norm()) {
                return Err(CutplaneError::Infeasible(i));
            }
        }
        if !(self.scaling.is_finite() && self.scaling > 0.0) {
            return Err(CutplaneError::BadScaling(self.scaling));
        }
        Ok(())
    }
}

/// `1 / max(|min f|, |max f|)` over the box. The minimum comes from convex
/// minimization, the maximum from the box corners.
pub fn scale<F: SmoothFunction + ?Sized>(f: &F, bounds: &BoxDomain, tol: f64) -> Result<f64, CutplaneError> {
    let corners = bounds.vertices();
    let mut max = f64::NEG_INFINITY;
    for v in &corners {
        max = max.max(f.value(v)?);
    }
    let mut starts = vec![bounds.center()];
    starts.extend(corners.iter().cloned());
    let region = Region { bounds, constraints: &[] };
    let min = minimize(f, region, &starts, &corners, tol)?.value;
    let m = min.abs().max(max.abs());
    if m == 0.0 || !m.is_finite() {
        return Err(CutplaneError::ZeroFunction);
    }
    Ok(1.0 / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Cut,
    Decrement,
    Converge,
}

/// One line of the optional trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub iteration: usize,
    pub lb: f64,
    pub alpha: f64,
    pub active: usize,
    pub vertices: usize,
    pub event: EventKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub alpha: f64,
    /// `min (t - q)` over the final outer approximation, in scaled units.
    pub lower_bound: f64,
    pub iterations: usize,
    pub vertices_created: usize,
    /// Initial vertices plus all created ones.
    pub vertices_enumerated: usize,
    pub decrement_points: Vec<Vec<f64>>,
    pub status: Status,
    /// 0 when converged, otherwise the (scaled) lower bound; `q + offset`
    /// then underestimates the scaled `f`.
    pub offset: f64,
    #[serde(rename = "wall_time_ms", serialize_with = "millis")]
    pub wall_time: Duration,
    pub scale_factor: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    /// In the units of the unscaled function.
    pub underestimator: UnderestimatorRecord,
    #[serde(skip)]
    pub quadratic: QuadraticUnderestimator,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

/// Cached `f` at the vertex's `x` part (scaled).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VertexData {
    pub fx: f64,
}

/// What one call to [`State::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Converged,
    Cut { decremented: bool },
    Decremented,
    /// The argmin vertex sat on the epigraph without a usable candidate and
    /// was dropped from the active set.
    Dropped,
}

/// Working state of the search.
#[derive(Debug, Clone)]
pub struct State<'a> {
    f: Scaled<'a, Expression>,
    polytope: Polytope<VertexData>,
    interior: Vec<f64>,
    q: QuadraticUnderestimator,
    active: BTreeSet<VertexId>,
    t_lower: f64,
    t_upper: f64,
    epsilon: f64,
    bisection_tol: f64,
    iterations: usize,
    initial_vertices: usize,
    created: usize,
    decrement_points: Vec<Vec<f64>>,
}

/// Lifts the (constrained) box over `[t^L, t^U]`, picks the interior point
/// and builds `q` with `alpha = 1`.
pub fn initialize<'a>(inst: &'a ProblemInstance, cfg: &Config) -> Result<State<'a>, CutplaneError> {
    cfg.validate()?;
    inst.validate()?;
    let f = Scaled::new(&inst.f, inst.scaling);
    let region = intersect_box(&inst.bounds, &inst.constraints)?;
    let lifted = region.lift::<VertexData, _>(&f, cfg.tmin_tol)?;
    let mut polytope = lifted.polytope;
    let n = inst.bounds.dim();
    let ids: Vec<VertexId> = polytope.vertices().map(|(id, _)| id).collect();
    for &id in &ids {
        let v = polytope.vertex_mut(id).expect("vertex");
        v.payload.fx = f.value(&v.coords[..n])?;
    }
    let (t_lower, t_upper) = (lifted.t_lower, lifted.t_upper);
    let mut interior = region.center();
    let fp = f.value(&interior)?;
    interior.push((0.5 * (t_lower + t_upper)).max(fp + 1e-6 * (t_upper - t_lower)));
    let q = QuadraticUnderestimator::build(&f, &inst.x0)?;
    Ok(State {
        f,
        interior,
        q,
        active: ids.iter().copied().collect(),
        initial_vertices: ids.len(),
        polytope,
        t_lower,
        t_upper,
        epsilon: cfg.epsilon,
        bisection_tol: cfg.bisection_tol,
        iterations: 0,
        created: 0,
        decrement_points: Vec::new(),
    })
}

impl<'a> State<'a> {
    pub fn polytope(&self) -> &Polytope<VertexData> {
        &self.polytope
    }

    /// `(x_p, t_p)`.
    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    /// The quadratic in scaled units.
    pub fn quadratic(&self) -> &QuadraticUnderestimator {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.q.alpha()
    }

    pub fn active(&self) -> &BTreeSet<VertexId> {
        &self.active
    }

    pub fn t_bounds(&self) -> (f64, f64) {
        (self.t_lower, self.t_upper)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn decrement_points(&self) -> &[Vec<f64>] {
        &self.decrement_points
    }

    fn gap(&self, id: VertexId) -> f64 {
        let v = self.polytope.vertex(id).expect("vertex");
        let n = v.coords.len() - 1;
        v.coords[n] - self.q.eval(&v.coords[..n])
    }

    /// `min (t - q)` over the active set with the lowest-id minimizer.
    pub fn active_minimum(&self) -> Option<(f64, VertexId)> {
        let mut best: Option<(f64, VertexId)> = None;
        for &id in &self.active {
            let g = self.gap(id);
            if best.is_none_or(|(b, _)| g < b) {
                best = Some((g, id));
            }
        }
        best
    }

    /// `min (t - q)` over every vertex of the outer approximation. Since
    /// `t - q` is concave, this bounds `f - q` from below on the region.
    pub fn global_minimum(&self) -> f64 {
        self.polytope.vertices().map(|(id, _)| self.gap(id)).fold(f64::INFINITY, f64::min)
    }

    /// The lower bound reported in traces: over the active set while it is
    /// non-empty, over all vertices after.
    pub fn lower_bound(&self) -> f64 {
        self.active_minimum().map_or_else(|| self.global_minimum(), |(lb, _)| lb)
    }

    /// One iteration of the search.
    pub fn step(&mut self) -> Result<StepOutcome, CutplaneError> {
        let Some((lb, u)) = self.active_minimum() else { return Ok(StepOutcome::Converged) };
        if lb > -self.epsilon {
            return Ok(StepOutcome::Converged);
        }
        self.iterations += 1;
        let vertex = self.polytope.vertex(u).expect("argmin vertex");
        let coords = vertex.coords.clone();
        let fu = vertex.payload.fx;
        let n = coords.len() - 1;
        let tu = coords[n];

        if fu - tu > 1e-9 * (1.0 + tu.abs()) {
            match separate(&self.f, &self.interior, &coords, self.bisection_tol) {
                Ok(sep) => {
                    if let Some(outcome) = self.apply_cut(&sep.cut)? {
                        return Ok(outcome);
                    }
                }
                Err(SeparateError::NotBracketing(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }

        // `u` is (numerically) on or inside the epigraph, so it cannot be
        // cut off; a point of the region where `q` is too high lowers
        // `alpha` directly.
        let decremented = fu - self.q.eval(&coords[..n]) < -self.epsilon
            && self.q.alpha_candidate_from_value(fu, &coords[..n]).is_some_and(|c| c < self.q.alpha());
        if decremented {
            let c = self.q.alpha_candidate_from_value(fu, &coords[..n]).expect("candidate");
            self.q.set_alpha(c);
            self.decrement_points.push(coords[..n].to_vec());
        } else {
            self.active.remove(&u);
        }
        self.refresh_active(&[], &[]);
        Ok(if decremented { StepOutcome::Decremented } else { StepOutcome::Dropped })
    }

    /// Cuts, lowers `alpha` over created vertices and updates the active
    /// set. `None` when the cut turned out redundant.
    fn apply_cut(&mut self, cut: &Halfspace) -> Result<Option<StepOutcome>, CutplaneError> {
        let report = match self.polytope.cut(cut)? {
            CutOutcome::Applied(report) if report.halfspace.is_some() => report,
            CutOutcome::Applied(_) => return Ok(None),
            CutOutcome::Emptied => return Err(CutplaneError::Emptied),
        };
        self.created += report.created.len();
        let n = self.polytope.dim() - 1;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &id in &report.created {
            let v = self.polytope.vertex_mut(id).expect("created vertex");
            let x = v.coords[..n].to_vec();
            let fx = self.f.value(&x)?;
            v.payload.fx = fx;
            if fx - self.q.eval(&x) < -self.epsilon {
                if let Some(c) = self.q.alpha_candidate_from_value(fx, &x) {
                    if best.as_ref().is_none_or(|(b, _)| c < *b) {
                        best = Some((c, x));
                    }
                }
            }
        }
        let decremented = match best {
            Some((c, x)) if c < self.q.alpha() => {
                self.q.set_alpha(c);
                self.decrement_points.push(x);
                true
            }
            _ => false,
        };
        let removed: Vec<VertexId> = report.removed.iter().map(|(id, _)| *id).collect();
        self.refresh_active(&report.created, &removed);
        Ok(Some(StepOutcome::Cut { decremented }))
    }

    fn refresh_active(&mut self, created: &[VertexId], removed: &[VertexId]) {
        for id in removed {
            self.active.remove(id);
        }
        self.active.extend(created.iter().copied());
        let keep: BTreeSet<VertexId> = self.active.iter().copied().filter(|&id| self.gap(id) < -self.epsilon).collect();
        self.active = keep;
    }

    fn event(&self, event: EventKind) -> TraceEvent {
        TraceEvent {
            iteration: self.iterations,
            lb: self.lower_bound(),
            alpha: self.q.alpha(),
            active: self.active.len(),
            vertices: self.polytope.len(),
            event,
        }
    }
}

pub fn run(inst: &ProblemInstance, cfg: &Config) -> Result<RunResult, CutplaneError> {
    run_traced(inst, cfg, |_| {})
}

/// [`run`], reporting every iteration to `trace`.
pub fn run_traced(
    inst: &ProblemInstance,
    cfg: &Config,
    mut trace: impl FnMut(&TraceEvent),
) -> Result<RunResult, CutplaneError> {
    let start = Instant::now();
    let mut state = initialize(inst, cfg)?;
    let status = loop {
        if let Some(limit) = cfg.time_limit {
            if start.elapsed() >= limit {
                break Status::TimeLimit;
            }
        }
        let before = state.iterations;
        if before >= cfg.max_iterations && state.active_minimum().is_some_and(|(lb, _)| lb <= -cfg.epsilon) {
            break Status::IterationLimit;
        }
        match state.step()? {
            StepOutcome::Converged => {
                trace(&state.event(EventKind::Converge));
                break Status::Converged;
            }
            StepOutcome::Cut { decremented: false } => trace(&state.event(EventKind::Cut)),
            StepOutcome::Cut { decremented: true } | StepOutcome::Decremented => {
                trace(&state.event(EventKind::Decrement))
            }
            StepOutcome::Dropped => {}
        }
    };
    let lower_bound = state.global_minimum();
    let offset = if status == Status::Converged { 0.0 } else { lower_bound.min(0.0) };
    let quadratic = QuadraticUnderestimator::build(&inst.f, &inst.x0)?.with_alpha(state.q.alpha());
    let underestimator = quadratic.record(lower_bound / inst.scaling);
    Ok(RunResult {
        alpha: state.q.alpha(),
        lower_bound,
        iterations: state.iterations,
        vertices_created: state.created,
        vertices_enumerated: state.initial_vertices + state.created,
        decrement_points: state.decrement_points,
        status,
        offset,
        wall_time: start.elapsed(),
        scale_factor: inst.scaling,
        t_lower: state.t_lower,
        t_upper: state.t_upper,
        underestimator,
        quadratic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn instance(expr: &str, bounds: &[[f64; 2]], x0: &[f64]) -> ProblemInstance {
        let f = parse(expr, bounds.len()).unwrap();
        ProblemInstance::new(f, BoxDomain::from_pairs(bounds).unwrap(), x0.to_vec())
    }

    #[test]
    fn scale_examples() {
        let b = BoxDomain::from_pairs(&[[-1.0, 1.0]]).unwrap();
        assert!((scale(&parse("x0^2", 1).unwrap(), &b, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        assert!((scale(&parse("2*x0^2", 1).unwrap(), &b, 1e-10).unwrap() - 0.5).abs() < 1e-12);
        let sq = BoxDomain::from_pairs(&[[0.0, 1.0], [0.0, 1.0]]).unwrap();
        let f = parse("exp(0.5*x0^2 + x1^2 + 0.25*x0 + 0.25*x1 + 1)", 2).unwrap();
        assert!((scale(&f, &sq, 1e-10).unwrap() - (-3.0f64).exp()).abs() < 1e-12);
        assert_eq!(scale(&parse("0*x0", 1).unwrap(), &b, 1e-10), Err(CutplaneError::ZeroFunction));
    }

    #[test]
    fn validation() {
        let inst = instance("x0^2", &[[-1.0, 1.0]], &[2.0]);
        assert!(matches!(run(&inst, &Config::default()), Err(CutplaneError::OutsideBox(_))));
        let inst = instance("x0^2", &[[-1.0, 1.0]], &[0.5])
            .with_constraints(vec![Halfspace::new(vec![1.0], 0.0).unwrap()]);
        assert_eq!(run(&inst, &Config::default()).unwrap_err(), CutplaneError::Infeasible(0));
        let cfg = Config { epsilon: 0.0, ..Config::default() };
        assert!(matches!(run(&instance("x0^2", &[[-1.0, 1.0]], &[0.5]), &cfg), Err(CutplaneError::InvalidConfig(_))));
    }

    #[test]
    fn initial_state() {
        let inst = instance("x0^2", &[[-1.0, 1.0]], &[0.3]);
        let s = initialize(&inst, &Config::default()).unwrap();
        assert_eq!(s.polytope().len(), 4);
        let (tl, tu) = s.t_bounds();
        assert!(tl <= 0.0 && tl > -1e-8 && tu == 1.0);
        assert_eq!(s.active().len(), 4);
        assert!(s.interior()[1] > 0.0);
    }

    #[test]
    fn quadratic_is_its_own_underestimator() {
        let r = run(&instance("x0^2", &[[-1.0, 1.0]], &[0.3]), &Config::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.alpha, 1.0);
        assert!(r.lower_bound > -1e-3);
    }

    #[test]
    fn exp_matches_ratio_minimum() {
        // The ratio is monotone in x on [-1, 1] for x0 = 1, minimized at -1.
        let r = run(&instance("exp(x0)", &[[-1.0, 1.0]], &[1.0]), &Config::default()).unwrap();
        let want = (1.0 + (-2.0f64).exp()) / 2.0;
        assert_eq!(r.status, Status::Converged);
        assert!((r.alpha - want).abs() < 1e-3 + 1e-6, "{} vs {}", r.alpha, want);
        assert!(!r.decrement_points.is_empty());
    }

    #[test]
    fn trace_is_monotone() {
        let inst = instance("x0^4 + x1^4", &[[-1.0, 1.0], [-1.0, 1.0]], &[0.5, 0.5]);
        let mut events = Vec::new();
        let r = run_traced(&inst, &Config::default(), |e| events.push(e.clone())).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(events.last().unwrap().event, EventKind::Converge);
        for w in events.windows(2) {
            assert!(w[1].lb >= w[0].lb - 1e-12, "{:?}", w);
            assert!(w[1].alpha <= w[0].alpha);
        }
    }

    #[test]
    fn iteration_limit_gives_offset() {
        let inst = instance("x0^4 + x1^4", &[[-1.0, 1.0], [-1.0, 1.0]], &[0.5, 0.5]);
        let cfg = Config { max_iterations: 2, ..Config::default() };
        let r = run(&inst, &cfg).unwrap();
        assert_eq!(r.status, Status::IterationLimit);
        assert_eq!(r.iterations, 2);
        assert!(r.offset < 0.0 && r.offset == r.lower_bound);
    }

    #[test]
    fn result_serializes() {
        let r = run(&instance("exp(x0)", &[[-1.0, 1.0]], &[1.0]), &Config::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "converged");
        assert!(v["wall_time_ms"].is_f64());
        assert!(v.get("quadratic").is_none());
    }
}
