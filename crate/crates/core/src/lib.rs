//! Tight convex quadratic underestimators of twice-differentiable convex
//! functions.
//!
//! Given `f`, a box and a construction point `x0`, the underestimator is the
//! second-order Taylor expansion with its curvature term scaled by `alpha`:
//!
//! ```text
//! q(x) = f(x0) + ∇f(x0)·(x - x0) + ½·alpha·(x - x0)ᵀ ∇²f(x0) (x - x0)
//! ```
//!
//! [`cutplane::run`] finds the largest `alpha` in `[0, 1]` for which `q`
//! stays below `f` (up to a tolerance) by outer-approximating the epigraph
//! of `f` with a polytope and refining it with supporting cuts.

pub mod benchlib;
pub mod cutplane;
pub mod domain;
pub mod expr;
pub mod function;
pub mod harness;
pub mod metrics;
pub mod minimize;
pub mod polyhedral;
pub mod polytope;
pub mod quad;

pub use domain::{BoxDomain, BoxError};
pub use expr::{parse, parse_with_params, EvalError, Expression, ParseError};
pub use function::{Scaled, SmoothFunction};
pub use polyhedral::{intersect_box, ConstrainedRegion, RegionError};
pub use polytope::{Halfspace, Polytope};
pub use quad::{QuadError, QuadraticUnderestimator, UnderestimatorRecord};
