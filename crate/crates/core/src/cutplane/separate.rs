use crate::function::SmoothFunction;
use crate::expr::EvalError;
use crate::polytope::{Halfspace, PolytopeError};

/// Epigraph boundary point between an interior point and an outside vertex,
/// and the supporting halfspace of the epigraph there.
#[derive(Debug, Clone)]
pub struct Separation {
    pub lambda: f64,
    /// `(w_x, w_t)` on the segment from the interior point to the vertex.
    pub point: Vec<f64>,
    /// `∇f(w_x)·x - t + f(w_x) - ∇f(w_x)·w_x <= 0`.
    pub cut: Halfspace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeparateError {
    #[error("interior point is not strictly inside the epigraph (g(0) = {0:e})")]
    NotInterior(f64),
    #[error("vertex is not outside the epigraph (g(1) = {0:e})")]
    NotBracketing(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

fn along(p: &[f64], u: &[f64], lambda: f64) -> Vec<f64> {
    p.iter().zip(u).map(|(a, b)| lambda * b + (1.0 - lambda) * a).collect()
}

/// Bisection on `g(λ) = f(λ x_u + (1-λ) x_p) - (λ t_u + (1-λ) t_p)` until
/// `|g| <= tol`. Both points are `(x, t)` with `t` last.
pub fn separate<F: SmoothFunction + ?Sized>(
    f: &F,
    interior: &[f64],
    vertex: &[f64],
    tol: f64,
) -> Result<Separation, SeparateError> {
    let n = interior.len() - 1;
    let g = |lambda: f64| -> Result<(f64, Vec<f64>), EvalError> {
        let w = along(interior, vertex, lambda);
        Ok((f.value(&w[..n])? - w[n], w))
    };
    let (g0, _) = g(0.0)?;
    if g0 >= 0.0 {
        return Err(SeparateError::NotInterior(g0));
    }
    let (g1, _) = g(1.0)?;
    if g1 <= 0.0 {
        return Err(SeparateError::NotBracketing(g1));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut lambda, mut w) = (1.0, vertex.to_vec());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (gm, wm) = g(mid)?;
        lambda = mid;
        w = wm;
        if gm.abs() <= tol || hi - lo <= f64::EPSILON {
            break;
        }
        if gm > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (fw, grad) = f.value_grad(&w[..n])?;
    let offset = fw - grad.iter().zip(&w[..n]).map(|(a, b)| a * b).sum::<f64>();
    let mut normal = grad;
    normal.push(-1.0);
    Ok(Separation { lambda, point: w, cut: Halfspace::new(normal, offset)? })
}
