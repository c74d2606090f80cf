//! The scaled second-order Taylor underestimator
//! `q(x) = f(x0) + ∇f(x0)·(x - x0) + ½·alpha·(x - x0)ᵀ ∇²f(x0) (x - x0)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::expr::EvalError;
use crate::function::SmoothFunction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("Hessian at the construction point is not positive semidefinite (min eigenvalue {0:e})")]
    NotConvex(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticUnderestimator {
    x0: Vec<f64>,
    f0: f64,
    g0: Vec<f64>,
    h0: Vec<Vec<f64>>,
    h0_norm: f64,
    alpha: f64,
}

/// Smallest eigenvalue of a symmetric matrix given as rows.
pub fn min_eigenvalue(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[i][j] + h[j][i]));
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn frobenius(h: &[Vec<f64>]) -> f64 {
    h.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// PSD up to `-1e-9` relative to the matrix magnitude (absolute for
/// matrices with entries of order one or smaller).
pub fn is_psd(h: &[Vec<f64>]) -> bool {
    min_eigenvalue(h) >= -1e-9 * frobenius(h).max(1.0)
}

impl QuadraticUnderestimator {
    /// Caches `f(x0)`, `∇f(x0)` and `∇²f(x0)`; `alpha` starts at 1.
    pub fn build<F: SmoothFunction + ?Sized>(f: &F, x0: &[f64]) -> Result<Self, QuadError> {
        let d = f.derivatives(x0)?;
        if !is_psd(&d.hessian) {
            return Err(QuadError::NotConvex(min_eigenvalue(&d.hessian)));
        }
        let h0_norm = frobenius(&d.hessian);
        Ok(Self { x0: x0.to_vec(), f0: d.value, g0: d.gradient, h0: d.hessian, h0_norm, alpha: 1.0 })
    }

    /// Assembles an underestimator from precomputed parts.
    pub fn from_parts(x0: Vec<f64>, f0: f64, g0: Vec<f64>, h0: Vec<Vec<f64>>, alpha: f64) -> Result<Self, QuadError> {
        if !is_psd(&h0) {
            return Err(QuadError::NotConvex(min_eigenvalue(&h0)));
        }
        let h0_norm = frobenius(&h0);
        Ok(Self { x0, f0, g0, h0, h0_norm, alpha: alpha.clamp(0.0, 1.0) })
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    pub fn h0(&self) -> &[Vec<f64>] {
        &self.h0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Sets `alpha`, clamped to `[0, 1]`.
    pub fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha.clamp(0.0, 1.0);
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut q = self.clone();
        q.set_alpha(alpha);
        q
    }

    /// First-order part `f(x0) + ∇f(x0)·(x - x0)`.
    pub fn linear(&self, x: &[f64]) -> f64 {
        self.f0 + self.g0.iter().zip(x.iter().zip(&self.x0)).map(|(g, (a, b))| g * (a - b)).sum::<f64>()
    }

    /// `(x - x0)ᵀ ∇²f(x0) (x - x0)`.
    pub fn curvature(&self, x: &[f64]) -> f64 {
        let dx: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        self.h0
            .iter()
            .zip(&dx)
            .map(|(row, di)| di * row.iter().zip(&dx).map(|(h, dj)| h * dj).sum::<f64>())
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with_alpha(x, self.alpha)
    }

    pub fn eval_with_alpha(&self, x: &[f64], alpha: f64) -> f64 {
        self.linear(x) + 0.5 * alpha * self.curvature(x)
    }

    /// The `alpha` that makes `q(xv) = f(xv)` given `fxv = f(xv)`, clamped
    /// to `[0, 1]`. `None` when the curvature term at `xv` vanishes; the
    /// linear part alone then already underestimates there.
    pub fn alpha_candidate_from_value(&self, fxv: f64, xv: &[f64]) -> Option<f64> {
        let den = self.curvature(xv);
        let dist2: f64 = xv.iter().zip(&self.x0).map(|(a, b)| (a - b) * (a - b)).sum();
        if den <= 1e-12 * (1.0 + self.h0_norm * dist2) {
            return None;
        }
        Some((2.0 * (fxv - self.linear(xv)) / den).clamp(0.0, 1.0))
    }

    pub fn alpha_candidate<F: SmoothFunction + ?Sized>(&self, f: &F, xv: &[f64]) -> Result<Option<f64>, EvalError> {
        Ok(self.alpha_candidate_from_value(f.value(xv)?, xv))
    }

    pub fn record(&self, lower_bound: f64) -> UnderestimatorRecord {
        UnderestimatorRecord {
            x0: self.x0.clone(),
            f0: self.f0,
            g0: self.g0.clone(),
            h0: self.h0.iter().flatten().copied().collect(),
            alpha: self.alpha,
            lower_bound,
        }
    }
}

/// JSON form of a finished underestimator; `h0` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderestimatorRecord {
    pub x0: Vec<f64>,
    pub f0: f64,
    pub g0: Vec<f64>,
    pub h0: Vec<f64>,
    pub alpha: f64,
    pub lower_bound: f64,
}
