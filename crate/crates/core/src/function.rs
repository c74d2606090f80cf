use crate::expr::{Derivatives, EvalError, Expression};

/// A twice-differentiable scalar function the algorithms can query.
pub trait SmoothFunction: Sync {
    fn n_vars(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64, EvalError>;
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError>;
    fn derivatives(&self, x: &[f64]) -> Result<Derivatives, EvalError>;
}

impl SmoothFunction for Expression {
    fn n_vars(&self) -> usize {
        Expression::n_vars(self)
    }

    fn value(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.eval(x)
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        self.eval_grad(x)
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives, EvalError> {
        self.eval_hessian(x)
    }
}

/// `factor · f`.
#[derive(Debug, Clone)]
pub struct Scaled<'a, F: ?Sized> {
    inner: &'a F,
    factor: f64,
}

impl<'a, F: SmoothFunction + ?Sized> Scaled<'a, F> {
    pub fn new(inner: &'a F, factor: f64) -> Self {
        Self { inner, factor }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl<F: SmoothFunction + ?Sized> SmoothFunction for Scaled<'_, F> {
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    fn value(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(self.factor * self.inner.value(x)?)
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        let (v, g) = self.inner.value_grad(x)?;
        Ok((self.factor * v, g.into_iter().map(|d| self.factor * d).collect()))
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives, EvalError> {
        let d = self.inner.derivatives(x)?;
        let s = self.factor;
        Ok(Derivatives {
            value: s * d.value,
            gradient: d.gradient.into_iter().map(|v| s * v).collect(),
            hessian: d.hessian.into_iter().map(|row| row.into_iter().map(|v| s * v).collect()).collect(),
        })
    }
}
