//! Scalar expressions of a handful of variables with exact first and second
//! derivatives.
//!
//! Expressions are parsed from a small infix grammar (see [`parse`]) into an
//! immutable tree. Values, gradients and Hessians are all produced by one
//! generic tree walk instantiated at three number types: plain `f64`, a
//! first-order dual ([`jet::Dual`]) and a second-order jet ([`jet::Jet`]).
//! Domain violations (log of a non-positive number, division by zero, ...)
//! are reported as [`EvalError`] instead of leaking NaN into callers.

mod ast;
pub mod jet;
mod parse;

pub use ast::{BinaryOp, Node, UnaryOp};
pub use parse::{parse, parse_with_params, ParseError};

use std::fmt;

use jet::{Dual, Jet, Scalar};

/// Upper bound on the number of variables an [`Expression`] may reference.
pub const MAX_VARS: usize = jet::MAX_VARS;

/// Failure while evaluating an expression or one of its derivatives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("log of non-positive argument {0}")]
    LogDomain(f64),
    #[error("sqrt of negative argument {0}")]
    SqrtDomain(f64),
    #[error("sqrt is not differentiable at 0")]
    SqrtNotDifferentiable,
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power {exponent} of non-positive base {base}")]
    PowDomain { base: f64, exponent: f64 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("point has {got} coordinates, expression expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point coordinate {index} is not finite")]
    NonFinitePoint { index: usize },
}

/// A parsed scalar function of `n_vars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    n_vars: usize,
}

impl Expression {
    /// Wraps a node tree. Fails when a variable index is out of range or
    /// `n_vars` exceeds [`MAX_VARS`].
    pub fn new(root: Node, n_vars: usize) -> Result<Self, ParseError> {
        if n_vars == 0 || n_vars > MAX_VARS {
            return Err(ParseError::TooManyVariables { n_vars, max: MAX_VARS });
        }
        if let Some(index) = root.max_var() {
            if index >= n_vars {
                return Err(ParseError::VariableOutOfRange { index, n_vars, position: 0 });
            }
        }
        Ok(Self { root, n_vars })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn check_point(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.n_vars {
            return Err(EvalError::Dimension { expected: self.n_vars, got: x.len() });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFinitePoint { index });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_point(x)?;
        let v = walk::<f64>(&self.root, x, self.n_vars)?;
        finite(v)
    }

    /// Value and gradient in a single pass.
    pub fn eval_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        self.check_point(x)?;
        let d = walk::<Dual>(&self.root, x, self.n_vars)?;
        let g = d.grad[..self.n_vars].to_vec();
        if !d.value.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok((d.value, g))
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.eval_grad(x).map(|(_, g)| g)
    }

    /// Value, gradient and Hessian (row-major `Vec` of rows) in a single pass.
    pub fn eval_hessian(&self, x: &[f64]) -> Result<Derivatives, EvalError> {
        self.check_point(x)?;
        let j = walk::<Jet>(&self.root, x, self.n_vars)?;
        let n = self.n_vars;
        let gradient = j.grad[..n].to_vec();
        let hessian: Vec<Vec<f64>> = (0..n).map(|i| j.hess[i][..n].to_vec()).collect();
        let all_finite = j.value.is_finite()
            && gradient.iter().all(|v| v.is_finite())
            && hessian.iter().flatten().all(|v| v.is_finite());
        if !all_finite {
            return Err(EvalError::NonFinite);
        }
        Ok(Derivatives { value: j.value, gradient, hessian })
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.eval_hessian(x).map(|d| d.hessian)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Second-order information at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn walk<S: Scalar>(node: &Node, x: &[f64], n: usize) -> Result<S, EvalError> {
    Ok(match node {
        Node::Const(c) => S::constant(*c),
        Node::Var(i) => S::variable(*i, x[*i], n),
        Node::Unary(op, arg) => {
            let a = walk::<S>(arg, x, n)?;
            unary(*op, a, n)?
        }
        Node::Binary(op, lhs, rhs) => {
            let a = walk::<S>(lhs, x, n)?;
            let b = walk::<S>(rhs, x, n)?;
            match op {
                BinaryOp::Add => a.add(&b, n),
                BinaryOp::Sub => a.sub(&b, n),
                BinaryOp::Mul => a.mul(&b, n),
                BinaryOp::Div => {
                    let v = b.value();
                    if v == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    let inv = b.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v), n);
                    a.mul(&inv, n)
                }
            }
        }
        Node::Pow(base, exponent) => {
            let a = walk::<S>(base, x, n)?;
            pow(a, *exponent, n)?
        }
    })
}

fn unary<S: Scalar>(op: UnaryOp, a: S, n: usize) -> Result<S, EvalError> {
    let v = a.value();
    Ok(match op {
        UnaryOp::Neg => a.neg(n),
        UnaryOp::Exp => {
            let e = v.exp();
            a.chain(e, e, e, n)
        }
        UnaryOp::Log => {
            if v <= 0.0 {
                return Err(EvalError::LogDomain(v));
            }
            a.chain(v.ln(), 1.0 / v, -1.0 / (v * v), n)
        }
        UnaryOp::Sqrt => {
            if v < 0.0 {
                return Err(EvalError::SqrtDomain(v));
            }
            if v == 0.0 {
                if S::ORDER > 0 {
                    return Err(EvalError::SqrtNotDifferentiable);
                }
                return Ok(S::constant(0.0));
            }
            let s = v.sqrt();
            a.chain(s, 0.5 / s, -0.25 / (s * v), n)
        }
    })
}

fn pow<S: Scalar>(a: S, c: f64, n: usize) -> Result<S, EvalError> {
    let v = a.value();
    if c == 0.0 {
        return Ok(S::constant(1.0));
    }
    if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
        let k = c as i32;
        if k < 0 && v == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let d0 = v.powi(k);
        let d1 = if k == 1 { 1.0 } else { c * v.powi(k - 1) };
        let d2 = match k {
            1 => 0.0,
            2 => 2.0,
            _ => c * (c - 1.0) * v.powi(k - 2),
        };
        return Ok(a.chain(d0, d1, d2, n));
    }
    if v <= 0.0 {
        return Err(EvalError::PowDomain { base: v, exponent: c });
    }
    // x^c = exp(c log x) for x > 0
    let d0 = (c * v.ln()).exp();
    let d1 = c * d0 / v;
    let d2 = c * (c - 1.0) * d0 / (v * v);
    Ok(a.chain(d0, d1, d2, n))
}
