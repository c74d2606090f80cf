//! Forward-mode number types used by the expression walker.
//!
//! [`Dual`] carries a value and a gradient, [`Jet`] additionally carries the
//! full Hessian. Both are fixed-capacity so evaluation never allocates; only
//! the leading `n` slots are touched.

pub const MAX_VARS: usize = 8;

/// Arithmetic the tree walker needs. `chain` applies a scalar function whose
/// value and first two derivatives at `self.value()` are `d0, d1, d2`.
pub trait Scalar: Copy {
    /// Highest derivative order carried (0 for plain values).
    const ORDER: u8;

    fn constant(c: f64) -> Self;
    fn variable(index: usize, value: f64, n: usize) -> Self;
    fn value(&self) -> f64;
    fn add(&self, other: &Self, n: usize) -> Self;
    fn sub(&self, other: &Self, n: usize) -> Self;
    fn mul(&self, other: &Self, n: usize) -> Self;
    fn neg(&self, n: usize) -> Self;
    fn chain(&self, d0: f64, d1: f64, d2: f64, n: usize) -> Self;
}

impl Scalar for f64 {
    const ORDER: u8 = 0;

    fn constant(c: f64) -> Self {
        c
    }
    fn variable(_: usize, value: f64, _: usize) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, other: &Self, _: usize) -> Self {
        self + other
    }
    fn sub(&self, other: &Self, _: usize) -> Self {
        self - other
    }
    fn mul(&self, other: &Self, _: usize) -> Self {
        self * other
    }
    fn neg(&self, _: usize) -> Self {
        -self
    }
    fn chain(&self, d0: f64, _: f64, _: f64, _: usize) -> Self {
        d0
    }
}

/// Value plus gradient.
#[derive(Debug, Clone, Copy)]
pub struct Dual {
    pub value: f64,
    pub grad: [f64; MAX_VARS],
}

impl Scalar for Dual {
    const ORDER: u8 = 1;

    fn constant(c: f64) -> Self {
        Self { value: c, grad: [0.0; MAX_VARS] }
    }

    fn variable(index: usize, value: f64, _: usize) -> Self {
        let mut grad = [0.0; MAX_VARS];
        grad[index] = 1.0;
        Self { value, grad }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(&self, other: &Self, n: usize) -> Self {
        let mut out = *self;
        out.value += other.value;
        for i in 0..n {
            out.grad[i] += other.grad[i];
        }
        out
    }

    fn sub(&self, other: &Self, n: usize) -> Self {
        let mut out = *self;
        out.value -= other.value;
        for i in 0..n {
            out.grad[i] -= other.grad[i];
        }
        out
    }

    fn mul(&self, other: &Self, n: usize) -> Self {
        let mut out = Self::constant(self.value * other.value);
        for i in 0..n {
            out.grad[i] = self.grad[i] * other.value + other.grad[i] * self.value;
        }
        out
    }

    fn neg(&self, n: usize) -> Self {
        let mut out = *self;
        out.value = -out.value;
        for g in &mut out.grad[..n] {
            *g = -*g;
        }
        out
    }

    fn chain(&self, d0: f64, d1: f64, _: f64, n: usize) -> Self {
        let mut out = Self::constant(d0);
        for i in 0..n {
            out.grad[i] = d1 * self.grad[i];
        }
        out
    }
}

/// Value, gradient and (symmetric) Hessian.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; MAX_VARS],
    pub hess: [[f64; MAX_VARS]; MAX_VARS],
}

impl Scalar for Jet {
    const ORDER: u8 = 2;

    fn constant(c: f64) -> Self {
        Self { value: c, grad: [0.0; MAX_VARS], hess: [[0.0; MAX_VARS]; MAX_VARS] }
    }

    fn variable(index: usize, value: f64, _: usize) -> Self {
        let mut out = Self::constant(value);
        out.grad[index] = 1.0;
        out
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(&self, other: &Self, n: usize) -> Self {
        let mut out = *self;
        out.value += other.value;
        for i in 0..n {
            out.grad[i] += other.grad[i];
            for j in 0..n {
                out.hess[i][j] += other.hess[i][j];
            }
        }
        out
    }

    fn sub(&self, other: &Self, n: usize) -> Self {
        let mut out = *self;
        out.value -= other.value;
        for i in 0..n {
            out.grad[i] -= other.grad[i];
            for j in 0..n {
                out.hess[i][j] -= other.hess[i][j];
            }
        }
        out
    }

    fn mul(&self, other: &Self, n: usize) -> Self {
        let (a, b) = (self, other);
        let mut out = Self::constant(a.value * b.value);
        for i in 0..n {
            out.grad[i] = a.grad[i] * b.value + b.grad[i] * a.value;
            for j in 0..n {
                out.hess[i][j] = a.hess[i][j] * b.value
                    + b.hess[i][j] * a.value
                    + a.grad[i] * b.grad[j]
                    + b.grad[i] * a.grad[j];
            }
        }
        out
    }

    fn neg(&self, n: usize) -> Self {
        let mut out = *self;
        out.value = -out.value;
        for i in 0..n {
            out.grad[i] = -out.grad[i];
            for j in 0..n {
                out.hess[i][j] = -out.hess[i][j];
            }
        }
        out
    }

    fn chain(&self, d0: f64, d1: f64, d2: f64, n: usize) -> Self {
        let mut out = Self::constant(d0);
        for i in 0..n {
            out.grad[i] = d1 * self.grad[i];
            for j in 0..n {
                out.hess[i][j] = d1 * self.hess[i][j] + d2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}
