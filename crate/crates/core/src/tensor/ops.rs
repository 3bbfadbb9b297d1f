use std::fmt;

use super::Scalar;

/// Elementwise single-input operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnaryOp {
    Tanh,
    Sigmoid,
    Relu,
    Log,
    Exp,
    Negate,
    Scale(f64),
}

impl UnaryOp {
    pub fn name(&self) -> &'static str {
        match self {
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sigmoid => "sigmoid",
            UnaryOp::Relu => "relu",
            UnaryOp::Log => "log",
            UnaryOp::Exp => "exp",
            UnaryOp::Negate => "negate",
            UnaryOp::Scale(_) => "scale",
        }
    }

    pub(crate) fn forward<T: Scalar>(&self, x: T) -> T {
        match *self {
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Sigmoid => sigmoid(x),
            UnaryOp::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
            UnaryOp::Log => x.ln(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Negate => -x,
            UnaryOp::Scale(c) => x * T::of(c),
        }
    }

    /// Local derivative given the input `x` and output `y`.
    pub(crate) fn derivative<T: Scalar>(&self, x: T, y: T) -> T {
        match *self {
            UnaryOp::Tanh => T::one() - y * y,
            UnaryOp::Sigmoid => y * (T::one() - y),
            UnaryOp::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            UnaryOp::Log => T::one() / x,
            UnaryOp::Exp => y,
            UnaryOp::Negate => -T::one(),
            UnaryOp::Scale(c) => T::of(c),
        }
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    // Branch keeps exp() from overflowing for large |x|.
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Elementwise two-input operations on equally shaped tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

impl BinaryOp {
    pub fn name(&self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
        }
    }

    #[inline]
    pub(crate) fn forward<T: Scalar>(&self, a: T, b: T) -> T {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
