//! Scalar abstraction shared by the plain `f64` evaluator and the
//! double-double evaluator used by the finite-difference oracle.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::dd::DoubleDouble;

pub trait Real:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Nearest `f64`.
    fn to_f64(self) -> f64;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn powi(self, k: i32) -> Self;

    /// `self^p` for a constant exponent. Integer exponents use repeated
    /// multiplication, so negative bases are fine for them.
    fn powc(self, p: f64) -> Self {
        match integer_exponent(p) {
            Some(k) => self.powi(k),
            None => (self.ln() * Self::from_f64(p)).exp(),
        }
    }

    fn signum_f64(self) -> f64 {
        self.to_f64().signum()
    }
}

/// `Some(k)` when `p` is an integer small enough for `powi`.
pub fn integer_exponent(p: f64) -> Option<i32> {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        Some(p as i32)
    } else {
        None
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powc(self, p: f64) -> Self {
        match integer_exponent(p) {
            Some(k) => f64::powi(self, k),
            None => f64::powf(self, p),
        }
    }
}

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn ln(self) -> Self {
        DoubleDouble::ln(self)
    }
    fn exp(self) -> Self {
        DoubleDouble::exp(self)
    }
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
    fn sin(self) -> Self {
        DoubleDouble::sin(self)
    }
    fn cos(self) -> Self {
        DoubleDouble::cos(self)
    }
    fn sinh(self) -> Self {
        DoubleDouble::sinh(self)
    }
    fn cosh(self) -> Self {
        DoubleDouble::cosh(self)
    }
    fn powi(self, k: i32) -> Self {
        DoubleDouble::powi(self, k)
    }
}
