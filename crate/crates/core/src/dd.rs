//! Double-double arithmetic (an unevaluated sum `hi + lo` of two `f64`s,
//! roughly 106 significant bits).
//!
//! Only what the finite-difference oracle needs: the four operations,
//! `sqrt`, `exp`, `ln`, the circular and hyperbolic sine/cosine and
//! integer powers. Fourth-order difference quotients divide by `h^4`, so
//! plain `f64` rounding noise would swamp them at the step sizes we use.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
const FRAC_PI_2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123_233_995_736_766e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        DoubleDouble {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::ZERO
            } else {
                DoubleDouble::from(f64::NAN)
            };
        }
        let y = DoubleDouble::from(self.hi.sqrt());
        y + (self - y * y) / (y + y)
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.7 {
            return DoubleDouble::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * DoubleDouble::from(k)).scale_pow2(-SQUARINGS);
        // exp(r) - 1 by Taylor series; |r| < 4e-4 so 12 terms is plenty.
        let mut term = r;
        let mut sum = r;
        for i in 2..=14 {
            term = term * r / DoubleDouble::from(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2s + s^2 keeps the small part separate.
        for _ in 0..SQUARINGS {
            sum = sum * (sum + DoubleDouble::from(2.0));
        }
        (sum + Self::ONE).scale_pow2(k as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::from(f64::NAN);
        }
        let mut y = DoubleDouble::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::ONE;
        }
        y
    }

    fn sin_cos_reduced(r: Self) -> (Self, Self) {
        let r2 = r * r;
        let mut term = r;
        let mut sin = r;
        let mut i = 1.0;
        loop {
            term = -term * r2 / DoubleDouble::from((i + 1.0) * (i + 2.0));
            sin = sin + term;
            i += 2.0;
            if term.hi.abs() < 1e-36 || i > 60.0 {
                break;
            }
        }
        let mut term = Self::ONE;
        let mut cos = Self::ONE;
        let mut i = 0.0;
        loop {
            term = -term * r2 / DoubleDouble::from((i + 1.0) * (i + 2.0));
            cos = cos + term;
            i += 2.0;
            if term.hi.abs() < 1e-36 || i > 60.0 {
                break;
            }
        }
        (sin, cos)
    }

    fn sin_cos(self) -> (Self, Self) {
        let j = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2 * DoubleDouble::from(j);
        let (s, c) = Self::sin_cos_reduced(r);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(self) -> Self {
        self.sin_cos().1
    }

    pub fn sinh(self) -> Self {
        if self.hi.abs() < 0.5 {
            let x2 = self * self;
            let mut term = self;
            let mut sum = self;
            let mut i = 1.0;
            while term.hi.abs() > 1e-36 && i < 60.0 {
                term = term * x2 / DoubleDouble::from((i + 1.0) * (i + 2.0));
                sum = sum + term;
                i += 2.0;
            }
            sum
        } else {
            let e = self.exp();
            (e - Self::ONE / e).scale_pow2(-1)
        }
    }

    pub fn cosh(self) -> Self {
        let e = self.exp();
        (e + Self::ONE / e).scale_pow2(-1)
    }

    pub fn powi(self, k: i32) -> Self {
        let mut base = if k < 0 { Self::ONE / self } else { self };
        let mut e = k.unsigned_abs();
        let mut acc = Self::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DoubleDouble { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b * DoubleDouble::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * DoubleDouble::from(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DoubleDouble, b: DoubleDouble, tol: f64) -> bool {
        (a - b).abs().hi <= tol * b.abs().hi.max(1e-300)
    }

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 7.5, 123.456] {
            let d = DoubleDouble::from(x);
            assert!(close(d.ln().exp(), d, 1e-30), "x = {x}");
        }
    }

    #[test]
    fn known_constants() {
        // e = 2.718281828459045235360287471352662497757
        let e = DoubleDouble::ONE.exp();
        let e_ref = DoubleDouble::new(std::f64::consts::E, 1.445_646_891_729_250_2e-16);
        assert!(close(e, e_ref, 1e-31));
        let two = DoubleDouble::from(2.0);
        assert!(close(two.ln(), LN2, 1e-31));
        let s = two.sqrt();
        assert!(close(s * s, two, 1e-31));
    }

    #[test]
    fn trig_identities() {
        for &x in &[0.3, 1.2, 2.5, -4.0, 10.0] {
            let d = DoubleDouble::from(x);
            let one = d.sin() * d.sin() + d.cos() * d.cos();
            assert!((one - DoubleDouble::ONE).abs().hi < 1e-30, "x = {x}");
            assert!((d.sin().to_f64_lossy() - x.sin()).abs() < 1e-15);
            let h = d.cosh() * d.cosh() - d.sinh() * d.sinh();
            assert!((h - DoubleDouble::ONE).abs().hi < 1e-28 * d.cosh().hi.powi(2));
        }
    }

    impl DoubleDouble {
        fn to_f64_lossy(self) -> f64 {
            self.hi + self.lo
        }
    }
}
