//! Fourth-order Taylor-mode differentiation of expressions.
//!
//! Every subexpression is propagated as a multivariate polynomial in the
//! displacement `h = x - x0`, truncated at total degree `order` (at most
//! four). Coefficients are grouped by degree and each degree block is a
//! packed symmetric tensor, so the coefficient of `h^alpha` sits in the
//! slot of the sorted multi-index of `alpha`. Elementary functions are
//! applied through their univariate Taylor expansion about the constant
//! term, which keeps every mixed partial exact up to rounding.

mod fd;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalErrorKind, Result};
use crate::expr::{BinOp, Expression, Func, Node};
use crate::scalar::integer_exponent;
use crate::tensor::{multi_indices, multiplicity_factorial, packed_len, rank_sorted, SymTensor};

pub use fd::finite_difference_jet;

/// Value and all partial derivatives of orders one to four at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet4 {
    pub n: usize,
    pub value: f64,
    pub d1: Vec<f64>,
    pub d2: SymTensor,
    pub d3: SymTensor,
    pub d4: SymTensor,
    /// Highest order actually computed; blocks above it are zero.
    pub order: usize,
}

impl Jet4 {
    pub fn hessian(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.d2.get(&[i, j]))
    }

    pub fn block(&self, k: usize) -> Vec<f64> {
        match k {
            0 => vec![self.value],
            1 => self.d1.clone(),
            2 => self.d2.packed().to_vec(),
            3 => self.d3.packed().to_vec(),
            4 => self.d4.packed().to_vec(),
            _ => panic!("no derivative block of order {k}"),
        }
    }

    /// Largest per-block relative deviation `|a - b|_inf / max(|a|_inf, floor)`
    /// over derivative orders one to four.
    pub fn relative_deviation(&self, other: &Jet4, floor: f64) -> f64 {
        (1..=4)
            .map(|k| {
                let a = self.block(k);
                let b = other.block(k);
                let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(floor);
                let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                diff / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Monomial bookkeeping for truncated polynomials in `n` variables.
#[derive(Debug)]
struct MonomialTable {
    order: usize,
    offsets: Vec<usize>,
    len: usize,
    /// `(i, j, k)`: monomial `i` times monomial `j` is monomial `k`.
    products: Vec<(u32, u32, u32)>,
    /// Per slot: product of multiplicity factorials (coefficient to derivative).
    factorials: Vec<f64>,
}

impl MonomialTable {
    fn build(n: usize, order: usize) -> Self {
        let mut offsets = Vec::with_capacity(order + 2);
        let mut monomials: Vec<Vec<usize>> = Vec::new();
        for d in 0..=order {
            offsets.push(monomials.len());
            monomials.extend(multi_indices(n, d));
        }
        offsets.push(monomials.len());
        let len = monomials.len();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if a.len() + b.len() > order {
                    continue;
                }
                let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
                merged.sort_unstable();
                let k = offsets[merged.len()] + rank_sorted(&merged);
                products.push((i as u32, j as u32, k as u32));
            }
        }
        let factorials = monomials.iter().map(|m| multiplicity_factorial(m)).collect();
        MonomialTable {
            order,
            offsets,
            len,
            products,
            factorials,
        }
    }

    fn shared(n: usize, order: usize) -> Arc<MonomialTable> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<MonomialTable>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut map = cache.lock().expect("monomial cache poisoned");
        map.entry((n, order))
            .or_insert_with(|| Arc::new(MonomialTable::build(n, order)))
            .clone()
    }

    fn constant(&self, c: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        v[0] = c;
        v
    }

    fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for &(i, j, k) in &self.products {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
        out
    }

    /// `g(a)` given `g` and its first `order` derivatives at `a[0]`.
    fn compose(&self, a: &[f64], derivs: &[f64; 5]) -> Vec<f64> {
        let mut h = a.to_vec();
        h[0] = 0.0;
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        let mut acc = self.constant(derivs[self.order] / fact[self.order]);
        for k in (0..self.order).rev() {
            acc = self.mul(&acc, &h);
            acc[0] += derivs[k] / fact[k];
        }
        acc
    }
}

fn univariate_derivs(func: Func, x: f64) -> std::result::Result<[f64; 5], EvalErrorKind> {
    Ok(match func {
        Func::Ln => {
            if x <= 0.0 {
                return Err(EvalErrorKind::LogNonPositive);
            }
            let r = 1.0 / x;
            [x.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]
        }
        Func::Exp => [x.exp(); 5],
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalErrorKind::SqrtNegative);
            }
            if x == 0.0 {
                return Err(EvalErrorKind::NonFinite);
            }
            let s = x.sqrt();
            [
                s,
                0.5 / s,
                -0.25 / (s * x),
                0.375 / (s * x * x),
                -0.9375 / (s * x * x * x),
            ]
        }
        Func::Sin => {
            let (s, c) = x.sin_cos();
            [s, c, -s, -c, s]
        }
        Func::Cos => {
            let (s, c) = x.sin_cos();
            [c, -s, -c, s, c]
        }
        Func::Sinh => {
            let (s, c) = (x.sinh(), x.cosh());
            [s, c, s, c, s]
        }
        Func::Cosh => {
            let (s, c) = (x.sinh(), x.cosh());
            [c, s, c, s, c]
        }
    })
}

fn power_derivs(x: f64, p: f64) -> std::result::Result<[f64; 5], EvalErrorKind> {
    let integer = integer_exponent(p);
    if x < 0.0 && integer.is_none() {
        return Err(EvalErrorKind::PowNegativeBase);
    }
    if x == 0.0 && p < 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    let mut out = [0.0; 5];
    let mut falling = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if falling == 0.0 {
            break;
        }
        let e = p - k as f64;
        let power = match integer {
            Some(_) => x.powi(e as i32),
            None => x.powf(e),
        };
        *slot = falling * power;
        falling *= e;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(EvalErrorKind::NonFinite);
    }
    Ok(out)
}

fn reciprocal_derivs(x: f64) -> std::result::Result<[f64; 5], EvalErrorKind> {
    if x == 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    let r = 1.0 / x;
    Ok([r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)])
}

struct Propagator<'a> {
    table: &'a MonomialTable,
    point: &'a [f64],
}

impl Propagator<'_> {
    fn run(&self, node: &Node) -> Result<Vec<f64>> {
        let t = self.table;
        let wrap = |r: std::result::Result<Vec<f64>, EvalErrorKind>| {
            r.and_then(|v| {
                if v.iter().all(|c| c.is_finite()) {
                    Ok(v)
                } else {
                    Err(EvalErrorKind::NonFinite)
                }
            })
            .map_err(|kind| Error::Eval {
                kind,
                subtree: node.to_string(),
            })
        };
        match node {
            Node::Const(c) => Ok(t.constant(*c)),
            Node::Var(i) => {
                let mut v = t.constant(self.point[*i]);
                if t.order >= 1 {
                    v[t.offsets[1] + i] = 1.0;
                }
                Ok(v)
            }
            Node::Neg(a) => Ok(self.run(a)?.into_iter().map(|c| -c).collect()),
            Node::Func(func, a) => {
                let a = self.run(a)?;
                wrap(univariate_derivs(*func, a[0]).map(|d| t.compose(&a, &d)))
            }
            Node::Pow(a, p) => {
                let a = self.run(a)?;
                wrap(power_derivs(a[0], *p).map(|d| t.compose(&a, &d)))
            }
            Node::Bin(op, a, b) => {
                let a = self.run(a)?;
                let b = self.run(b)?;
                wrap(match op {
                    BinOp::Add => Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
                    BinOp::Sub => Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect()),
                    BinOp::Mul => Ok(t.mul(&a, &b)),
                    BinOp::Div => reciprocal_derivs(b[0]).map(|d| t.mul(&a, &t.compose(&b, &d))),
                })
            }
        }
    }
}

/// Jet truncated at `order` (1..=4); blocks above `order` are zero.
pub fn jet(expr: &Expression, point: &[f64], order: usize) -> Result<Jet4> {
    expr.check_point(point)?;
    assert!((1..=4).contains(&order), "jet order must be in 1..=4");
    let n = expr.dim();
    let table = MonomialTable::shared(n, order);
    let coeffs = Propagator { table: &table, point }.run(expr.root())?;
    let block = |k: usize| -> SymTensor {
        if k > order {
            return SymTensor::zeros(n, k);
        }
        let start = table.offsets[k];
        let data = (0..packed_len(n, k))
            .map(|r| coeffs[start + r] * table.factorials[start + r])
            .collect();
        SymTensor::from_packed(n, k, data)
    };
    let d1 = block(1).packed().to_vec();
    Ok(Jet4 {
        n,
        value: coeffs[0],
        d1,
        d2: block(2),
        d3: block(3),
        d4: block(4),
        order,
    })
}

/// All partial derivatives up to order four.
pub fn jet4(expr: &Expression, point: &[f64]) -> Result<Jet4> {
    jet(expr, point, 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(src: &str, n: usize) -> Expression {
        Expression::parse(src, n).unwrap()
    }

    #[test]
    fn log_derivatives() {
        let j = jet4(&e("ln(x1)", 1), &[2.0]).unwrap();
        assert!((j.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(j.d1[0], 0.5);
        assert_eq!(j.d2.get(&[0, 0]), -0.25);
        assert_eq!(j.d3.get(&[0, 0, 0]), 0.25);
        assert_eq!(j.d4.get(&[0, 0, 0, 0]), -0.375);
    }

    #[test]
    fn quadratic_has_no_higher_derivatives() {
        let j = jet4(&e("0.5*(x1^2 + x2^2)", 2), &[0.3, -1.7]).unwrap();
        assert_eq!(j.hessian(), DMatrix::identity(2, 2));
        assert_eq!(j.d3.max_abs(), 0.0);
        assert_eq!(j.d4.max_abs(), 0.0);
        assert_eq!(j.d1, vec![0.3, -1.7]);
    }

    #[test]
    fn log_parabolic_third_derivatives() {
        let j = jet4(&e("-0.25*ln(x1 - x2^2/2)", 2), &[1.0, 0.0]).unwrap();
        assert_eq!(j.d2.get(&[0, 0]), 0.25);
        assert_eq!(j.d2.get(&[1, 1]), 0.25);
        assert_eq!(j.d2.get(&[0, 1]), 0.0);
        assert_eq!(j.d3.get(&[0, 0, 0]), -0.5);
        assert_eq!(j.d3.get(&[0, 1, 1]), -0.25);
        assert_eq!(j.d3.get(&[1, 0, 1]), -0.25);
        assert_eq!(j.d3.get(&[0, 0, 1]), 0.0);
        assert_eq!(j.d3.get(&[1, 1, 1]), 0.0);
    }

    #[test]
    fn mixed_partials_of_a_product() {
        // f = x1^2 x2^2 x3 -> f_{1123} = 4 x2, f_{1122} = 4 x3
        let j = jet4(&e("x1^2 * x2^2 * x3", 3), &[0.7, 1.3, -2.0]).unwrap();
        assert!((j.d4.get(&[0, 1, 0, 2]) - 4.0 * 1.3).abs() < 1e-14);
        assert!((j.d4.get(&[1, 0, 1, 0]) - 4.0 * -2.0).abs() < 1e-14);
        assert!((j.d3.get(&[2, 0, 0]) - 2.0 * 1.3 * 1.3).abs() < 1e-14);
    }

    #[test]
    fn trig_and_hyperbolic_fourth_derivatives() {
        let x: f64 = 0.4;
        for (src, d4) in [
            ("sin(x1)", x.sin()),
            ("cos(x1)", x.cos()),
            ("sinh(x1)", x.sinh()),
            ("cosh(x1)", x.cosh()),
            ("exp(2*x1)", 16.0 * (2.0 * x).exp()),
            ("sqrt(x1)", -15.0 / 16.0 * x.powf(-3.5)),
            ("1/x1", 24.0 / x.powi(5)),
            ("x1^2.5", 2.5 * 1.5 * 0.5 * -0.5 * x.powf(-1.5)),
        ] {
            let j = jet4(&e(src, 1), &[x]).unwrap();
            let got = j.d4.get(&[0, 0, 0, 0]);
            assert!((got - d4).abs() < 1e-12 * d4.abs().max(1.0), "{src}: {got} vs {d4}");
        }
    }

    #[test]
    fn integer_powers_at_zero_and_negative_bases() {
        let j = jet4(&e("x1^2", 1), &[0.0]).unwrap();
        assert_eq!(j.block(1), vec![0.0]);
        assert_eq!(j.d2.get(&[0, 0]), 2.0);
        assert_eq!(j.d3.get(&[0, 0, 0]), 0.0);
        let j = jet4(&e("x1^3", 1), &[-2.0]).unwrap();
        assert_eq!(j.d3.get(&[0, 0, 0]), 6.0);
        assert!(jet4(&e("x1^0.5", 1), &[-2.0]).is_err());
    }

    #[test]
    fn errors_name_the_failing_subtree() {
        match jet4(&e("x2 + ln(x1 - 1)", 2), &[1.0, 0.0]) {
            Err(Error::Eval { kind, subtree }) => {
                assert_eq!(kind, EvalErrorKind::LogNonPositive);
                assert_eq!(subtree, "ln((x1 - 1))");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_jets_match_full_jets() {
        let f = e("-0.25*ln(x1 - x2^2/2 - x3^2/2)", 3);
        let p = [2.0, 0.3, -0.4];
        let full = jet4(&f, &p).unwrap();
        let two = jet(&f, &p, 2).unwrap();
        assert_eq!(full.d2, two.d2);
        assert_eq!(two.d3.max_abs(), 0.0);
    }
}
