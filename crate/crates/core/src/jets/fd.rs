//! Central finite differences, the independent oracle for [`super::jet4`].
//!
//! Each partial derivative is a tensor product of one-dimensional central
//! stencils, one per distinct variable, each of order `h^4`. Samples are
//! taken in double-double arithmetic: a fourth difference divides by
//! `h^4 = 1e-12` at the default step, which would otherwise amplify
//! `f64` rounding far past the truncation error.

use std::collections::HashMap;

use super::Jet4;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::tensor::{multi_indices, SymTensor};

/// `(offsets, integer weights, denominator)` of the central stencil for the
/// m-th derivative; weights are to be divided by `denominator * h^m`.
/// Integer weights keep the stencil sums exact.
fn stencil(m: usize) -> (&'static [i32], &'static [f64], f64) {
    match m {
        1 => (&[-2, -1, 1, 2], &[1.0, -8.0, 8.0, -1.0], 12.0),
        2 => (&[-2, -1, 0, 1, 2], &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[-3, -2, -1, 1, 2, 3], &[1.0, -8.0, 13.0, -13.0, 8.0, -1.0], 8.0),
        4 => (
            &[-3, -2, -1, 0, 1, 2, 3],
            &[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0],
            6.0,
        ),
        _ => unreachable!("stencil order {m}"),
    }
}

struct Sampler<'a> {
    expr: &'a Expression,
    center: Vec<DoubleDouble>,
    h: DoubleDouble,
    cache: HashMap<Vec<i32>, DoubleDouble>,
}

impl Sampler<'_> {
    fn sample(&mut self, shift: &[i32]) -> Result<DoubleDouble> {
        if let Some(v) = self.cache.get(shift) {
            return Ok(*v);
        }
        let p: Vec<DoubleDouble> = self
            .center
            .iter()
            .zip(shift)
            .map(|(&c, &s)| c + self.h * DoubleDouble::from(s as f64))
            .collect();
        let v = self.expr.evaluate_in(&p)?;
        self.cache.insert(shift.to_vec(), v);
        Ok(v)
    }

    /// Derivative along a sorted multi-index.
    fn derivative(&mut self, index: &[usize]) -> Result<f64> {
        let n = self.center.len();
        // (variable, multiplicity)
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for &i in index {
            match groups.last_mut() {
                Some((v, m)) if *v == i => *m += 1,
                _ => groups.push((i, 1)),
            }
        }
        let stencils: Vec<_> = groups.iter().map(|&(_, m)| stencil(m)).collect();
        let mut sum = DoubleDouble::ZERO;
        let mut counter = vec![0usize; groups.len()];
        'outer: loop {
            let mut shift = vec![0i32; n];
            let mut weight = 1.0;
            for (g, &c) in counter.iter().enumerate() {
                let (offs, ws, _) = stencils[g];
                shift[groups[g].0] = offs[c];
                weight *= ws[c];
            }
            sum = sum + self.sample(&shift)? * DoubleDouble::from(weight);
            for g in 0..counter.len() {
                counter[g] += 1;
                if counter[g] < stencils[g].0.len() {
                    continue 'outer;
                }
                counter[g] = 0;
            }
            break;
        }
        let denom: f64 = stencils.iter().map(|s| s.2).product();
        Ok((sum / DoubleDouble::from(denom) / self.h.powi(index.len() as i32)).hi())
    }
}

/// Finite-difference estimate of every derivative block up to order four.
pub fn finite_difference_jet(expr: &Expression, point: &[f64], h: f64) -> Result<Jet4> {
    expr.check_point(point)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let n = expr.dim();
    let mut s = Sampler {
        expr,
        center: point.iter().map(|&x| DoubleDouble::from(x)).collect(),
        h: DoubleDouble::from(h),
        cache: HashMap::new(),
    };
    let value = s.sample(&vec![0; n])?.hi();
    let mut blocks = Vec::with_capacity(4);
    for order in 1..=4 {
        let data = multi_indices(n, order)
            .iter()
            .map(|mi| s.derivative(mi))
            .collect::<Result<Vec<_>>>()?;
        blocks.push(SymTensor::from_packed(n, order, data));
    }
    let d4 = blocks.pop().unwrap();
    let d3 = blocks.pop().unwrap();
    let d2 = blocks.pop().unwrap();
    let d1 = blocks.pop().unwrap().packed().to_vec();
    Ok(Jet4 {
        n,
        value,
        d1,
        d2,
        d3,
        d4,
        order: 4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::jet4;

    #[test]
    fn log_fourth_derivative() {
        let e = Expression::parse("ln(x1)", 1).unwrap();
        let j = finite_difference_jet(&e, &[2.0], 1e-3).unwrap();
        assert!((j.d4.get(&[0, 0, 0, 0]) + 0.375).abs() < 1e-5);
        assert!((j.d1[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_has_vanishing_derivatives() {
        let e = Expression::parse("3.25", 2).unwrap();
        let j = finite_difference_jet(&e, &[0.1, 0.2], 1e-3).unwrap();
        for k in 1..=4 {
            assert!(j.block(k).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn agrees_with_taylor_mode_on_log_parabolic() {
        let e = Expression::parse("-0.25*ln(x1 - x2^2/2)", 2).unwrap();
        let fd = finite_difference_jet(&e, &[1.0, 0.0], 1e-3).unwrap();
        let ad = jet4(&e, &[1.0, 0.0]).unwrap();
        assert!(ad.relative_deviation(&fd, 1e-12) < 1e-5);
    }

    #[test]
    fn rejects_bad_step() {
        let e = Expression::parse("x1", 1).unwrap();
        assert!(finite_difference_jet(&e, &[1.0], 0.0).is_err());
        assert!(finite_difference_jet(&e, &[1.0], f64::NAN).is_err());
    }
}
