//! Pointwise Legendre transforms and the affine maps of `R^{n+1}` that
//! fix the vertical direction `Y = (0, …, 0, 1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::jets::{jet, jet4};

/// `X ↦ M X + b` on `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    matrix: DMatrix<f64>,
    translation: DVector<f64>,
}

impl AffineTransform {
    pub fn new(matrix: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != translation.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: translation.len(),
            });
        }
        if !(matrix.determinant().abs() > 1e-12) {
            return Err(Error::SingularTransform);
        }
        Ok(AffineTransform { matrix, translation })
    }

    pub fn identity(dim: usize) -> Self {
        AffineTransform {
            matrix: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    /// Diagonal scaling followed by a translation.
    pub fn diagonal(scale: &[f64], translation: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(scale)),
            DVector::from_column_slice(translation),
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        let v = &self.matrix * DVector::from_column_slice(p) + &self.translation;
        Ok(v.iter().copied().collect())
    }

    /// Last column of `M` is `Y`, i.e. `M(Y) = Y`.
    pub fn is_calabi(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| self.matrix[(i, d - 1)] == if i == d - 1 { 1.0 } else { 0.0 })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineTransform) -> Result<AffineTransform> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(AffineTransform {
            matrix: &self.matrix * &other.matrix,
            translation: &self.matrix * &other.translation + &self.translation,
        })
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let inv = self.matrix.clone().try_inverse().ok_or(Error::SingularTransform)?;
        let translation = -(&inv * &self.translation);
        Ok(AffineTransform {
            matrix: inv,
            translation,
        })
    }
}

pub fn apply_affine(tr: &AffineTransform, p: &[f64]) -> Result<Vec<f64>> {
    tr.apply(p)
}

pub fn is_calabi(tr: &AffineTransform) -> bool {
    tr.is_calabi()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendrePair {
    pub y: Vec<f64>,
    /// `∇f(y)`.
    pub x: Vec<f64>,
    /// `y·x - f(y)`.
    pub u_value: f64,
}

pub fn legendre_point(f: &ConvexFunction, y: &[f64]) -> Result<LegendrePair> {
    f.check_interior(y)?;
    let j = jet(&f.body, y, 1)?;
    let u_value = y.iter().zip(&j.d1).map(|(a, b)| a * b).sum::<f64>() - j.value;
    Ok(LegendrePair {
        y: y.to_vec(),
        x: j.d1,
        u_value,
    })
}

/// `‖Hess f(y) · Hess g(x) - I‖_max + |u - g(x)|` at `x = ∇f(y)`.
pub fn duality_defect(f: &ConvexFunction, conjugate: &ConvexFunction, y: &[f64]) -> Result<f64> {
    if conjugate.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: conjugate.dim(),
        });
    }
    let pair = legendre_point(f, y)?;
    conjugate.check_interior(&pair.x)?;
    let hf = jet4(&f.body, y)?.hessian();
    let jg = jet4(&conjugate.body, &pair.x)?;
    let n = f.dim();
    let prod = hf * jg.hessian() - DMatrix::<f64>::identity(n, n);
    Ok(prod.amax() + (pair.u_value - jg.value).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thm13b(n: usize) -> ConvexFunction {
        crate::catalog::get("thm13b", n).unwrap().function
    }

    #[test]
    fn legendre_point_examples() {
        let p = legendre_point(&thm13b(2), &[1.0, 0.0]).unwrap();
        assert!((p.x[0] + 0.25).abs() < 1e-15 && p.x[1] == 0.0);
        assert!((p.u_value + 0.25).abs() < 1e-15);

        let p = legendre_point(&thm13b(3), &[2.0, 1.0, 0.0]).unwrap();
        assert!((p.x[0] + 0.25).abs() < 1e-15);
        assert!((p.x[1] - 0.5).abs() < 1e-15);
        assert_eq!(p.x[2], 0.0);

        let q = ConvexFunction::parse("0.5*(x1^2 + x2^2)", &[], 2).unwrap();
        let p = legendre_point(&q, &[0.3, -1.2]).unwrap();
        assert_eq!(p.x, vec![0.3, -1.2]);
        assert!((p.u_value - 0.5 * (0.09 + 1.44)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_is_self_dual() {
        let q = ConvexFunction::parse("0.5*(x1^2 + x2^2)", &[], 2).unwrap();
        assert_eq!(duality_defect(&q, &q, &[0.7, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_pair_has_small_defect() {
        let dual = crate::catalog::get("dual59", 2).unwrap().function;
        assert!(duality_defect(&thm13b(2), &dual, &[1.0, 0.0]).unwrap() < 1e-10);
    }

    #[test]
    fn unnormalized_partner_is_not_the_conjugate() {
        // the gradient image has x1 < 0, outside the log-parabolic domain
        let lp = crate::catalog::get("thm13a", 2).unwrap().function;
        assert!(matches!(
            duality_defect(&thm13b(2), &lp, &[1.0, 0.0]),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn calabi_predicate() {
        assert!(AffineTransform::identity(3).is_calabi());
        let mut m = DMatrix::identity(3, 3);
        m[(2, 0)] = 1.0;
        let shear = AffineTransform::new(m, DVector::zeros(3)).unwrap();
        assert!(shear.is_calabi());
        let mut m = DMatrix::identity(3, 3);
        m[(0, 2)] = 0.5;
        assert!(!AffineTransform::new(m, DVector::zeros(3)).unwrap().is_calabi());
    }

    #[test]
    fn singular_and_mismatched() {
        assert!(matches!(
            AffineTransform::new(DMatrix::zeros(2, 2), DVector::zeros(2)),
            Err(Error::SingularTransform)
        ));
        assert!(AffineTransform::identity(3).apply(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let a = AffineTransform::diagonal(&[2.0, -1.0, 1.0], &[0.5, 0.0, -0.25]).unwrap();
        let ai = a.inverse().unwrap();
        let id = a.compose(&ai).unwrap();
        let p = [0.3, 0.7, -1.1];
        let q = id.apply(&p).unwrap();
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(ai.is_calabi());
    }
}
