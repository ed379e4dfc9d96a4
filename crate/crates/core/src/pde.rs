//! The fourth-order operators built from `w = det(Hess f)^a`:
//!
//! * `f^ij w_ij = 0` (affine maximal type equation),
//! * `F^ij w_ij = -L♯` with `F` the cofactor matrix of the Hessian,
//!
//! plus the closed-form identity satisfied by the log-parabolic family
//! and the exponent window outside which the Calabi metric is complete.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::invariants::{metric_data, MetricData};
use crate::jets::{jet4, Jet4};

/// `D = det(f_ij)` and its first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct DetDerivatives {
    pub det: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Jacobi's formula, applied twice.
pub fn det_derivatives(jet: &Jet4, m: &MetricData) -> DetDerivatives {
    let n = jet.n;
    let gi = &m.g_inv;
    let d = m.det;
    // slices F3_i = (f_kl i)_kl
    let f3: Vec<DMatrix<f64>> = (0..n)
        .map(|i| DMatrix::from_fn(n, n, |k, l| jet.d3.get(&[k, l, i])))
        .collect();
    let logd: Vec<f64> = f3.iter().map(|s| gi.component_mul(s).sum()).collect();
    // P_i = Ginv F3_i
    let p: Vec<DMatrix<f64>> = f3.iter().map(|s| gi * s).collect();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let quartic: f64 = (0..n)
                .map(|k| (0..n).map(|l| gi[(k, l)] * jet.d4.get(&[k, l, i, j])).sum::<f64>())
                .sum();
            let cross = (&p[i] * &p[j]).trace();
            let v = d * (logd[i] * logd[j] - cross + quartic);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    DetDerivatives {
        det: d,
        grad: logd.iter().map(|l| d * l).collect(),
        hess,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeReport {
    pub a: f64,
    pub det: f64,
    pub w: f64,
    pub grad_det: Vec<f64>,
    pub hess_det: Vec<Vec<f64>>,
    /// `f^ij w_ij`.
    pub residual_12: f64,
    /// `F^ij w_ij`.
    pub residual_11: f64,
    pub implied_lsharp: f64,
    /// `residual_12 / (Σ|f^ij| · max_ij s_ij)`, zero when the scale vanishes.
    /// `s_ij` is the sum of the magnitudes of the two terms making up `w_ij`,
    /// so the ratio stays meaningful when they cancel (affine `w`).
    pub normalized_residual: f64,
}

pub fn pde_report_at(jet: &Jet4, m: &MetricData, a: f64) -> Result<PdeReport> {
    if a == 0.0 {
        return Err(Error::ZeroExponent);
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent must be finite, got {a}")));
    }
    let n = jet.n;
    let dd = det_derivatives(jet, m);
    let d = dd.det;
    let w = d.powf(a);
    let c1 = a * (a - 1.0) * d.powf(a - 2.0);
    let c2 = a * d.powf(a - 1.0);
    let wij = DMatrix::from_fn(n, n, |i, j| c1 * dd.grad[i] * dd.grad[j] + c2 * dd.hess[(i, j)]);
    let residual_12 = m.g_inv.component_mul(&wij).sum();
    let residual_11 = m.cofactor.component_mul(&wij).sum();
    let wscale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (c1 * dd.grad[i] * dd.grad[j]).abs() + (c2 * dd.hess[(i, j)]).abs())
        .fold(0.0f64, f64::max);
    let scale = m.g_inv.iter().map(|v| v.abs()).sum::<f64>() * wscale;
    let normalized_residual = if scale > 0.0 { residual_12 / scale } else { 0.0 };
    Ok(PdeReport {
        a,
        det: d,
        w,
        grad_det: dd.grad,
        hess_det: (0..n).map(|i| (0..n).map(|j| dd.hess[(i, j)]).collect()).collect(),
        residual_12,
        residual_11,
        implied_lsharp: -residual_11,
        normalized_residual,
    })
}

pub fn pde_report(f: &ConvexFunction, point: &[f64], a: f64) -> Result<PdeReport> {
    if a == 0.0 {
        return Err(Error::ZeroExponent);
    }
    f.check_interior(point)?;
    let jet = jet4(&f.body, point)?;
    let m = metric_data(&jet)?;
    pde_report_at(&jet, &m, a)
}

/// Reports for several exponents sharing one jet.
pub fn pde_reports(f: &ConvexFunction, point: &[f64], exponents: &[f64]) -> Result<Vec<PdeReport>> {
    f.check_interior(point)?;
    let jet = jet4(&f.body, point)?;
    let m = metric_data(&jet)?;
    exponents.iter().map(|&a| pde_report_at(&jet, &m, a)).collect()
}

/// `4(n+1)[(n+1)a² + na]`.
pub fn identity_coefficient(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    4.0 * (nf + 1.0) * ((nf + 1.0) * a * a + nf * a)
}

/// Whether the coefficient vanishes at `a = p/q`, decided in integers.
pub fn identity_coefficient_vanishes(n: usize, p: i64, q: i64) -> bool {
    assert!(q != 0, "zero denominator");
    let (n, p, q) = (n as i128, p as i128, q as i128);
    // q² · ((n+1)a² + na) = p((n+1)p + nq)
    p * ((n + 1) * p + n * q) == 0
}

/// Left and right sides of
/// `f^ij (D^a)_ij = 4(n+1)[(n+1)a² + na] D^a`
/// for `f = -¼ ln(x1 - ½Σ_{k≥2} x_k²)`, where `D = 1/(4^n g^{n+1})`.
pub fn operator_identity(n: usize, a: f64, point: &[f64]) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    let f = crate::catalog::log_parabolic(n);
    let rep = pde_report(&f, point, a)?;
    let g = point[0] - 0.5 * point[1..].iter().map(|x| x * x).sum::<f64>();
    let d = 1.0 / (4f64.powi(n as i32) * g.powi(n as i32 + 1));
    Ok((rep.residual_12, identity_coefficient(n, a) * d.powf(a)))
}

fn window_radius(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    let nf = n as f64;
    Ok((nf - 1.0) / (4.0 * nf.sqrt()))
}

/// `[-½ - (n-1)/(4√n), -½ + (n-1)/(4√n)]`.
pub fn exponent_window(n: usize) -> Result<(f64, f64)> {
    let r = window_radius(n)?;
    Ok((-0.5 - r, -0.5 + r))
}

/// Closed-interval membership.
pub fn in_window(a: f64, n: usize) -> Result<bool> {
    let (lo, hi) = exponent_window(n)?;
    Ok(lo <= a && a <= hi)
}

/// Exact membership of `a = p/q`:
/// `|2p + q| · 4√n ≤ 2|q|(n-1)`, squared.
pub fn in_window_rational(p: i64, q: i64, n: usize) -> Result<bool> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("zero denominator".into()));
    }
    let (p, q, n) = (p as i128, q as i128, n as i128);
    let s = 2 * p + q;
    Ok(4 * n * s * s <= q * q * (n - 1) * (n - 1))
}

/// Grid exponents whose residual stays within `tol` at every point.
pub fn solving_exponents(f: &ConvexFunction, points: &[Vec<f64>], grid: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut reports = Vec::with_capacity(points.len());
    for p in points {
        reports.push(pde_reports(f, p, grid)?);
    }
    Ok(grid
        .iter()
        .enumerate()
        .filter(|&(k, _)| reports.iter().all(|r| r[k].residual_12.abs() <= tol))
        .map(|(_, &a)| a)
        .collect())
}

/// `{-2.00, -1.99, …, 1.00}` without zero.
pub fn default_exponent_grid() -> Vec<f64> {
    (-200..=100).filter(|&k| k != 0).map(|k| k as f64 / 100.0).collect()
}
