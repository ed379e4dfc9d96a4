//! `θ(p) = max { A(u, u, u) : G(u, u) = 1 }` and the spectral split of the
//! endomorphisms `A_X = G^{-1} A(X, ·, ·)`.
//!
//! With `G = L Lᵀ`, the substitution `u = L^{-T} v` turns the metric unit
//! sphere into the Euclidean one and `A` into a cubic form `Ã` in an
//! orthonormal frame. The maximum is found by shifted power iteration
//! `v ← normalize(Ã(v, v, ·) + α v)`, which increases `Ã(v, v, v)`
//! monotonically once `α` dominates the form, from a few deterministic
//! starts plus seeded random ones.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::invariants::CalabiInvariants;

pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_SEED: u64 = 42;
const MAX_ITER: usize = 500;
const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EjiriData {
    pub theta: f64,
    /// G-unit maximizer in the original coordinates.
    pub maximizer: Vec<f64>,
    pub lambda1: f64,
    /// Eigenvalues of `A_{E1}` at `E1 = T/|T|`, descending.
    pub spectrum: Vec<f64>,
    /// Eigenvalues of `A_{E1}` at `E1` = the maximizer, descending.
    pub maximizer_spectrum: Vec<f64>,
    /// `T` vanished, so `spectrum` was taken at the maximizer instead.
    pub spectrum_at_maximizer: bool,
}

/// `Ã` as a dense row-major `n³` array, with `M = L^{-T}`.
fn orthonormal_cubic(inv: &CalabiInvariants) -> (Vec<f64>, DMatrix<f64>) {
    let n = inv.n();
    let l = &inv.metric.chol_l;
    let m = l.transpose().try_inverse().expect("Cholesky factor is invertible");
    let mut t = inv.connection.a.to_dense();
    for _ in 0..3 {
        let mut next = vec![0.0; n * n * n];
        for i in 0..n {
            for p in 0..n * n {
                let v = t[i * n * n + p];
                if v == 0.0 {
                    continue;
                }
                for c in 0..n {
                    next[p * n + c] += v * m[(i, c)];
                }
            }
        }
        t = next;
    }
    (t, m)
}

fn contract2(a: &[f64], v: &[f64]) -> Vec<f64> {
    // Ã(v, v, ·)
    let n = v.len();
    (0..n)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += a[(i * n + j) * n + k] * v[i] * v[j];
                }
            }
            s
        })
        .collect()
}

fn cubic(a: &[f64], v: &[f64]) -> f64 {
    contract2(a, v).iter().zip(v).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r > 0.0 {
        v.iter_mut().for_each(|x| *x /= r);
    }
    r
}

fn ascend(a: &[f64], alpha: f64, mut v: Vec<f64>) -> (f64, Vec<f64>) {
    normalize(&mut v);
    for _ in 0..MAX_ITER {
        let g = contract2(a, &v);
        let mut next: Vec<f64> = g.iter().zip(&v).map(|(gi, vi)| gi + alpha * vi).collect();
        if normalize(&mut next) == 0.0 {
            break;
        }
        let step = next.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        v = next;
        if step <= STEP_TOL {
            break;
        }
    }
    (cubic(a, &v), v)
}

/// Eigenvalues of the symmetric matrix `Ã(e, ·, ·)`, descending.
fn shape_spectrum(a: &[f64], e: &[f64]) -> Vec<f64> {
    let n = e.len();
    let s = DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| a[(i * n + j) * n + k] * e[i]).sum::<f64>());
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

pub fn theta_max_at(inv: &CalabiInvariants, restarts: usize, seed: u64) -> Result<EjiriData> {
    if restarts < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 restarts, got {restarts}"
        )));
    }
    if !(inv.connection.a_norm2.sqrt() > 1e-12) {
        return Err(Error::VanishingPick);
    }
    let n = inv.n();
    let (a, m) = orthonormal_cubic(inv);
    let alpha = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lt = inv.metric.chol_l.transpose();

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + n + 1);
    let t_frame: Vec<f64> = (&lt * DVector::from_column_slice(&inv.connection.tcheb))
        .iter()
        .copied()
        .collect();
    if t_frame.iter().any(|x| *x != 0.0) {
        starts.push(t_frame.clone());
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        starts.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r2: f64 = v.iter().map(|x| x * x).sum();
            if r2 > 1e-2 && r2 <= 1.0 {
                starts.push(v);
                break;
            }
        }
    }
    let results: Vec<(f64, Vec<f64>)> = starts.into_par_iter().map(|v| ascend(&a, alpha, v)).collect();
    let (theta, v) = results
        .into_iter()
        .reduce(|best, r| if r.0 > best.0 { r } else { best })
        .expect("at least one start");

    let maximizer: Vec<f64> = (&m * DVector::from_column_slice(&v)).iter().copied().collect();
    let maximizer_spectrum = shape_spectrum(&a, &v);
    let tn = normalize(&mut t_frame.clone());
    let (spectrum, spectrum_at_maximizer) = if tn > 1e-12 {
        let mut e = t_frame;
        normalize(&mut e);
        (shape_spectrum(&a, &e), false)
    } else {
        (maximizer_spectrum.clone(), true)
    };
    Ok(EjiriData {
        theta,
        lambda1: maximizer_spectrum[0],
        maximizer,
        spectrum,
        maximizer_spectrum,
        spectrum_at_maximizer,
    })
}

pub fn theta_max(f: &ConvexFunction, point: &[f64], restarts: usize, seed: u64) -> Result<EjiriData> {
    theta_max_at(&CalabiInvariants::at(f, point)?, restarts, seed)
}

/// Largest value of `Ã` over an angular grid of the Euclidean unit circle
/// (`n = 2`, `resolution` angles) or sphere (`n = 3`, `resolution` polar by
/// `2·resolution` azimuthal steps).
pub fn theta_bruteforce_at(inv: &CalabiInvariants, resolution: usize) -> Result<f64> {
    use std::f64::consts::PI;
    let n = inv.n();
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if resolution < 360 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 360, got {resolution}"
        )));
    }
    let (a, _) = orthonormal_cubic(inv);
    if n == 2 {
        return Ok((0..resolution)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / resolution as f64;
                cubic(&a, &[phi.cos(), phi.sin()])
            })
            .fold(f64::NEG_INFINITY, f64::max));
    }
    let best = (0..=resolution)
        .into_par_iter()
        .map(|i| {
            let th = PI * i as f64 / resolution as f64;
            let (s, c) = th.sin_cos();
            (0..2 * resolution)
                .map(|k| {
                    let phi = PI * k as f64 / resolution as f64;
                    cubic(&a, &[s * phi.cos(), s * phi.sin(), c])
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect::<Vec<_>>();
    Ok(best.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

pub fn theta_bruteforce(f: &ConvexFunction, point: &[f64], resolution: usize) -> Result<f64> {
    let n = f.dim();
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    theta_bruteforce_at(&CalabiInvariants::at(f, point)?, resolution)
}
