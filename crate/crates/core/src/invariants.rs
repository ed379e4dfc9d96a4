//! The Calabi metric of a graph hypersurface `x_{n+1} = f(x)` and the
//! invariants built from it.
//!
//! With `f_ij` the Hessian and `f^ij` its inverse:
//!
//! * metric `G = f_ij dx^i dx^j`, Christoffel symbols `Γ^k_ij = ½ f^kl f_ijl`;
//! * Fubini–Pick tensor `A_ijk = -½ f_ijk` (fully symmetric);
//! * Tchebychev field `T^l = (1/n) G^kl G^ij A_ijk`, and `|T|² = G_ij T^i T^j`;
//! * relative Pick invariant `J = |A|² / (n(n-1))`;
//! * curvature `R_ijkl = f^mh (A_jkm A_hil - A_ikm A_hjl)`, its Ricci
//!   contraction `R_ik = f^jl R_ijkl`, and the scalar curvature, which
//!   must also equal `n(n-1)J - n²|T|²`.
//!
//! The Weingarten tensor and the induced affine connection of the
//! Calabi normalization vanish identically and are not represented.
//!
//! Dense rank-3 and rank-4 arrays are stored row-major, `[i][j][k]` at
//! `(i*n + j)*n + k`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::jets::{jet4, Jet4};
use crate::tensor::SymTensor;

#[derive(Debug, Clone)]
pub struct MetricData {
    /// Hessian of `f`.
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `det(f_ij)`.
    pub det: f64,
    /// Cofactor matrix `F^ij = det · f^ij`.
    pub cofactor: DMatrix<f64>,
    /// Cholesky factor, `g = l lᵀ`.
    pub chol_l: DMatrix<f64>,
}

impl MetricData {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }

    /// Smallest and largest eigenvalue of `G`.
    pub fn eigen_range(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.g.clone()).eigenvalues;
        (eig.min(), eig.max())
    }
}

pub fn metric_data(jet: &Jet4) -> Result<MetricData> {
    let g = jet.hessian();
    let chol = Cholesky::new(g.clone()).ok_or(Error::NotConvexAtPoint)?;
    let l = chol.l();
    if (0..l.nrows()).any(|i| !(l[(i, i)] > 0.0) || !l[(i, i)].is_finite()) {
        return Err(Error::NotConvexAtPoint);
    }
    let det = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).product::<f64>();
    let inv = chol.inverse();
    let g_inv = (&inv + inv.transpose()) * 0.5;
    let cofactor = &g_inv * det;
    Ok(MetricData {
        g,
        g_inv,
        det,
        cofactor,
        chol_l: l,
    })
}

#[derive(Debug, Clone)]
pub struct ConnectionData {
    n: usize,
    /// `Γ^k_ij` at `[k][i][j]`.
    pub gamma: Vec<f64>,
    /// Fubini–Pick tensor, lower indices.
    pub a: SymTensor,
    /// Tchebychev vector (upper index).
    pub tcheb: Vec<f64>,
    pub tnorm2: f64,
    /// `G^il G^jp G^kq A_ijk A_lpq`.
    pub a_norm2: f64,
    /// Relative Pick invariant; zero when `n = 1`, where it is undefined.
    pub pick_j: f64,
}

impl ConnectionData {
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.gamma[(k * n + i) * n + j]
    }

    /// `A(u, v, w)`.
    pub fn cubic(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let dense = self.a.to_dense();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += dense[(i * n + j) * n + k] * u[i] * v[j] * w[k];
                }
            }
        }
        s
    }
}

fn raise_first(g_inv: &DMatrix<f64>, t: &[f64], n: usize) -> Vec<f64> {
    // out[h][i][l] = g^{hm} t[m][i][l]
    let mut out = vec![0.0; n * n * n];
    for h in 0..n {
        for m in 0..n {
            let g = g_inv[(h, m)];
            if g == 0.0 {
                continue;
            }
            for il in 0..n * n {
                out[h * n * n + il] += g * t[m * n * n + il];
            }
        }
    }
    out
}

pub fn connection_and_pick(jet: &Jet4, m: &MetricData) -> ConnectionData {
    let n = jet.n;
    let gi = &m.g_inv;
    let f3 = jet.d3.to_dense();
    let a = jet.d3.scaled(-0.5);
    let ad = a.to_dense();

    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma[(k * n + i) * n + j] = 0.5 * (0..n).map(|l| gi[(k, l)] * f3[(i * n + j) * n + l]).sum::<f64>();
            }
        }
    }

    // trace over the first two indices, then raise the last
    let trace: Vec<f64> = (0..n)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gi[(i, j)] * ad[(i * n + j) * n + k];
                }
            }
            s
        })
        .collect();
    let tcheb: Vec<f64> = (0..n)
        .map(|l| (0..n).map(|k| gi[(k, l)] * trace[k]).sum::<f64>() / n as f64)
        .collect();
    let tnorm2 = m.inner(&tcheb, &tcheb);

    // raise all three indices; the tensor is symmetric, so raising the
    // "first" index three times in rotation does it
    let mut up = ad.clone();
    for _ in 0..3 {
        let r = raise_first(gi, &up, n);
        // rotate [h][i][l] -> [i][l][h]
        let mut rot = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                for l in 0..n {
                    rot[(i * n + l) * n + h] = r[(h * n + i) * n + l];
                }
            }
        }
        up = rot;
    }
    let a_norm2: f64 = ad.iter().zip(&up).map(|(x, y)| x * y).sum();
    let pick_j = if n >= 2 { a_norm2 / (n * (n - 1)) as f64 } else { 0.0 };

    ConnectionData {
        n,
        gamma,
        a,
        tcheb,
        tnorm2,
        a_norm2,
        pick_j,
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureData {
    n: usize,
    /// `R_ijkl` at `[i][j][k][l]`.
    pub riem: Vec<f64>,
    pub ricci: DMatrix<f64>,
    /// `f^ik R_ik`.
    pub scalar_contracted: f64,
    /// `n(n-1)J - n²|T|²`.
    pub scalar_jt: f64,
}

impl CurvatureData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn riem(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.riem[((i * n + j) * n + k) * n + l]
    }

    /// Largest violation of the algebraic curvature identities
    /// (two antisymmetries, pair symmetry, first Bianchi), divided by
    /// `max |R_ijkl|` when that is nonzero.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let scale = self.riem.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.riem(i, j, k, l);
                        worst = worst
                            .max((r + self.riem(j, i, k, l)).abs())
                            .max((r + self.riem(i, j, l, k)).abs())
                            .max((r - self.riem(k, l, i, j)).abs())
                            .max((r + self.riem(i, k, l, j) + self.riem(i, l, j, k)).abs());
                    }
                }
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

pub fn curvature(jet: &Jet4, m: &MetricData, c: &ConnectionData) -> CurvatureData {
    let n = jet.n;
    let gi = &m.g_inv;
    let ad = c.a.to_dense();
    let ar = raise_first(gi, &ad, n);
    let mut riem = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for h in 0..n {
                        s += ad[(j * n + k) * n + h] * ar[(h * n + i) * n + l]
                            - ad[(i * n + k) * n + h] * ar[(h * n + j) * n + l];
                    }
                    riem[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..n {
                    s += gi[(j, l)] * riem[((i * n + j) * n + k) * n + l];
                }
            }
            ricci[(i, k)] = s;
        }
    }
    let scalar_contracted = gi.component_mul(&ricci).sum();
    let nf = n as f64;
    let scalar_jt = c.a_norm2 - nf * nf * c.tnorm2;
    CurvatureData {
        n,
        riem,
        ricci,
        scalar_contracted,
        scalar_jt,
    }
}

/// Sectional curvature of the plane spanned by `u` and `v`.
pub fn sectional_curvature(cd: &CurvatureData, m: &MetricData, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = cd.n;
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if u.len() != n { u.len() } else { v.len() },
        });
    }
    let gram = m.inner(u, u) * m.inner(v, v) - m.inner(u, v).powi(2);
    if !(gram > 1e-14) {
        return Err(Error::DegeneratePlane);
    }
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    r += cd.riem(i, j, k, l) * u[i] * v[j] * u[k] * v[l];
                }
            }
        }
    }
    Ok(r / gram)
}

/// Everything above, evaluated at one point.
#[derive(Debug, Clone)]
pub struct CalabiInvariants {
    pub jet: Jet4,
    pub metric: MetricData,
    pub connection: ConnectionData,
    pub curvature: CurvatureData,
}

impl CalabiInvariants {
    pub fn from_jet(jet: Jet4) -> Result<Self> {
        let metric = metric_data(&jet)?;
        let connection = connection_and_pick(&jet, &metric);
        let curvature = curvature(&jet, &metric, &connection);
        Ok(CalabiInvariants {
            jet,
            metric,
            connection,
            curvature,
        })
    }

    pub fn at(f: &ConvexFunction, point: &[f64]) -> Result<Self> {
        f.check_interior(point)?;
        Self::from_jet(jet4(&f.body, point)?)
    }

    pub fn n(&self) -> usize {
        self.jet.n
    }

    pub fn sectional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        sectional_curvature(&self.curvature, &self.metric, u, v)
    }

    /// Sectional curvatures of all coordinate planes `(e_i, e_j)`, `i < j`.
    pub fn coordinate_sectionals(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut u = vec![0.0; n];
                let mut v = vec![0.0; n];
                u[i] = 1.0;
                v[j] = 1.0;
                out.push(self.sectional(&u, &v).expect("coordinate planes are nondegenerate"));
            }
        }
        out
    }

    /// G-unit vector along the Tchebychev field, if it is nonzero.
    pub fn tcheb_direction(&self) -> Option<DVector<f64>> {
        let t = &self.connection.tcheb;
        let norm = self.connection.tnorm2.sqrt();
        if norm > 1e-12 {
            Some(DVector::from_iterator(t.len(), t.iter().map(|x| x / norm)))
        } else {
            None
        }
    }
}
