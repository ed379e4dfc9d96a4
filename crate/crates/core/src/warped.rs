//! Warped-product structure of the classified hypersurfaces.
//!
//! The frame function `η` obeys the Riccati equation `η' = 1 - η²` and the
//! warping function `ρ = exp ∫η` keeps `c̄ = ρ²(η² - 1)` constant. Each sign
//! of `c̄` gives an explicit immersion in coordinates `(t, u2, …, un)`, which
//! after a vertical-preserving affine normalization lies on a catalog graph
//! and induces the metric `dt² + ρ(t)² G1` with `G1` a space form metric.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::expr::{ConvexFunction, Expression};
use crate::jets::{jet, jet4};
use crate::legendre::AffineTransform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaSample {
    pub t: f64,
    pub eta: f64,
    pub rho: f64,
    pub cbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTrajectory {
    pub samples: Vec<EtaSample>,
    pub step: f64,
    pub method: String,
}

impl EtaTrajectory {
    pub fn last(&self) -> &EtaSample {
        self.samples.last().expect("trajectories are nonempty")
    }

    /// `max |c̄(t) - c̄(0)|`.
    pub fn cbar_drift(&self) -> f64 {
        let c0 = self.samples[0].cbar;
        self.samples.iter().fold(0.0, |m, s| m.max((s.cbar - c0).abs()))
    }

    pub fn to_csv(&self) -> Result<String> {
        crate::report::csv_string(
            &["t", "eta", "rho", "cbar"],
            self.samples.iter().map(|s| vec![s.t, s.eta, s.rho, s.cbar]),
        )
    }
}

const BLOW_UP: f64 = 1e6;

fn rhs(eta: f64, rho: f64) -> (f64, f64) {
    (1.0 - eta * eta, eta * rho)
}

/// Classical Runge–Kutta on `(η, ρ)` from `η(0) = eta0`, `ρ(0) = 1`.
/// The step is shrunk slightly so that `t_end` is hit exactly.
pub fn integrate_eta(eta0: f64, t_end: f64, step: f64) -> Result<EtaTrajectory> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 0.01], got {step}"
        )));
    }
    if !(t_end >= 0.0 && t_end.is_finite() && eta0.is_finite()) {
        return Err(Error::InvalidArgument("need finite eta0 and t_end >= 0".into()));
    }
    let steps = ((t_end / step) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { step };
    let (mut eta, mut rho) = (eta0, 1.0f64);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(EtaSample {
        t: 0.0,
        eta,
        rho,
        cbar: rho * rho * (eta * eta - 1.0),
    });
    for k in 1..=steps {
        let (k1e, k1r) = rhs(eta, rho);
        let (k2e, k2r) = rhs(eta + 0.5 * h * k1e, rho + 0.5 * h * k1r);
        let (k3e, k3r) = rhs(eta + 0.5 * h * k2e, rho + 0.5 * h * k2r);
        let (k4e, k4r) = rhs(eta + h * k3e, rho + h * k3r);
        eta += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        rho += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        let t = k as f64 * h;
        if !(eta.abs() <= BLOW_UP) || !rho.is_finite() {
            return Err(Error::BlowUp { t });
        }
        samples.push(EtaSample {
            t,
            eta,
            rho,
            cbar: rho * rho * (eta * eta - 1.0),
        });
    }
    Ok(EtaTrajectory {
        samples,
        step: h,
        method: "rk4".into(),
    })
}

/// Exact solution: `tanh`, `coth` or constant branch through `η(0) = eta0`.
/// `None` past the pole of a `coth` branch.
pub fn eta_exact(eta0: f64, t: f64) -> Option<f64> {
    if eta0.abs() < 1.0 {
        Some((t + eta0.atanh()).tanh())
    } else if eta0.abs() == 1.0 {
        Some(eta0)
    } else {
        let s = t + 0.5 * ((eta0 + 1.0) / (eta0 - 1.0)).ln();
        if eta0 < -1.0 && s >= 0.0 {
            None
        } else {
            Some(1.0 / s.tanh())
        }
    }
}

/// `|η_h(t) - η(t)| / |η_{h/2}(t) - η(t)|`; close to 16 for a fourth-order method.
pub fn rk4_convergence_factor(eta0: f64, t_end: f64, step: f64) -> Result<f64> {
    let exact = eta_exact(eta0, t_end).ok_or(Error::BlowUp { t: t_end })?;
    let coarse = integrate_eta(eta0, t_end, step)?.last().eta;
    let fine = integrate_eta(eta0, t_end, step / 2.0)?.last().eta;
    Ok((coarse - exact).abs() / (fine - exact).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// `c̄ > 0`, `ρ = sinh t`.
    Sphere,
    /// `c̄ = 0`, `η = -1`, `ρ = e^{-t}`.
    FlatMinus,
    /// `c̄ = 0`, `η = 1`, `ρ = e^t`.
    FlatPlus,
    /// `c̄ < 0`, `ρ = cosh t`.
    Hyperbolic,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Sphere, CaseId::FlatMinus, CaseId::FlatPlus, CaseId::Hyperbolic];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Sphere => "sphere",
            CaseId::FlatMinus => "flat_minus",
            CaseId::FlatPlus => "flat_plus",
            CaseId::Hyperbolic => "hyperbolic",
        }
    }

    pub fn from_name(s: &str) -> Option<CaseId> {
        CaseId::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Catalog entry whose graph contains the normalized image.
    pub fn target(self) -> &'static str {
        match self {
            CaseId::Sphere => "sphere_case",
            CaseId::FlatMinus => "thm13a",
            CaseId::FlatPlus => "thm13b",
            CaseId::Hyperbolic => "hyperbolic_case",
        }
    }

    /// Warping function and its derivative.
    pub fn rho(self, t: f64) -> (f64, f64) {
        match self {
            CaseId::Sphere => (t.sinh(), t.cosh()),
            CaseId::FlatMinus => ((-t).exp(), -(-t).exp()),
            CaseId::FlatPlus => (t.exp(), t.exp()),
            CaseId::Hyperbolic => (t.cosh(), t.sinh()),
        }
    }

    pub fn cbar(self) -> f64 {
        match self {
            CaseId::Sphere => 1.0,
            CaseId::FlatMinus | CaseId::FlatPlus => 0.0,
            CaseId::Hyperbolic => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCase {
    pub id: CaseId,
    pub n: usize,
    /// Components `x1 … x_{n+1}` in the variables `t, u2, …, un`.
    pub immersion: Vec<Expression>,
    pub target: ConvexFunction,
    pub normalizer: AffineTransform,
}

fn sin_chain(from: usize, to: usize) -> String {
    (from..=to).map(|i| format!("*sin(u{i})")).collect()
}

fn immersion_sources(id: CaseId, n: usize) -> Vec<String> {
    let squares = (2..=n).map(|k| format!("u{k}^2")).collect::<Vec<_>>().join(" + ");
    match id {
        CaseId::Sphere => {
            let r = "(0.5*exp(2*t) - 0.5)";
            let mut v = vec![format!("{r}*cos(u2)")];
            for k in 2..n {
                v.push(format!("{r}{}*cos(u{})", sin_chain(2, k), k + 1));
            }
            v.push(format!("{r}{}", sin_chain(2, n)));
            v.push("0.25*exp(2*t) - t/2".into());
            v
        }
        CaseId::FlatMinus => {
            let mut v = vec![format!("2*({squares}) + exp(2*t)")];
            v.extend((2..=n).map(|k| format!("u{k}")));
            v.push("-0.5*t".into());
            v
        }
        CaseId::FlatPlus => {
            let mut v = vec!["exp(2*t)".to_string()];
            v.extend((2..=n).map(|k| format!("exp(2*t)*u{k}")));
            v.push(format!("0.5*exp(2*t)*({squares}) - t/2"));
            v
        }
        CaseId::Hyperbolic => {
            let r = "(0.5*exp(2*t) + 0.5)";
            let mut v = vec![format!("{r}*cosh(u2)")];
            if n == 2 {
                v.push(format!("{r}*sinh(u2)"));
            } else {
                for k in 2..n {
                    v.push(format!("{r}*sinh(u2){}*cos(u{})", sin_chain(3, k), k + 1));
                }
                v.push(format!("{r}*sinh(u2){}", sin_chain(3, n)));
            }
            v.push("-0.25*exp(2*t) - t/2".into());
            v
        }
    }
}

fn normalizer(id: CaseId, n: usize) -> AffineTransform {
    let mut scale = vec![1.0; n + 1];
    let mut b = vec![0.0; n + 1];
    match id {
        CaseId::Sphere | CaseId::Hyperbolic => {
            scale[..n].fill(2.0);
            b[n] = -0.25;
        }
        CaseId::FlatMinus => scale[1..n].fill(2.0),
        CaseId::FlatPlus => {}
    }
    AffineTransform::diagonal(&scale, &b).expect("nonsingular")
}

impl ParamCase {
    pub fn new(id: CaseId, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadDimension(n));
        }
        let immersion = immersion_sources(id, n)
            .iter()
            .map(|s| Expression::parse(s, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamCase {
            id,
            n,
            immersion,
            target: catalog::get(id.target(), n)?.function,
            normalizer: normalizer(id, n),
        })
    }

    /// Parameters where the coordinates are regular.
    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        let n = self.n;
        if params.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::ParameterDomain("parameters must be finite".into()));
        }
        let angle = |k: usize| {
            let u = params[k - 1];
            if u > 0.0 && u < std::f64::consts::PI {
                Ok(())
            } else {
                Err(Error::ParameterDomain(format!("need 0 < u{k} < π")))
            }
        };
        match self.id {
            CaseId::Sphere => {
                if !(params[0] > 0.0) {
                    return Err(Error::ParameterDomain("need t > 0".into()));
                }
                (2..n).try_for_each(angle)
            }
            CaseId::Hyperbolic => {
                if n > 2 && !(params[1] > 0.0) {
                    return Err(Error::ParameterDomain("need u2 > 0".into()));
                }
                (3..n).try_for_each(angle)
            }
            CaseId::FlatMinus | CaseId::FlatPlus => Ok(()),
        }
    }

    /// A regular parameter point away from coordinate singularities.
    pub fn sample_params<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        use std::f64::consts::PI;
        let n = self.n;
        let mut p = Vec::with_capacity(n);
        match self.id {
            CaseId::Sphere => {
                p.push(rng.random_range(0.2..1.5));
                for _ in 2..n {
                    p.push(rng.random_range(0.3..PI - 0.3));
                }
                p.push(rng.random_range(-PI..PI));
            }
            CaseId::Hyperbolic => {
                p.push(rng.random_range(-1.0..1.0));
                if n == 2 {
                    p.push(rng.random_range(-1.0..1.0));
                } else {
                    p.push(rng.random_range(0.2..1.2));
                    for _ in 3..n {
                        p.push(rng.random_range(0.3..PI - 0.3));
                    }
                    p.push(rng.random_range(-PI..PI));
                }
            }
            CaseId::FlatMinus | CaseId::FlatPlus => {
                p.push(rng.random_range(-1.0..1.0));
                p.extend((1..n).map(|_| rng.random_range(-1.0..1.0)));
            }
        }
        p
    }

    pub fn immersion_point(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.immersion.iter().map(|e| e.evaluate(params)).collect()
    }

    pub fn normalized_point(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.normalizer.apply(&self.immersion_point(params)?)
    }

    /// `|x̃_{n+1} - f(x̃_1, …, x̃_n)|` after normalization.
    pub fn graph_residual(&self, params: &[f64]) -> Result<f64> {
        let p = self.normalized_point(params)?;
        let v = self.target.value(&p[..self.n])?;
        Ok((p[self.n] - v).abs())
    }

    /// Jacobian of the normalized base coordinates with respect to `(t, u)`.
    pub fn jacobian(&self, params: &[f64]) -> Result<DMatrix<f64>> {
        self.check_params(params)?;
        let n = self.n;
        let mut full = DMatrix::zeros(n + 1, n);
        for (r, e) in self.immersion.iter().enumerate() {
            let j = jet(e, params, 1)?;
            for c in 0..n {
                full[(r, c)] = j.d1[c];
            }
        }
        Ok(self.normalizer.matrix().rows(0, n) * full)
    }

    /// `Jᵀ Hess f(x̃) J`.
    pub fn pullback_metric(&self, params: &[f64]) -> Result<DMatrix<f64>> {
        let x = self.normalized_point(params)?;
        self.target.check_interior(&x[..self.n])?;
        let h = jet(&self.target.body, &x[..self.n], 2)?.hessian();
        let j = self.jacobian(params)?;
        Ok(j.transpose() * h * j)
    }

    /// The cubic form `A = -½ f_ijk` pulled back to `(t, u)` and raised
    /// with the pulled-back metric; `[c][a][b] = Ã^c_ab`.
    pub fn pullback_cubic(&self, params: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let x = self.normalized_point(params)?;
        self.target.check_interior(&x[..n])?;
        let jt = jet4(&self.target.body, &x[..n])?;
        let a = jt.d3.scaled(-0.5).to_dense();
        let j = self.jacobian(params)?;
        let g = j.transpose() * jt.hessian() * &j;
        let gi = g.try_inverse().ok_or(Error::NotConvexAtPoint)?;
        // lower pullback, one leg at a time
        let mut low = a;
        for _ in 0..3 {
            let mut next = vec![0.0; n * n * n];
            // contract first index with J, move the new index last
            for i in 0..n {
                for p in 0..n * n {
                    let v = low[i * n * n + p];
                    if v == 0.0 {
                        continue;
                    }
                    for c in 0..n {
                        next[p * n + c] += v * j[(i, c)];
                    }
                }
            }
            low = next;
        }
        let mut out = vec![0.0; n * n * n];
        for c in 0..n {
            for a_ in 0..n {
                for b in 0..n {
                    out[(c * n + a_) * n + b] = (0..n).map(|d| gi[(c, d)] * low[(a_ * n + b) * n + d]).sum();
                }
            }
        }
        Ok(out)
    }
}

/// Coefficients of the fiber metric: `G = dt² + ρ² Σ φ_k du_k²`.
fn fiber_factors(id: CaseId, params: &[f64]) -> Vec<f64> {
    let n = params.len();
    let mut phi = vec![1.0; n];
    match id {
        CaseId::Sphere => {
            for k in 3..=n {
                phi[k - 1] = phi[k - 2] * params[k - 2].sin().powi(2);
            }
        }
        CaseId::Hyperbolic => {
            if n >= 3 {
                phi[2] = params[1].sinh().powi(2);
            }
            for k in 4..=n {
                phi[k - 1] = phi[k - 2] * params[k - 2].sin().powi(2);
            }
        }
        CaseId::FlatMinus | CaseId::FlatPlus => {}
    }
    phi[0] = 0.0;
    phi
}

/// The warped metric in closed form.
pub fn closed_form_metric(id: CaseId, params: &[f64]) -> DMatrix<f64> {
    let n = params.len();
    let (rho, _) = id.rho(params[0]);
    let phi = fiber_factors(id, params);
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i == 0 {
            1.0
        } else {
            rho * rho * phi[i]
        }
    })
}

/// Levi-Civita symbols `[k][i][j] = Γ^k_ij` of a metric field, by central
/// differences of step `h`.
pub fn christoffel_numeric(metric: impl Fn(&[f64]) -> DMatrix<f64>, params: &[f64], h: f64) -> Vec<f64> {
    let n = params.len();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let mut p = params.to_vec();
            p[l] += h;
            let plus = metric(&p);
            p[l] -= 2.0 * h;
            (plus - metric(&p)) / (2.0 * h)
        })
        .collect();
    let gi = metric(params).try_inverse().expect("metric is invertible");
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(k * n + i) * n + j] = 0.5
                    * (0..n)
                        .map(|l| gi[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// The connection of the warped metric written out entry by entry, in the
/// form `∇_X Y = …` listed for each case.
pub fn stated_christoffel(id: CaseId, params: &[f64]) -> Vec<f64> {
    let n = params.len();
    let t = params[0];
    let (rho, drho) = id.rho(t);
    let mut g = vec![0.0; n * n * n];
    let mut set = |k: usize, i: usize, j: usize, v: f64| {
        g[(k * n + i) * n + j] = v;
        g[(k * n + j) * n + i] = v;
    };
    // ∇_t ∂u_k = (ρ'/ρ) ∂u_k
    for k in 1..n {
        set(k, 0, k, drho / rho);
    }
    let phi = fiber_factors(id, params);
    match id {
        CaseId::FlatMinus | CaseId::FlatPlus => {
            for k in 1..n {
                set(0, k, k, -drho * rho);
            }
        }
        CaseId::Sphere => {
            // ∇_{u_k} ∂u_j = cot u_k ∂u_j, k < j
            for k in 1..n {
                for j in k + 1..n {
                    set(j, k, j, 1.0 / params[k].tan());
                }
            }
            // ∇_{u_k} ∂u_k = -sinh t cosh t φ_k ∂t - Σ_j ½ sin 2u_j Π_{i>j} sin² u_i ∂u_j
            for k in 1..n {
                set(0, k, k, -drho * rho * phi[k]);
                for j in 1..k {
                    let tail: f64 = (j + 1..k).map(|i| params[i].sin().powi(2)).product();
                    set(j, k, k, -0.5 * (2.0 * params[j]).sin() * tail);
                }
            }
        }
        CaseId::Hyperbolic => {
            for j in 2..n {
                set(j, 1, j, 1.0 / params[1].tanh());
            }
            for k in 2..n {
                for j in k + 1..n {
                    set(j, k, j, 1.0 / params[k].tan());
                }
            }
            set(0, 1, 1, -drho * rho);
            for k in 2..n {
                let chain: f64 = (2..k).map(|i| params[i].sin().powi(2)).product();
                set(0, k, k, -drho * rho * phi[k]);
                set(1, k, k, -chain * 0.5 * (2.0 * params[1]).sinh());
                for j in 2..k {
                    let tail: f64 = (j + 1..k).map(|i| params[i].sin().powi(2)).product();
                    set(j, k, k, -0.5 * (2.0 * params[j]).sin() * tail);
                }
            }
        }
    }
    g
}

/// `A_{∂t}∂t = 2∂t`, `A_{∂t}∂u_k = ∂u_k`, `A_{∂u_k}∂u_j = δ_kj G(∂u_k, ∂u_k) ∂t`,
/// as `[c][a][b] = A^c_ab`.
pub fn stated_cubic(id: CaseId, params: &[f64]) -> Vec<f64> {
    let n = params.len();
    let g = closed_form_metric(id, params);
    let mut out = vec![0.0; n * n * n];
    out[0] = 2.0;
    for k in 1..n {
        out[(k * n) * n + k] = 1.0;
        out[(k * n + k) * n] = 1.0;
        out[k * n + k] = g[(k, k)];
    }
    out
}
