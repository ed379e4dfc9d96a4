//! Geodesics of the Calabi metric and arc length along straight rays, the
//! latter as a numerical probe of how the metric behaves at the boundary.

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::jets::jet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub s: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// `sqrt(G(v, v))`.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub arc_length: f64,
    /// Largest deviation of the speed from its initial value.
    pub speed_drift: f64,
}

impl GeodesicPath {
    pub fn last(&self) -> Option<&GeodesicSample> {
        self.samples.last()
    }

    pub fn to_csv(&self) -> Result<String> {
        let n = self.samples.first().map_or(0, |s| s.position.len());
        let mut header = vec!["s".to_string()];
        header.extend((1..=n).map(|k| format!("x{k}")));
        header.push("speed".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        crate::report::csv_string(
            &header,
            self.samples.iter().map(|smp| {
                let mut row = vec![smp.s];
                row.extend(&smp.position);
                row.push(smp.speed);
                row
            }),
        )
    }

    fn push(&mut self, s: f64, position: Vec<f64>, velocity: Vec<f64>, speed: f64) {
        if let Some(prev) = self.samples.last() {
            self.arc_length += 0.5 * (s - prev.s) * (speed + prev.speed);
            self.speed_drift = self.speed_drift.max((speed - self.samples[0].speed).abs());
        }
        self.samples.push(GeodesicSample {
            s,
            position,
            velocity,
            speed,
        });
    }
}

/// Metric and `-Γ^k_ij v^i v^j` at `x`, or `None` outside the domain.
fn acceleration(f: &ConvexFunction, x: &[f64], v: &[f64]) -> Option<(Vec<f64>, f64)> {
    if !f.domain.contains(x) {
        return None;
    }
    let j = jet(&f.body, x, 3).ok()?;
    let n = x.len();
    let g = j.hessian();
    let chol = Cholesky::new(g.clone())?;
    // f_ijl v^i v^j, then solve with G and halve
    let q = DVector::from_fn(n, |l, _| {
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += j.d3.get(&[i, k, l]) * v[i] * v[k];
            }
        }
        s
    });
    let gamma_vv = chol.solve(&q) * 0.5;
    let vv = DVector::from_column_slice(v);
    let speed2 = (vv.transpose() * &g * &vv)[(0, 0)];
    Some((gamma_vv.iter().map(|x| -x).collect(), speed2.max(0.0).sqrt()))
}

fn axpy(a: &[f64], h: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + h * y).collect()
}

/// Classical Runge–Kutta on `x' = v`, `v' = -Γ(v, v)` up to parameter `s_end`.
/// If a stage leaves the domain the path so far is returned inside
/// [`Error::LeftDomain`].
pub fn geodesic(f: &ConvexFunction, start: &[f64], velocity: &[f64], s_end: f64, step: f64) -> Result<GeodesicPath> {
    f.check_interior(start)?;
    if velocity.len() != start.len() {
        return Err(Error::DimensionMismatch {
            expected: start.len(),
            got: velocity.len(),
        });
    }
    if velocity.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("velocity must be nonzero".into()));
    }
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 0.01], got {step}"
        )));
    }
    if !(s_end >= 0.0 && s_end.is_finite()) {
        return Err(Error::InvalidArgument("s_end must be finite and non-negative".into()));
    }
    let steps = ((s_end / step) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { s_end / steps as f64 } else { step };
    let (mut x, mut v) = (start.to_vec(), velocity.to_vec());
    let (_, speed0) = acceleration(f, &x, &v).ok_or(Error::NotConvexAtPoint)?;
    let mut path = GeodesicPath::default();
    path.push(0.0, x.clone(), v.clone(), speed0);
    for k in 1..=steps {
        let stage = |x: &[f64], v: &[f64]| acceleration(f, x, v).map(|(a, _)| a);
        let left = |path: GeodesicPath| Error::LeftDomain {
            s: k as f64 * h,
            path: Box::new(path),
        };
        let Some(a1) = stage(&x, &v) else {
            return Err(left(path));
        };
        let (x2, v2) = (axpy(&x, 0.5 * h, &v), axpy(&v, 0.5 * h, &a1));
        let Some(a2) = stage(&x2, &v2) else {
            return Err(left(path));
        };
        let (x3, v3) = (axpy(&x, 0.5 * h, &v2), axpy(&v, 0.5 * h, &a2));
        let Some(a3) = stage(&x3, &v3) else {
            return Err(left(path));
        };
        let (x4, v4) = (axpy(&x, h, &v3), axpy(&v, h, &a3));
        let Some(a4) = stage(&x4, &v4) else {
            return Err(left(path));
        };
        let nx: Vec<f64> = (0..x.len())
            .map(|i| x[i] + h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]))
            .collect();
        let nv: Vec<f64> = (0..x.len())
            .map(|i| v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]))
            .collect();
        let Some((_, speed)) = acceleration(f, &nx, &nv) else {
            return Err(left(path));
        };
        x = nx;
        v = nv;
        path.push(k as f64 * h, x.clone(), v.clone(), speed);
    }
    Ok(path)
}

pub const DEFAULT_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthProbe {
    /// Calabi length of the segment.
    pub length: f64,
    /// Euclidean length of the segment.
    pub span: f64,
    pub end_point: Vec<f64>,
    /// The ray reached the `eps`-neighbourhood of the boundary; when false
    /// the segment was cut at the cap instead.
    pub truncated: bool,
}

/// Romberg integration of `g` over `[a, b]` with relative tolerance `tol`,
/// bisecting whenever the tableau fails to settle.
fn romberg(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    const LEVELS: usize = 10;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(LEVELS);
    let mut h = b - a;
    let mut trap = 0.5 * h * (g(a) + g(b));
    rows.push(vec![trap]);
    for k in 1..LEVELS {
        let m = 1usize << (k - 1);
        let mid: f64 = (0..m).map(|i| g(a + (i as f64 + 0.5) * h)).sum();
        trap = 0.5 * trap + 0.5 * h * mid;
        h *= 0.5;
        let mut row = vec![trap];
        let mut p = 1.0;
        for j in 1..=k {
            p *= 4.0;
            let prev = &rows[k - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / (p - 1.0));
        }
        let est = row[k];
        let old = rows[k - 1][k - 1];
        rows.push(row);
        if k >= 3 && (est - old).abs() <= tol * est.abs() {
            return est;
        }
    }
    if depth == 0 {
        return rows[LEVELS - 1][LEVELS - 1];
    }
    let c = 0.5 * (a + b);
    romberg(g, a, c, tol, depth - 1) + romberg(g, c, b, tol, depth - 1)
}

pub fn length_to_boundary(f: &ConvexFunction, start: &[f64], direction: &[f64], eps: f64) -> Result<LengthProbe> {
    length_to_boundary_capped(f, start, direction, eps, DEFAULT_CAP)
}

/// Calabi length of the segment from `start` along `direction` up to the
/// point where the smallest domain inequality drops to `eps`, or up to
/// Euclidean length `cap` if that never happens.
pub fn length_to_boundary_capped(
    f: &ConvexFunction,
    start: &[f64],
    direction: &[f64],
    eps: f64,
    cap: f64,
) -> Result<LengthProbe> {
    f.check_interior(start)?;
    let n = start.len();
    if direction.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: direction.len(),
        });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::InvalidArgument(format!("cap must be positive, got {cap}")));
    }
    let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let d: Vec<f64> = direction.iter().map(|x| x / norm).collect();
    let at = |tau: f64| axpy(start, tau, &d);
    let beyond = |tau: f64| match f.domain.margin(&at(tau)) {
        Some(m) => m <= eps,
        None => true,
    };
    if beyond(0.0) {
        return Err(Error::InvalidArgument(
            "start is already within eps of the boundary".into(),
        ));
    }

    // march out, then bisect for the crossing
    let mut lo = 0.0;
    let mut step = 1e-3;
    let mut hi = None;
    while lo < cap {
        let next = (lo + step).min(cap);
        if beyond(next) {
            hi = Some(next);
            break;
        }
        lo = next;
        step *= 2.0;
    }
    let (span, truncated) = match hi {
        None => (cap, false),
        Some(mut hi) => {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if beyond(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo, true)
        }
    };

    let speed = |tau: f64| -> f64 {
        let x = at(tau);
        match jet(&f.body, &x, 2) {
            Ok(j) => {
                let g = j.hessian();
                let v = DVector::from_column_slice(&d);
                (v.transpose() * g * &v)[(0, 0)].max(0.0).sqrt()
            }
            Err(_) => f64::NAN,
        }
    };
    let g: &dyn Fn(f64) -> f64 = &speed;
    let tol = 1e-8;
    let mut length = 0.0;
    if truncated {
        // geometric pieces toward the boundary, where the integrand steepens
        let mut a = 0.0;
        let mut rest = span;
        while rest > 1e-3 * eps && rest > 1e-14 * span {
            let b = span - 0.5 * rest;
            length += romberg(g, a, b, tol, 20);
            a = b;
            rest *= 0.5;
        }
        length += romberg(g, a, span, tol, 20);
    } else {
        let pieces = 64;
        for k in 0..pieces {
            let a = span * k as f64 / pieces as f64;
            let b = span * (k + 1) as f64 / pieces as f64;
            length += romberg(g, a, b, tol, 20);
        }
    }
    if !length.is_finite() {
        return Err(Error::NotConvexAtPoint);
    }
    Ok(LengthProbe {
        length,
        span,
        end_point: at(span),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn axis_geodesic_of_log_parabolic() {
        let f = catalog::log_parabolic(2);
        let p = geodesic(&f, &[1.0, 0.0], &[2.0, 0.0], 1.0, 1e-3).unwrap();
        let end = p.last().unwrap();
        assert!((end.position[0] - 1f64.exp().powi(2)).abs() < 1e-6);
        assert!(end.position[1].abs() < 1e-12);
        assert!((p.samples[0].speed - 1.0).abs() < 1e-14);
        assert!(p.speed_drift < 1e-8);
        assert!((p.arc_length - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_geodesics_are_lines() {
        let f = catalog::get("quadratic", 2).unwrap().function;
        let p = geodesic(&f, &[0.5, -1.0], &[0.3, 0.4], 2.0, 1e-2).unwrap();
        let end = p.last().unwrap();
        assert!((end.position[0] - 1.1).abs() < 1e-14 && (end.position[1] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn leaving_the_domain_returns_partial_path() {
        let f = catalog::log_parabolic(2);
        match geodesic(&f, &[1.0, 0.0], &[-5.0, 0.0], 5.0, 1e-2) {
            Err(Error::LeftDomain { s, path }) => {
                assert!(s > 0.0);
                assert!(!path.samples.is_empty());
                assert!(path.samples.iter().all(|x| f.domain.contains(&x.position)));
            }
            other => {
                // the exact geodesic x1 = e^{-10 s} never reaches the boundary;
                // if the integrator keeps it inside, the path must stay inside
                let p = other.unwrap();
                assert!(p.samples.iter().all(|x| f.domain.contains(&x.position)));
            }
        }
    }

    #[test]
    fn length_along_axis() {
        let f = catalog::log_parabolic(2);
        let l6 = length_to_boundary(&f, &[1.0, 0.0], &[-1.0, 0.0], 1e-6).unwrap();
        assert!(l6.truncated);
        assert!((l6.length - 0.5 * 1e6f64.ln()).abs() < 1e-4, "{}", l6.length);
        let l8 = length_to_boundary(&f, &[1.0, 0.0], &[-1.0, 0.0], 1e-8).unwrap();
        assert!((l8.length - 0.5 * 1e8f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn quadratic_ray_is_capped() {
        let f = catalog::get("quadratic", 3).unwrap().function;
        let l = length_to_boundary_capped(&f, &[0.0, 1.0, 0.0], &[1.0, 1.0, 0.0], 1e-6, 7.5).unwrap();
        assert!(!l.truncated);
        assert!((l.length - 7.5).abs() < 1e-10);
    }

    #[test]
    fn path_csv_header() {
        let f = catalog::log_parabolic(2);
        let p = geodesic(&f, &[1.0, 0.0], &[2.0, 0.0], 0.02, 1e-2).unwrap();
        let csv = p.to_csv().unwrap();
        assert!(csv.starts_with("s,x1,x2,speed\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
