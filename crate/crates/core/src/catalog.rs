//! Built-in convex functions with their domains, reference values and
//! well-scaled interior samplers.
//!
//! | name              | f                                                      | domain                    |
//! |-------------------|--------------------------------------------------------|---------------------------|
//! | `quadratic`       | `½ Σ x_k²`                                             | `R^n`                     |
//! | `thm13a`          | `-¼ ln(x1 - ½ Σ_{k≥2} x_k²)`                           | `x1 > ½ Σ_{k≥2} x_k²`     |
//! | `thm13b`          | `-¼ ln x1 + Σ_{k≥2} x_k² / (2 x1)`                     | `x1 > 0`                  |
//! | `sphere_case`     | `¼ r - ¼ ln(r + 1)`, `r = |x|`                         | `|x| > 0`                 |
//! | `hyperbolic_case` | `-¼ s - ¼ ln(s - 1)`, `s² = x1² - Σ_{k≥2} x_k²`         | `s² > 1`                  |
//! | `dual59`          | `-¼ [ln(-x1 - ½ Σ_{k≥2} x_k²) + ln 4 + 1]`             | `-x1 > ½ Σ_{k≥2} x_k²`    |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ConvexFunction;
use crate::legendre::AffineTransform;
use crate::warped::CaseId;

pub const NAMES: [&str; 6] = [
    "quadratic",
    "thm13a",
    "thm13b",
    "sphere_case",
    "hyperbolic_case",
    "dual59",
];

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Stated in closed form in the source mathematics.
    Stated,
    /// Worked out from stated facts (hand computation or an equivalence).
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub quantity: String,
    pub value: f64,
    pub provenance: Provenance,
    pub origin: String,
}

fn expected(quantity: &str, value: f64, provenance: Provenance, origin: &str) -> Expected {
    Expected {
        quantity: quantity.to_string(),
        value,
        provenance,
        origin: origin.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub label: &'static str,
    pub n: usize,
    pub function: ConvexFunction,
    pub expected: Vec<Expected>,
    /// The affine maximal type equation holds for no exponent.
    pub solves_for_no_exponent: bool,
    /// Parametrization whose image lies on this graph.
    pub param_case: Option<CaseId>,
    /// Vertical-preserving affine map carrying this graph onto another entry.
    pub equivalence: Option<(AffineTransform, &'static str)>,
}

impl CatalogEntry {
    pub fn expected(&self, quantity: &str) -> Option<f64> {
        self.expected.iter().find(|e| e.quantity == quantity).map(|e| e.value)
    }

    /// One interior point from a bounded, well-conditioned region of the
    /// domain.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n;
        loop {
            let p = match self.name {
                "quadratic" => (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                "thm13a" => {
                    let g = rng.random_range(1.0..3.0);
                    let rest: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mut p = vec![g + 0.5 * rest.iter().map(|x| x * x).sum::<f64>()];
                    p.extend(rest);
                    p
                }
                "thm13b" => {
                    let mut p = vec![rng.random_range(1.0..3.0)];
                    p.extend((1..n).map(|_| rng.random_range(-1.0..1.0)));
                    p
                }
                "sphere_case" => {
                    let r = rng.random_range(1.0..3.0);
                    unit_vector(rng, n).into_iter().map(|w| r * w).collect()
                }
                "hyperbolic_case" => {
                    let s: f64 = rng.random_range(2.0..4.0);
                    let beta: f64 = rng.random_range(-0.8..0.8);
                    let mut p = vec![s * beta.cosh()];
                    let w = if n > 2 { unit_vector(rng, n - 1) } else { vec![1.0] };
                    p.extend(w.into_iter().map(|w| s * beta.sinh() * w));
                    p
                }
                "dual59" => {
                    let m = rng.random_range(1.0..3.0);
                    let rest: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mut p = vec![-m - 0.5 * rest.iter().map(|x| x * x).sum::<f64>()];
                    p.extend(rest);
                    p
                }
                other => unreachable!("no sampler for {other}"),
            };
            if matches!(self.function.domain.margin(&p), Some(m) if m >= 1e-3) {
                return p;
            }
        }
    }

    /// `count` points from a fixed seed.
    pub fn samples(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

fn sum_squares(from: usize, n: usize) -> String {
    (from..=n).map(|k| format!("x{k}^2")).collect::<Vec<_>>().join(" + ")
}

fn quadratic_fn(n: usize) -> ConvexFunction {
    named(&format!("0.5*({})", sum_squares(1, n)), &[], n, "quadratic")
}

fn named(body: &str, domain: &[&str], n: usize, name: &str) -> ConvexFunction {
    let mut f = ConvexFunction::parse(body, domain, n).expect("catalog expressions parse");
    f.name = Some(name.to_string());
    f
}

/// `-¼ ln(x1 - ½ Σ_{k≥2} x_k²)` on its parabolic domain.
pub fn log_parabolic(n: usize) -> ConvexFunction {
    assert!(n >= 2);
    let g = format!("x1 - ({})/2", sum_squares(2, n));
    named(&format!("-0.25*ln({g})"), &[&g], n, "thm13a")
}

fn log_perspective(n: usize) -> ConvexFunction {
    named(
        &format!("-0.25*ln(x1) + ({})/(2*x1)", sum_squares(2, n)),
        &["x1"],
        n,
        "thm13b",
    )
}

fn radial(n: usize) -> ConvexFunction {
    let r = format!("sqrt({})", sum_squares(1, n));
    named(
        &format!("0.25*{r} - 0.25*ln({r} + 1)"),
        &[&sum_squares(1, n)],
        n,
        "sphere_case",
    )
}

fn lorentzian(n: usize) -> ConvexFunction {
    let q = format!("x1^2 - ({})", sum_squares(2, n));
    let s = format!("sqrt({q})");
    named(
        &format!("-0.25*{s} - 0.25*ln({s} - 1)"),
        &[&format!("{q} - 1")],
        n,
        "hyperbolic_case",
    )
}

fn dual_log_parabolic(n: usize) -> ConvexFunction {
    let m = format!("-x1 - ({})/2", sum_squares(2, n));
    named(&format!("-0.25*(ln({m}) + ln(4) + 1)"), &[&m], n, "dual59")
}

/// `(x, x_{n+1}) ↦ (-x1, x2, …, x_n, x_{n+1} + ¼(ln 4 + 1))`, carrying
/// the `dual59` graph onto the `thm13a` graph.
pub fn dual_to_log_parabolic(n: usize) -> AffineTransform {
    let mut scale = vec![1.0; n + 1];
    scale[0] = -1.0;
    let mut b = vec![0.0; n + 1];
    b[n] = 0.25 * (4f64.ln() + 1.0);
    AffineTransform::diagonal(&scale, &b).expect("nonsingular")
}

/// Names with descriptive labels, for listing.
pub fn list() -> Vec<(&'static str, &'static str)> {
    NAMES.iter().map(|&name| (name, label(name))).collect()
}

fn label(name: &str) -> &'static str {
    match name {
        "quadratic" => "flat quadratic, the trivial solution",
        "thm13a" => "log-parabolic complete solution, a = -n/(n+1); flat fiber, η = -1 branch",
        "thm13b" => "log-perspective complete solution, a = -1/(n+1); flat fiber, η = 1 branch",
        "sphere_case" => "radial representative with spherical fibers (c̄ > 0)",
        "hyperbolic_case" => "Lorentzian representative with hyperbolic fibers (c̄ < 0)",
        "dual59" => "closed-form Legendre conjugate of the log-perspective solution",
        _ => "",
    }
}

pub fn get(name: &str, n: usize) -> Result<CatalogEntry> {
    if !NAMES.contains(&name) {
        return Err(Error::UnknownCatalogEntry(name.to_string()));
    }
    if n == 0 || (name != "quadratic" && n < 2) {
        return Err(Error::BadDimension(n));
    }
    use Provenance::{Derived, Stated};
    let nf = n as f64;
    let tnorm2 = (nf + 1.0).powi(2) / (nf * nf);
    let pick = (3.0 * nf + 1.0) / (nf * (nf - 1.0));
    let classified = |tn: Provenance| {
        vec![
            expected("theta", 2.0, Stated, "θ ≡ 2 for the classified hypersurfaces"),
            expected("sectional", -1.0, Stated, "constant sectional curvature -1"),
            expected("tnorm2", tnorm2, tn, "|T|² = (n+1)²/n²"),
            expected("pick_j", pick, tn, "J = (3n+1)/(n(n-1))"),
        ]
    };
    let mut entry = CatalogEntry {
        name: NAMES.iter().find(|&&k| k == name).copied().unwrap(),
        label: label(name),
        n,
        function: quadratic_fn(n),
        expected: Vec::new(),
        solves_for_no_exponent: false,
        param_case: None,
        equivalence: None,
    };
    match name {
        "quadratic" => {
            entry.expected = vec![
                expected("tnorm2", 0.0, Derived, "A ≡ 0"),
                expected("pick_j", 0.0, Derived, "A ≡ 0"),
                expected("sectional", 0.0, Derived, "flat metric"),
                expected("lsharp_at_minus_one", 0.0, Derived, "det Hess ≡ 1"),
            ];
        }
        "thm13a" => {
            entry.function = log_parabolic(n);
            entry.expected = classified(Stated);
            entry
                .expected
                .push(expected("solving_exponent", -nf / (nf + 1.0), Stated, "a = -n/(n+1)"));
            entry.expected.push(expected(
                "lsharp_at_minus_one",
                -4.0 * (nf + 1.0),
                Stated,
                "Abreu scalar curvature -4(n+1)",
            ));
            entry.param_case = Some(CaseId::FlatMinus);
        }
        "thm13b" => {
            entry.function = log_perspective(n);
            entry.expected = classified(Stated);
            entry
                .expected
                .push(expected("solving_exponent", -1.0 / (nf + 1.0), Stated, "a = -1/(n+1)"));
            entry.expected.push(expected(
                "lsharp_at_minus_one",
                -4.0 * nf * (nf + 1.0),
                Stated,
                "Abreu scalar curvature -4n(n+1)",
            ));
            entry.param_case = Some(CaseId::FlatPlus);
        }
        "sphere_case" => {
            entry.function = radial(n);
            entry.expected = classified(Derived);
            entry.param_case = Some(CaseId::Sphere);
        }
        "hyperbolic_case" => {
            entry.function = lorentzian(n);
            entry.expected = classified(Derived);
            entry.solves_for_no_exponent = true;
            entry.param_case = Some(CaseId::Hyperbolic);
        }
        "dual59" => {
            entry.function = dual_log_parabolic(n);
            entry.expected = classified(Derived);
            entry.expected.push(expected(
                "solving_exponent",
                -nf / (nf + 1.0),
                Derived,
                "affine equivalent to the log-parabolic solution",
            ));
            entry.expected.push(expected(
                "lsharp_at_minus_one",
                -4.0 * (nf + 1.0),
                Derived,
                "equivalence map has unit determinant in absolute value",
            ));
            entry.equivalence = Some((dual_to_log_parabolic(n), "thm13a"));
        }
        _ => unreachable!(),
    }
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_and_bad_dimension() {
        assert!(matches!(get("nope", 2), Err(Error::UnknownCatalogEntry(_))));
        assert!(matches!(get("thm13a", 1), Err(Error::BadDimension(1))));
        assert!(get("quadratic", 1).is_ok());
    }

    #[test]
    fn log_parabolic_entry() {
        let e = get("thm13a", 2).unwrap();
        assert_eq!(e.function.body.to_string(), log_parabolic(2).body.to_string());
        assert!((e.expected("solving_exponent").unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.expected("lsharp_at_minus_one"), Some(-12.0));
        assert_eq!(e.expected("theta"), Some(2.0));
        assert_eq!(e.expected("tnorm2"), Some(2.25));
        assert_eq!(e.expected("pick_j"), Some(3.5));
        assert!(e.function.value(&[1.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn samplers_stay_interior_with_margin() {
        for name in NAMES {
            for n in 2..=4 {
                let e = get(name, n).unwrap();
                for p in e.samples(11, 200) {
                    assert!(e.function.domain.margin(&p).unwrap() >= 1e-3, "{name} {p:?}");
                }
            }
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let e = get("hyperbolic_case", 3).unwrap();
        assert_eq!(e.samples(5, 10), e.samples(5, 10));
        assert_ne!(e.samples(5, 10), e.samples(6, 10));
    }

    #[test]
    fn dual_maps_onto_log_parabolic() {
        let e = get("dual59", 3).unwrap();
        let (tr, target) = e.equivalence.clone().unwrap();
        assert!(tr.is_calabi());
        let t = get(target, 3).unwrap().function;
        for p in e.samples(3, 20) {
            let mut q = p.clone();
            q.push(e.function.value(&p).unwrap());
            let img = tr.apply(&q).unwrap();
            let v = t.value(&img[..3]).unwrap();
            assert!((v - img[3]).abs() < 1e-13);
        }
    }

    #[test]
    fn list_covers_all_names() {
        let l = list();
        assert_eq!(l.len(), NAMES.len());
        assert!(l.iter().all(|(_, label)| !label.is_empty()));
    }
}
