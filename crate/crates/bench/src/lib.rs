//! Shared fixtures for the benchmarks.

pub use calabi_core;

use calabi_core::{catalog, ConvexFunction};

/// A catalog function together with a fixed interior point.
pub fn fixture(name: &str, n: usize) -> (ConvexFunction, Vec<f64>) {
    let e = catalog::get(name, n).expect("catalog entry");
    let p = e.samples(7, 1).remove(0);
    (e.function, p)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_interior() {
        for n in 2..=4 {
            let (f, p) = super::fixture("hyperbolic_case", n);
            f.check_interior(&p).unwrap();
        }
    }
}
