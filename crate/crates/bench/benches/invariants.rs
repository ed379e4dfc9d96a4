use std::hint::black_box;

use calabi_bench::calabi_core::frames::{theta_bruteforce_at, theta_max_at};
use calabi_bench::calabi_core::geodesics::geodesic;
use calabi_bench::calabi_core::pde::pde_report_at;
use calabi_bench::calabi_core::warped::integrate_eta;
use calabi_bench::calabi_core::{finite_difference_jet, jet4, CalabiInvariants};
use calabi_bench::fixture;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet4");
    for n in 2..=5 {
        let (f, p) = fixture("hyperbolic_case", n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| jet4(black_box(&f.body), black_box(&p)).unwrap())
        });
    }
    g.finish();
    let (f, p) = fixture("hyperbolic_case", 3);
    c.bench_function("finite_difference_jet/3", |b| {
        b.iter(|| finite_difference_jet(black_box(&f.body), black_box(&p), 1e-3).unwrap())
    });
}

fn invariants(c: &mut Criterion) {
    let mut g = c.benchmark_group("invariants");
    for n in 2..=5 {
        let (f, p) = fixture("thm13a", n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| CalabiInvariants::at(black_box(&f), black_box(&p)).unwrap())
        });
    }
    g.finish();
    let (f, p) = fixture("thm13a", 3);
    let inv = CalabiInvariants::at(&f, &p).unwrap();
    c.bench_function("pde_report/3", |b| {
        b.iter(|| pde_report_at(&inv.jet, &inv.metric, black_box(-0.75)).unwrap())
    });
}

fn theta(c: &mut Criterion) {
    let (f, p) = fixture("sphere_case", 3);
    let inv = CalabiInvariants::at(&f, &p).unwrap();
    c.bench_function("theta_max/3", |b| {
        b.iter(|| theta_max_at(black_box(&inv), 16, 42).unwrap())
    });
    c.bench_function("theta_bruteforce/3/360", |b| {
        b.iter(|| theta_bruteforce_at(black_box(&inv), 360).unwrap())
    });
}

fn integrators(c: &mut Criterion) {
    c.bench_function("integrate_eta/1000", |b| {
        b.iter(|| integrate_eta(black_box(0.3), 1.0, 1e-3).unwrap())
    });
    let (f, _) = fixture("thm13a", 2);
    c.bench_function("geodesic/2/100", |b| {
        b.iter(|| geodesic(black_box(&f), &[1.0, 0.0], &[2.0, 0.0], 0.1, 1e-3).unwrap())
    });
}

criterion_group!(benches, jets, invariants, theta, integrators);
criterion_main!(benches);
