use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qch_bench::fixture;
use qch_core::{curv_dot, solve_profile, QchBasis, QchCoefficients};

fn bench_curv_dot(c: &mut Criterion) {
    let mut group = c.benchmark_group("curv_dot");
    group.sample_size(10);
    for n in [2usize, 3, 4] {
        let basis = fixture(n);
        let r = basis.combine(QchCoefficients::new(1.0, -0.5, 2.0));
        group.bench_with_input(BenchmarkId::from_parameter(n), &r, |b, r| {
            b.iter(|| curv_dot(black_box(r), r.tensor()).unwrap())
        });
    }
    group.finish();
}

fn bench_basis(c: &mut Criterion) {
    let mut group = c.benchmark_group("basis_build");
    for n in [2usize, 4, 6] {
        let space = fixture(n).space().clone();
        group.bench_with_input(BenchmarkId::from_parameter(n), &space, |b, space| {
            b.iter(|| QchBasis::new(black_box(space)))
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let basis = fixture(3);
    let r = basis.combine(QchCoefficients::new(0.3, 1.2, -0.7));
    c.bench_function("fit_n3", |b| b.iter(|| basis.fit(black_box(&r)).unwrap()));
}

fn bench_profile(c: &mut Criterion) {
    c.bench_function("solve_profile", |b| {
        b.iter(|| solve_profile(black_box(1.0), black_box(std::f64::consts::PI), 2, 4).unwrap())
    });
}

criterion_group!(kernels, bench_curv_dot, bench_basis, bench_fit, bench_profile);
criterion_main!(kernels);
