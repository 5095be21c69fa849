//! Tabular versus naive denominator throughput across circulant sizes.
//!
//! The tabular path is the one the estimator uses; the naive double sum is
//! its correctness oracle. The gap between them is the point of the tables.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qcts::weighing::{build_tables, weight_denominator_naive, weight_denominator_tabular};
use qcts_bench::{noise, random_ensemble};

fn bench_denominator(c: &mut Criterion) {
    let mut group = c.benchmark_group("denominator");
    for &z in &[32usize, 128, 512] {
        let n = 8;
        let ens = random_ensemble(4, n, z, 8, 1.7, 0.8, 42);
        let tables = build_tables(&ens);
        let xi = noise(n * z, 0.8, 7);
        let delta = xi.iter().map(|v| v * v).sum::<f64>() / (2.0 * 0.8 * 0.8);

        group.bench_with_input(BenchmarkId::new("tabular", z), &z, |b, _| {
            b.iter(|| weight_denominator_tabular(&ens, &tables, black_box(1), &xi, delta).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("naive", z), &z, |b, _| {
            b.iter(|| weight_denominator_naive(&ens, black_box(1), &xi, delta).unwrap())
        });
    }
    group.finish();
}

fn bench_table_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_tables");
    for &z in &[32usize, 128] {
        let ens = random_ensemble(4, 8, z, 8, 1.7, 0.8, 42);
        group.bench_with_input(BenchmarkId::from_parameter(z), &z, |b, _| {
            b.iter(|| build_tables(black_box(&ens)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_denominator, bench_table_build);
criterion_main!(benches);
