//! Hot kernels: syndrome computation, canonicalization, folding, decoding.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qcts::decoder::{Decoder, DecoderConfig};
use qcts::transforms::{canonical_form, project_vector};
use qcts_bench::{noise, random_matrix, random_support};

fn bench_syndrome(c: &mut Criterion) {
    let mut group = c.benchmark_group("syndrome");
    for &(n, z) in &[(20usize, 128usize), (20, 512)] {
        let e = random_matrix(4, n, z, 3);
        let x = random_support(n * z, 32, 5);
        group.bench_with_input(BenchmarkId::from_parameter(z), &z, |b, _| {
            b.iter(|| e.syndrome(black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn bench_canonical_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("canonical_form");
    for &z in &[128usize, 512] {
        let n = 20;
        let x = random_support(n * z, 24, 9);
        group.bench_with_input(BenchmarkId::from_parameter(z), &z, |b, _| {
            b.iter(|| canonical_form(black_box(&x), n, z).unwrap())
        });
    }
    group.finish();
}

fn bench_fold(c: &mut Criterion) {
    let n = 20;
    let z = 256;
    let x = random_support(n * z, 30, 11);
    c.bench_function("project_vector", |b| {
        b.iter(|| project_vector(black_box(&x), z, z / 2, n).unwrap())
    });
}

fn bench_decode(c: &mut Criterion) {
    let e = random_matrix(4, 20, 128, 3);
    let decoder = Decoder::new(&e, DecoderConfig::default());
    let mut llr: Vec<f64> = noise(e.n_vars(), 0.8, 13);
    for v in llr.iter_mut() {
        *v += 2.0;
    }
    c.bench_function("decode_20x128", |b| {
        b.iter(|| decoder.decode(black_box(&llr)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_syndrome,
    bench_canonical_form,
    bench_fold,
    bench_decode
);
criterion_main!(benches);
