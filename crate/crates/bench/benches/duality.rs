use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use qcond_bench::{measured_pair, pair};
use qcond_core::correlations::{sample, verify_equivalence};
use qcond_core::duality::{leifer_forward, leifer_reverse};
use qcond_core::fixedpoints::{block_example_channel, decompose_fixed_algebra};
use qcond_core::JointTable;

fn isomorphism(c: &mut Criterion) {
    let mut group = c.benchmark_group("leifer");
    for d in [2usize, 4, 8] {
        let p = pair(d, d, 11);
        let tau = leifer_forward(&p, None).unwrap();
        group.bench_with_input(BenchmarkId::new("forward", d), &p, |b, p| {
            b.iter(|| leifer_forward(black_box(p), None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reverse", d), &tau, |b, tau| {
            b.iter(|| leifer_reverse(black_box(tau), None).unwrap())
        });
    }
    group.finish();
}

fn equivalence(c: &mut Criterion) {
    let (p, m, n) = measured_pair(3, 3, 4, 7);
    c.bench_function("equivalence/3x3", |b| {
        b.iter(|| verify_equivalence(black_box(&p), &m, &n, None).unwrap())
    });
}

fn fixed_points(c: &mut Criterion) {
    let e = block_example_channel();
    c.bench_function("decompose/block4", |b| b.iter(|| decompose_fixed_algebra(black_box(&e)).unwrap()));
}

fn sampler(c: &mut Criterion) {
    let labels = vec!["0".to_string(), "1".to_string()];
    let table = JointTable::new(DMatrix::from_element(2, 2, 0.25), labels.clone(), labels).unwrap();
    c.bench_function("sample/1e5", |b| b.iter(|| sample(black_box(&table), 100_000, 42).unwrap()));
}

criterion_group!(benches, isomorphism, equivalence, fixed_points, sampler);
criterion_main!(benches);
