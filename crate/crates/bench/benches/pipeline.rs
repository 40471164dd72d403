use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dissip_bench::{diag, first_example, ladder, staircase_kernel};
use dissip_core::{certify, certify_state_space, CertifyOptions, RMat};
use std::hint::black_box;

fn first_example_certificate(c: &mut Criterion) {
    let b = first_example();
    let sigma = diag(&[1.0, -1.0]);
    let opts = CertifyOptions::default();
    c.bench_function("certify first example", |bench| bench.iter(|| certify(black_box(&b), &sigma, &opts).unwrap()));
}

fn ladder_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("certify ladder");
    let j = -RMat::identity(1, 1);
    let opts = CertifyOptions::default();
    for n in [2, 4, 8, 16] {
        let ss = ladder(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ss, |bench, ss| {
            bench.iter(|| certify_state_space(black_box(ss), &j, &opts).unwrap())
        });
    }
    group.finish();
}

fn smith_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("smith form");
    for k in [1, 2, 3, 4] {
        let r = staircase_kernel(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &r, |bench, r| bench.iter(|| black_box(r).smith_form()));
    }
    group.finish();
}

criterion_group!(benches, first_example_certificate, ladder_scaling, smith_scaling);
criterion_main!(benches);
