use std::hint::black_box;
use std::sync::Arc;

use choquard_core::green::FarBoundary;
use choquard_core::riesz::build_kernel;
use choquard_core::solver::picard_step;
use choquard_bench::{bump, grid};
use choquard_core::{ProblemParams, Workspace};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn kernel_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_build");
    group.sample_size(10);
    for n in [512, 2048] {
        let g = grid(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| build_kernel(3, 2.0, black_box(g.clone())).unwrap())
        });
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let g = grid(2048);
    let kernel = build_kernel(3, 2.0, g.clone()).unwrap();
    let f = bump(&g);
    c.bench_function("riesz_apply_2048", |b| b.iter(|| kernel.apply(black_box(&f)).unwrap()));

    let params = ProblemParams::new(3, 2.0, 2.0, 0.5).unwrap().with_k(0.5).unwrap();
    let ws = Workspace::with_kernel(params, Arc::new(kernel)).unwrap();
    c.bench_function("green_apply_2048", |b| b.iter(|| ws.green.apply(black_box(&f)).unwrap()));

    let v = ws.gamma0.scaled(0.5);
    c.bench_function("picard_step_2048", |b| {
        b.iter(|| picard_step(&ws, black_box(&v), 0.5, FarBoundary::Auto).unwrap())
    });
}

criterion_group!(benches, kernel_build, operators);
criterion_main!(benches);
