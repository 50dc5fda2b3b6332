use criterion::{criterion_group, criterion_main, Criterion};
use cue_lab::limit_constants::{evaluate_constant, hankel_ks, Budget};
use cue_lab::limit_kernels::{finite_n_kernel, kernel_closed_form_tilde, kernel_quadrature, supersym_residue_sum, KernelSpec};
use cue_lab::LimitFunctionalSpec;
use cue_lab_bench::complex_points;
use std::hint::black_box;

fn kernels(c: &mut Criterion) {
    let spec = KernelSpec::new(1.0, 2, vec![0.0, 0.7]).unwrap();
    c.bench_function("kernel_closed_form_tilde k=2 κ=2", |b| b.iter(|| kernel_closed_form_tilde(black_box(&spec))));
    c.bench_function("kernel_quadrature k=2 κ=2", |b| b.iter(|| kernel_quadrature(black_box(&spec), 1e-10)));
    c.bench_function("finite_n_kernel N=256", |b| b.iter(|| finite_n_kernel(black_box(256), 1.0, 1, &[0.0, 0.5])));
    let (x, y) = (complex_points(4, 0.0), complex_points(2, 0.03));
    c.bench_function("supersym_residue_sum K=4 M=2", |b| b.iter(|| supersym_residue_sum(1.0, black_box(&x), &y)));
}

fn constants(c: &mut Criterion) {
    let mut g = c.benchmark_group("constants");
    g.sample_size(10);
    g.bench_function("hankel_ks(4)", |b| b.iter(|| hankel_ks(black_box(4))));
    let sc = LimitFunctionalSpec::sc(cue_lab::ring::qf(1, 2), 3).unwrap();
    g.bench_function("SC(1/2,3) spline", |b| b.iter(|| evaluate_constant(black_box(&sc), &Budget::default())));
    let vol = LimitFunctionalSpec::vol_s(1).unwrap();
    g.bench_function("VOL_S(1)", |b| b.iter(|| evaluate_constant(black_box(&vol), &Budget::default())));
    g.finish();
}

criterion_group!(benches, kernels, constants);
criterion_main!(benches);
