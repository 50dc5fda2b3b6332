use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cue_lab::exact_functionals::{kr3g_moment, ks_moment, mom_moment, secular_moment};
use cue_lab::polytope_ehrhart::{ehrhart_birkhoff, ehrhart_subbirkhoff};
use std::hint::black_box;

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("ks_moment");
    for n in [12usize, 100, 400] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| ks_moment(black_box(n), 2)));
    }
    g.finish();

    c.bench_function("secular_moment(40,20,2)", |b| b.iter(|| secular_moment(black_box(40), 20, 2)));
    c.bench_function("kr3g_moment(40,40,2)", |b| b.iter(|| kr3g_moment(black_box(40), 40, 2)));
    c.bench_function("mom_moment(4,2,2)", |b| b.iter(|| mom_moment(black_box(4), 2, 2)));
    c.bench_function("ehrhart_birkhoff(3,6)", |b| b.iter(|| ehrhart_birkhoff(3, black_box(6))));
    c.bench_function("ehrhart_subbirkhoff(2,8)", |b| b.iter(|| ehrhart_subbirkhoff(2, black_box(8))));
}

criterion_group!(benches, exact);
criterion_main!(benches);
