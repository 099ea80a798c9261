use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pactsolve_bench::{cara_gaussian, extended_log_uniform};
use pactsolve_core::{brute_force_oracle, cara_ll_solve, general_ll_solve, kkt_verify, SolverConfig};

fn cara(c: &mut Criterion) {
    let fig1 = cara_gaussian(0.2, 0.2, 1.0, 1.0);
    let fig4 = cara_gaussian(5.0, 0.1, 1.0, 0.5);
    c.bench_function("cara_ll_solve/fig1", |b| b.iter(|| cara_ll_solve(black_box(&fig1)).unwrap()));
    c.bench_function("cara_ll_solve/fig4", |b| b.iter(|| cara_ll_solve(black_box(&fig4)).unwrap()));
}

fn general(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let fig1 = cara_gaussian(0.2, 0.2, 1.0, 1.0);
    let ext = extended_log_uniform(40);
    let mut g = c.benchmark_group("general_ll_solve");
    g.sample_size(20);
    g.bench_function("fig1", |b| b.iter(|| general_ll_solve(black_box(&fig1), &cfg).unwrap()));
    g.bench_function("extended_log_40", |b| b.iter(|| general_ll_solve(black_box(&ext), &cfg).unwrap()));
    g.finish();

    let sol = general_ll_solve(&fig1, &cfg).unwrap();
    c.bench_function("kkt_verify/fig1", |b| {
        b.iter(|| kkt_verify(black_box(&fig1), &sol.contract, &sol.multipliers, 1e-6))
    });
}

fn oracle(c: &mut Criterion) {
    let small = extended_log_uniform(2);
    let mut g = c.benchmark_group("brute_force_oracle");
    g.sample_size(10);
    g.bench_function("extended_log_2", |b| b.iter(|| brute_force_oracle(black_box(&small), 0.01, 0.01).unwrap()));
    g.finish();
}

criterion_group!(benches, cara, general, oracle);
criterion_main!(benches);
