//! Parallel versus single-threaded execution of the two data-parallel hot
//! paths. With the `parallel` feature the "sequential" case runs inside a
//! one-thread rayon pool; without it only the sequential build is measured.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qdisturb::analytic::{probability_of_t, StatePair};
use qdisturb::montecarlo::{self, SimConfig, SimScheme};
use qdisturb::oracle;

fn mc_config() -> SimConfig {
    SimConfig {
        shots: 1 << 20,
        seed: 42,
        alpha: PI / 8.0,
        t_or_phi: 0.5,
        scheme: SimScheme::Parity,
    }
}

fn oracle_once() -> f64 {
    let pair = StatePair::new(PI / 8.0).unwrap();
    let target = probability_of_t(&pair, 0.5).unwrap();
    oracle::minimize_disturbance(&pair, target, 50_000, 1)
        .unwrap()
        .achieved_d
}

fn montecarlo_once() -> f64 {
    montecarlo::run(&mc_config()).unwrap().d_hat
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let threads = rayon::current_num_threads();

    let mut group = c.benchmark_group("montecarlo_parity_2^20_shots");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", 1), |b| {
        b.iter(|| single.install(|| black_box(montecarlo_once())))
    });
    group.bench_function(BenchmarkId::new("parallel", threads), |b| {
        b.iter(|| black_box(montecarlo_once()))
    });
    group.finish();

    let mut group = c.benchmark_group("oracle_18_starts_50k_evals");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", 1), |b| {
        b.iter(|| single.install(|| black_box(oracle_once())))
    });
    group.bench_function(BenchmarkId::new("parallel", threads), |b| {
        b.iter(|| black_box(oracle_once()))
    });
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("sequential_build");
    group.sample_size(10);
    group.bench_function("montecarlo_parity_2^20_shots", |b| {
        b.iter(|| black_box(montecarlo_once()))
    });
    group.bench_function("oracle_18_starts_50k_evals", |b| {
        b.iter(|| black_box(oracle_once()))
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
