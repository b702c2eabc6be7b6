use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use qubo_core::preprocessing::{qpro_plus, reduce_dynamic_range};
use qubo_core::probability::log_partition;
use qubo_core::solving::{brute_force, local_search, simulated_annealing};
use qubo_core::{QuboInstance, WeightDistribution};

fn bench_brute_force(c: &mut Criterion) {
    let q = QuboInstance::random(20, WeightDistribution::Normal, 0.5, 7).unwrap();
    let mut group = c.benchmark_group("brute_force_n20");
    group.sample_size(10);
    group.bench_function("1_thread", |b| b.iter(|| brute_force(&q, 1).unwrap()));
    group.bench_function("8_threads", |b| b.iter(|| brute_force(&q, 8).unwrap()));
    group.finish();
}

fn bench_energy_batch(c: &mut Criterion) {
    let q = QuboInstance::random(16, WeightDistribution::Normal, 0.8, 3).unwrap();
    let xs = qubo_core::bitvec::all_bitvectors_array(16).unwrap();
    c.bench_function("energy_batch_65536x16", |b| {
        b.iter(|| q.energy_batch(&xs).unwrap())
    });
}

fn bench_log_partition(c: &mut Criterion) {
    let q = QuboInstance::random(18, WeightDistribution::Normal, 0.5, 5).unwrap();
    c.bench_function("log_partition_n18", |b| {
        b.iter(|| log_partition(&q, 1.0).unwrap())
    });
}

fn bench_heuristics(c: &mut Criterion) {
    let q = QuboInstance::random(64, WeightDistribution::Normal, 0.3, 11).unwrap();
    c.bench_function("local_search_n64_8_restarts", |b| {
        b.iter(|| local_search(&q, 8, 1))
    });
    c.bench_function("annealing_n64_10k_steps", |b| {
        b.iter(|| simulated_annealing(&q, 10_000, None, 0.999, 1).unwrap())
    });
}

fn bench_preprocessing(c: &mut Criterion) {
    let mut group = c.benchmark_group("preprocessing");
    group.sample_size(10);
    group.bench_function("qpro_plus_n64_d03", |b| {
        b.iter_batched(
            || QuboInstance::random(64, WeightDistribution::Normal, 0.3, 9).unwrap(),
            |q| qpro_plus(&q),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("dr_reduction_n16_d025", |b| {
        b.iter_batched(
            || QuboInstance::random(16, WeightDistribution::Normal, 0.25, 13).unwrap(),
            |q| reduce_dynamic_range(&q, 1),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_brute_force,
    bench_energy_batch,
    bench_log_partition,
    bench_heuristics,
    bench_preprocessing
);
criterion_main!(benches);
