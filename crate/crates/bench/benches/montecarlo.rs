use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use cvdistill_bench::{canonical_simulation, phase_rule};
use cvdistill_core::montecarlo::{sample_protocol_sequential, sweep_samples, VarianceErrorModel};
use cvdistill_core::{postselect_estimate, sample_protocol};

fn bench(c: &mut Criterion) {
    let n = 1 << 18;
    let cfg = canonical_simulation(n);
    let mut group = c.benchmark_group("sample_protocol");
    group.throughput(Throughput::Elements(n as u64));
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| sample_protocol(black_box(&cfg)).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| sample_protocol_sequential(black_box(&cfg)).unwrap())
    });
    group.finish();

    let samples = sample_protocol(&cfg).unwrap();
    c.bench_function("postselect_estimate", |b| {
        b.iter(|| postselect_estimate(black_box(&samples), &phase_rule(21.4)).unwrap())
    });
    let thresholds: Vec<f64> = (0..61).map(|k| -25.0 + 1.25 * k as f64).collect();
    c.bench_function("sweep_samples_61", |b| {
        b.iter(|| {
            sweep_samples(
                black_box(&samples),
                &phase_rule(0.0),
                &thresholds,
                VarianceErrorModel::Moments,
            )
        })
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
