use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cvdistill_bench::{canonical_splitter, canonical_state, phase_rule};
use cvdistill_core::{
    angle_sweep, conditional_truncated_stats, distilled_stats, threshold_sweep, DetectorModel,
    KeepSide, QuadratureAngle,
};

fn bench(c: &mut Criterion) {
    let state = canonical_state();
    let splitter = canonical_splitter();
    let det = DetectorModel::default();
    let x = QuadratureAngle::AMPLITUDE;

    c.bench_function("distilled_stats", |b| {
        b.iter(|| {
            distilled_stats(
                black_box(&state),
                &splitter,
                &phase_rule(black_box(21.4)),
                x,
                &det,
            )
            .unwrap()
        })
    });
    c.bench_function("conditional_truncated_stats", |b| {
        b.iter(|| {
            conditional_truncated_stats(
                black_box(0.3),
                1.2,
                -0.4,
                2.0,
                0.9,
                black_box(0.5),
                KeepSide::Above,
            )
            .unwrap()
        })
    });
    let thresholds: Vec<f64> = (0..1000).map(|k| -25.0 + 0.075 * k as f64).collect();
    c.bench_function("threshold_sweep_1000", |b| {
        b.iter(|| {
            threshold_sweep(
                &state,
                &splitter,
                &phase_rule(0.0),
                x,
                &det,
                black_box(&thresholds),
            )
            .unwrap()
        })
    });
    let betas: Vec<f64> = (0..181).map(|k| (k as f64).to_radians()).collect();
    c.bench_function("angle_sweep_181", |b| {
        b.iter(|| {
            angle_sweep(
                &state,
                &splitter,
                5.3,
                KeepSide::Above,
                x,
                &det,
                black_box(&betas),
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
