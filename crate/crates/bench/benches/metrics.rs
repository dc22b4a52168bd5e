use std::hint::black_box;

use annofix::metrics::{calibrate_threshold, modified_tracking_accuracy, tracking_accuracy, Threshold};
use annofix_bench::random_evaluation;
use criterion::{criterion_group, criterion_main, Criterion};

fn metrics(c: &mut Criterion) {
    let (track, dets) = random_evaluation(10_000, 3);
    let th = Threshold::inclusive(0.5);
    let mut group = c.benchmark_group("metrics_10k_frames");
    group.bench_function("ta", |b| {
        b.iter(|| tracking_accuracy(black_box(&track), black_box(&dets), th).unwrap())
    });
    group.bench_function("mta", |b| {
        b.iter(|| modified_tracking_accuracy(black_box(&track), black_box(&dets), th).unwrap())
    });
    group.bench_function("calibrate", |b| {
        b.iter(|| calibrate_threshold(black_box(&track), black_box(&dets), 2.4).unwrap())
    });
    group.finish();
}

criterion_group!(benches, metrics);
criterion_main!(benches);
