use std::hint::black_box;

use annofix::imaging::{extract_patch, zncc_match, FrameSource};
use annofix::synthetic::{static_scene, SceneSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn zncc(c: &mut Criterion) {
    let scene = static_scene(&SceneSpec {
        frames: 1,
        ..Default::default()
    })
    .unwrap();
    let frame = scene.video.frame(0).unwrap();
    let rect = scene.true_box();
    let template = extract_patch(&frame, &rect).unwrap();
    let mut group = c.benchmark_group("zncc_match");
    for radius in [5u32, 10, 20, 30] {
        group.bench_with_input(BenchmarkId::from_parameter(radius), &radius, |b, &r| {
            b.iter(|| zncc_match(black_box(&template), black_box(&frame), rect.center(), r).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, zncc);
criterion_main!(benches);
