//! Inputs shared by the benchmarks.

use annofix::{AnnotationTrack, BoundingBox, Detection, DetectionSet, FrameLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A `frames`-long track with a drifting box and up to three scored
/// detections per frame, some near the box and some elsewhere.
pub fn random_evaluation(frames: usize, seed: u64) -> (AnnotationTrack, DetectionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(frames);
    let mut dets = Vec::with_capacity(frames);
    for t in 0..frames {
        let gt = BoundingBox::new(100.0 + (t % 200) as f64, 80.0, 24.0, 18.0).expect("valid box");
        labels.push(if rng.random_bool(0.8) {
            FrameLabel::visible(gt)
        } else {
            FrameLabel::invisible()
        });
        let n = rng.random_range(0..4);
        dets.push(
            (0..n)
                .map(|_| {
                    let rect = if rng.random_bool(0.6) {
                        gt.translated(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0))
                    } else {
                        gt.with_origin(rng.random_range(0.0..600.0), rng.random_range(0.0..480.0))
                    };
                    Detection::new(rect, rng.random_range(0.0..1.0)).expect("valid detection")
                })
                .collect(),
        );
    }
    (
        AnnotationTrack::new("bench", 30.0, labels).expect("valid track"),
        DetectionSet::new("bench", dets),
    )
}
