use annofix::correction::{correct, correct_pass, detrend, measure_displacements, CorrectionConfig, StepFlag};
use annofix::imaging::Displacement;
use annofix::synthetic::{sparse_shifts, static_scene, Scene, SceneSpec};
use annofix::{AnnotationTrack, FrameLabel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

fn ols_residuals(start: usize, c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { (start + i) as f64 } else { 1.0 });
    let b = DVector::from_column_slice(c);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    (b - a * coef).iter().copied().collect()
}

#[test]
fn detrend_matches_svd_least_squares() {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = r.random_range(3..120);
        let start = r.random_range(0..500);
        let c: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-30i32..30))).collect();
        let (_, res) = detrend(start, &c);
        for (x, y) in res.iter().zip(ols_residuals(start, &c)) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn single_spike_closed_form() {
    let mut c = vec![0.0; 50];
    c[4] = -6.0;
    let (_, res) = detrend(0, &c);
    // r_k = s * (δ_k4 - 1/n - (k - k̄)(4 - k̄) / Σ(j - k̄)²)
    let n = 50.0;
    let kbar = 24.5;
    let sxx: f64 = (0..50).map(|j| (f64::from(j) - kbar).powi(2)).sum();
    for (k, r) in res.iter().enumerate() {
        let delta = if k == 4 { 1.0 } else { 0.0 };
        let expected = -6.0 * (delta - 1.0 / n - (k as f64 - kbar) * (4.0 - kbar) / sxx);
        assert!((r - expected).abs() < 1e-9);
    }
    assert!((res[4] + 6.0).abs() < 6.0 * 0.1);
}

fn scene(frames: usize, seed: u64) -> Scene {
    static_scene(&SceneSpec {
        frames,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn shifted(scene: &Scene, t: usize, dx: f64, dy: f64) -> AnnotationTrack {
    let mut labels = scene.truth.labels().to_vec();
    labels[t] = FrameLabel::visible(scene.true_box().translated(dx, dy));
    scene.truth.with_labels(labels).unwrap()
}

fn center_error(scene: &Scene, track: &AnnotationTrack, t: usize) -> f64 {
    let (tx, ty) = scene.true_box().center();
    let (cx, cy) = track.labels()[t].rect().unwrap().center();
    (cx - tx).hypot(cy - ty)
}

#[test]
fn spike_sign_convention_on_generated_scene() {
    let s = scene(20, 0);
    let steps = measure_displacements(&s.video, &shifted(&s, 5, 6.0, 0.0), (0, 19), 20).unwrap();
    for (k, st) in steps.iter().enumerate() {
        let expected = match k {
            5 => Displacement::new(-6, 0),
            6 => Displacement::new(6, 0),
            _ => Displacement::ZERO,
        };
        assert_eq!(st.u, expected, "frame {k}");
    }
}

#[test]
fn perfect_annotations_unchanged() {
    let s = scene(30, 1);
    let (out, diag) = correct(&s.video, &s.truth, &CorrectionConfig::default()).unwrap();
    assert_eq!(out, s.truth);
    assert!(diag
        .passes
        .iter()
        .flat_map(|p| &p.chains)
        .all(|c| c.steps.iter().all(|st| st.u == Displacement::ZERO)));
}

#[test]
fn sparse_shifts_recovered() {
    for seed in 0..3 {
        let s = scene(100, seed);
        let (noisy, idx) = sparse_shifts(&s.truth, 10, 10, seed + 77).unwrap();
        let (out, _) = correct(&s.video, &noisy, &CorrectionConfig::default()).unwrap();
        let good = idx.iter().filter(|&&t| center_error(&s, &out, t) <= 1.0).count();
        assert!(good >= 9, "seed {seed}: {good}/10");
        for t in (0..100).filter(|t| !idx.contains(t)) {
            assert!(center_error(&s, &out, t) <= 1.0);
        }
    }
}

#[test]
fn linear_drift_is_left_alone() {
    let s = scene(60, 2);
    let labels = (0..60)
        .map(|k| FrameLabel::visible(s.true_box().translated(0.2 * k as f64, 0.0)))
        .collect();
    let drifting = s.truth.with_labels(labels).unwrap();
    let (out, _) = correct(&s.video, &drifting, &CorrectionConfig::default()).unwrap();
    for (a, b) in drifting.labels().iter().zip(out.labels()) {
        let (ax, ay) = a.rect().unwrap().center();
        let (bx, by) = b.rect().unwrap().center();
        assert!((ax - bx).hypot(ay - by) <= 1.0);
    }
    assert!(center_error(&s, &out, 59) > 10.0);
}

#[test]
fn beyond_radius_needs_two_passes() {
    let s = scene(40, 3);
    let noisy = shifted(&s, 20, 30.0, 0.0);
    let one = correct(
        &s.video,
        &noisy,
        &CorrectionConfig {
            passes: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let two = correct(&s.video, &noisy, &CorrectionConfig::default()).unwrap();
    assert!(center_error(&s, &one.0, 20) > 2.0);
    assert!(center_error(&s, &two.0, 20) <= 2.0);
    assert!(one.1.saturated() > 0);
    let flags: Vec<_> = one.1.passes[0].chains[0].steps.iter().filter_map(|s| s.flag).collect();
    assert!(flags.iter().all(|f| *f == StepFlag::Saturated));
}

#[test]
fn subpixel_mode_keeps_fractional_residuals() {
    let s = scene(30, 4);
    let noisy = shifted(&s, 10, 5.0, 0.0);
    let cfg = CorrectionConfig {
        subpixel: true,
        passes: 1,
        ..Default::default()
    };
    let (out, _) = correct_pass(&s.video, &noisy, &cfg).unwrap();
    let x = out.labels()[0].rect().unwrap().x();
    assert_ne!(x.fract(), 0.0);
}
