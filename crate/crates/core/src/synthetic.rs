//! Generated static-scene videos with known ground truth.
//!
//! The background is a smooth random field made of broad Gaussian bumps, and
//! the target is a sharp bright core sitting on a wide halo. The core pins
//! matches to the pixel; the halo makes correlation rise steadily toward the
//! target from well outside the box, so a search that cannot reach the
//! target still ends on the border closest to it. Every frame is identical,
//! so the true box is the same on all frames and any measured motion comes
//! from annotation error alone.

use std::sync::Arc;

use rand::Rng;

use crate::annotation::{AnnotationTrack, BoundingBox, FrameLabel};
use crate::error::{Error, Result};
use crate::imaging::{FrameSource, GrayFrame};
use crate::noise::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Side of the square ground-truth box.
    pub target_size: usize,
    pub core_sigma: f64,
    pub core_contrast: f64,
    pub halo_sigma: f64,
    pub halo_contrast: f64,
    pub frames: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 192,
            height: 160,
            target_size: 24,
            core_sigma: 4.8,
            core_contrast: 110.0,
            halo_sigma: 24.0,
            halo_contrast: 60.0,
            frames: 100,
            seed: 0,
        }
    }
}

/// A video whose frames are all the same image.
#[derive(Debug, Clone)]
pub struct StaticVideo {
    frame: Arc<GrayFrame>,
    len: usize,
}

impl StaticVideo {
    pub fn new(frame: GrayFrame, len: usize) -> Self {
        Self {
            frame: Arc::new(frame),
            len,
        }
    }

    pub fn image(&self) -> &GrayFrame {
        &self.frame
    }
}

impl FrameSource for StaticVideo {
    fn frame_count(&self) -> usize {
        self.len
    }

    fn dims(&self) -> (usize, usize) {
        (self.frame.width(), self.frame.height())
    }

    fn frame(&self, index: usize) -> Result<Arc<GrayFrame>> {
        if index >= self.len {
            return Err(Error::FrameOutOfRange {
                t: index + 1,
                len: self.len,
            });
        }
        Ok(Arc::clone(&self.frame))
    }
}

/// Generated scene plus its ground-truth annotations.
#[derive(Debug, Clone)]
pub struct Scene {
    pub video: StaticVideo,
    pub truth: AnnotationTrack,
}

impl Scene {
    pub fn true_box(&self) -> BoundingBox {
        *self.truth.labels()[0].rect().expect("scene target is always visible")
    }
}

pub fn static_scene(spec: &SceneSpec) -> Result<Scene> {
    if spec.frames == 0 || spec.target_size < 4 || spec.target_size > spec.width.min(spec.height) {
        return Err(Error::InvalidSpec(format!("bad scene {spec:?}")));
    }
    let mut r = rng(spec.seed);
    let (w, h) = (spec.width as f64, spec.height as f64);
    // (x, y, sigma, amplitude)
    let bumps: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                r.random_range(-0.2 * w..1.05 * w),
                r.random_range(-0.25 * h..1.05 * h),
                r.random_range(25.0..60.0),
                r.random_range(-40.0..40.0),
            )
        })
        .collect();
    let half = spec.target_size as f64 / 2.0;
    // integer origin so the box matches its own pixel grid exactly
    let x0 = (spec.width - spec.target_size) / 2;
    let y0 = (spec.height - spec.target_size) / 2;
    let (cx, cy) = (x0 as f64 + half, y0 as f64 + half);
    let gauss = |d2: f64, sigma: f64| (-d2 / (2.0 * sigma * sigma)).exp();

    let frame = GrayFrame::from_fn(spec.width, spec.height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let bg: f64 = bumps
            .iter()
            .map(|(bx, by, s, a)| a * gauss((px - bx).powi(2) + (py - by).powi(2), *s))
            .sum();
        let d2 = (px - cx).powi(2) + (py - cy).powi(2);
        let v = 70.0
            + bg
            + spec.core_contrast * gauss(d2, spec.core_sigma)
            + spec.halo_contrast * gauss(d2, spec.halo_sigma);
        v.round().clamp(0.0, 255.0) as u8
    })?;
    let rect = BoundingBox::new(x0 as f64, y0 as f64, spec.target_size as f64, spec.target_size as f64)?;
    let truth = AnnotationTrack::new(
        format!("synthetic-{}", spec.seed),
        30.0,
        vec![FrameLabel::visible(rect); spec.frames],
    )?;
    Ok(Scene {
        video: StaticVideo::new(frame, spec.frames),
        truth,
    })
}

/// Moves the box of `count` distinct frames by integer offsets drawn
/// uniformly from `[-max_shift, max_shift]²` without `(0, 0)`. Frames are
/// chosen so that no two are adjacent and none is the first or last frame.
/// Returns the corrupted track and the corrupted frame indices, sorted.
pub fn sparse_shifts(
    track: &AnnotationTrack,
    count: usize,
    max_shift: i32,
    seed: u64,
) -> Result<(AnnotationTrack, Vec<usize>)> {
    let n = track.len();
    if max_shift < 1 || n < 3 || count > (n - 1) / 2 {
        return Err(Error::InvalidSpec(format!(
            "cannot place {count} isolated shifts in {n} frames"
        )));
    }
    let mut r = rng(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    while chosen.len() < count {
        let t = r.random_range(1..n - 1);
        if chosen.iter().all(|c| c.abs_diff(t) > 1) {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    let mut labels = track.labels().to_vec();
    for &t in &chosen {
        let Some(rect) = labels[t].rect().copied() else {
            continue;
        };
        let (dx, dy) = loop {
            let d = (
                r.random_range(-max_shift..=max_shift),
                r.random_range(-max_shift..=max_shift),
            );
            if d != (0, 0) {
                break d;
            }
        };
        labels[t] = FrameLabel::visible(rect.translated(f64::from(dx), f64::from(dy)));
    }
    Ok((track.with_labels(labels)?, chosen))
}
