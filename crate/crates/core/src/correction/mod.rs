//! Annotation correction by frame-to-frame template matching.
//!
//! Within every maximal run of visible frames the box of frame `k` is cut
//! as a template and searched for around the annotated center of frame
//! `k + 1`. The matched offsets `u` are accumulated, a straight line is
//! fitted to the cumulative sum per axis, and the residual of that fit is
//! added to the annotated center. A linear trend (steady matcher drift, or
//! an equally steady annotation drift) is removed and never corrected.
//!
//! Sign convention: `u[k+1]` is the matched center on frame `k + 1` minus
//! its annotated center. A lone box shifted by `+s` yields `u = -s` on its
//! own frame and `+s` on the next one, so the cumulative sum dips by `-s`
//! on that frame only and the residual moves the box back.

mod detrend;

pub use detrend::{detrend, LineFit};

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationTrack, BoundingBox, FrameLabel};
use crate::error::{Error, Result};
use crate::imaging::{extract_patch, zncc_match, Displacement, FrameSource, GrayFrame};

pub const DEFAULT_RADIUS: u32 = 20;
pub const DEFAULT_PASSES: usize = 2;
pub const DEFAULT_MIN_SEGMENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    /// Search radius in pixels.
    pub radius: u32,
    pub passes: usize,
    /// Shorter visible runs are left untouched.
    pub min_segment: usize,
    /// Apply the fractional residuals as they are instead of rounding them
    /// to whole pixels.
    #[serde(default)]
    pub subpixel: bool,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            radius: DEFAULT_RADIUS,
            passes: DEFAULT_PASSES,
            min_segment: DEFAULT_MIN_SEGMENT,
            subpixel: false,
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::InvalidSpec("radius must be at least 1".into()));
        }
        if self.passes == 0 {
            return Err(Error::InvalidSpec("passes must be at least 1".into()));
        }
        if self.min_segment < 3 {
            return Err(Error::InvalidSpec("min_segment must be at least 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFlag {
    /// Best offset on the border of the search window; the true motion may be larger.
    Saturated,
    /// Template too small after clipping to the frame; `u` set to 0.
    DegeneratePatch,
    /// No placement fits inside the frame; `u` set to 0.
    MatchInfeasible,
}

/// One frame-to-frame measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub u: Displacement,
    /// `None` on the first frame of a segment and on failed matches.
    pub score: Option<f64>,
    pub flag: Option<StepFlag>,
}

impl Step {
    const FIRST: Step = Step {
        u: Displacement::ZERO,
        score: None,
        flag: None,
    };
}

/// Measurements and detrending for one visible segment `[start, end]`
/// (0-based, inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementChain {
    pub start: usize,
    pub end: usize,
    pub steps: Vec<Step>,
    pub cumulative: Vec<[f64; 2]>,
    pub trend: [LineFit; 2],
    pub residuals: Vec<[f64; 2]>,
    /// False when the segment was too short and passed through unchanged.
    pub applied: bool,
}

impl DisplacementChain {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn saturated(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.flag == Some(StepFlag::Saturated))
            .count()
    }

    /// Per-axis sum of the residuals.
    pub fn residual_sum(&self) -> [f64; 2] {
        self.residuals
            .iter()
            .fold([0.0, 0.0], |acc, r| [acc[0] + r[0], acc[1] + r[1]])
    }

    fn build(start: usize, steps: Vec<Step>, apply: bool) -> Self {
        let mut cumulative = Vec::with_capacity(steps.len());
        let mut acc = [0.0, 0.0];
        for s in &steps {
            acc[0] += f64::from(s.u.dx);
            acc[1] += f64::from(s.u.dy);
            cumulative.push(acc);
        }
        let n = steps.len();
        let (trend, residuals) = if apply {
            let xs: Vec<f64> = cumulative.iter().map(|c| c[0]).collect();
            let ys: Vec<f64> = cumulative.iter().map(|c| c[1]).collect();
            let (fx, rx) = detrend(start, &xs);
            let (fy, ry) = detrend(start, &ys);
            ([fx, fy], rx.into_iter().zip(ry).map(|(a, b)| [a, b]).collect())
        } else {
            ([LineFit::default(); 2], vec![[0.0, 0.0]; n])
        };
        Self {
            start,
            end: start + n - 1,
            steps,
            cumulative,
            trend,
            residuals,
            applied: apply,
        }
    }
}

/// Matches the box of frame `k` into frame `k + 1` for every transition of
/// the visible segment `[start, end]` (0-based, inclusive). The first step
/// is always zero.
pub fn measure_displacements(
    frames: &dyn FrameSource,
    track: &AnnotationTrack,
    segment: (usize, usize),
    radius: u32,
) -> Result<Vec<Step>> {
    let (start, end) = segment;
    if start > end || end >= track.len() {
        return Err(Error::validation(None, format!("bad segment {start}..={end}")));
    }
    let boxes = segment_boxes(track, start, end)?;
    let mut steps = Vec::with_capacity(boxes.len());
    steps.push(Step::FIRST);
    let mut prev = frames.frame(start)?;
    for (i, pair) in boxes.windows(2).enumerate() {
        let next = frames.frame(start + i + 1)?;
        steps.push(measure_step(&prev, &pair[0], &next, &pair[1], radius, start + i + 1));
        prev = next;
    }
    Ok(steps)
}

fn measure_step(
    prev: &GrayFrame,
    prev_box: &BoundingBox,
    next: &GrayFrame,
    next_box: &BoundingBox,
    radius: u32,
    t: usize,
) -> Step {
    let failed = |flag, e: Error| {
        log::warn!("frame {}: {e}", t + 1);
        Step {
            u: Displacement::ZERO,
            score: None,
            flag: Some(flag),
        }
    };
    let template = match extract_patch(prev, prev_box) {
        Ok(p) => p,
        Err(e) => return failed(StepFlag::DegeneratePatch, e),
    };
    match zncc_match(&template, next, next_box.center(), radius) {
        Ok(m) => Step {
            u: m.displacement,
            score: Some(m.score),
            flag: m.displacement.is_saturated(radius).then_some(StepFlag::Saturated),
        },
        Err(e) => failed(StepFlag::MatchInfeasible, e),
    }
}

fn segment_boxes(track: &AnnotationTrack, start: usize, end: usize) -> Result<Vec<BoundingBox>> {
    track.labels()[start..=end]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.rect()
                .copied()
                .ok_or_else(|| Error::validation(Some(start + i + 1), "frame inside segment is not visible"))
        })
        .collect()
}

/// One correction pass over every visible segment. Residuals are rounded to
/// whole pixels unless `config.subpixel` is set, matching the integer
/// resolution of the measurements.
pub fn correct_pass(
    frames: &dyn FrameSource,
    track: &AnnotationTrack,
    config: &CorrectionConfig,
) -> Result<(AnnotationTrack, Vec<DisplacementChain>)> {
    config.validate()?;
    if frames.frame_count() < track.len() {
        return Err(Error::validation(
            None,
            format!(
                "video has {} frames but the track has {}",
                frames.frame_count(),
                track.len()
            ),
        ));
    }
    let dims = frames.dims();
    let mut labels = track.labels().to_vec();
    let mut chains = Vec::new();
    for (start, end) in track.visible_segments() {
        let apply = end - start + 1 >= config.min_segment;
        let steps = if apply {
            measure_displacements(frames, track, (start, end), config.radius)?
        } else {
            vec![Step::FIRST; end - start + 1]
        };
        let chain = DisplacementChain::build(start, steps, apply);
        if apply {
            for (i, r) in chain.residuals.iter().enumerate() {
                let t = start + i;
                let rect = labels[t].rect().copied().expect("segment frames are visible");
                let [dx, dy] = if config.subpixel { *r } else { r.map(f64::round) };
                labels[t] = FrameLabel::visible(shift_within(&rect, dx, dy, dims));
            }
        }
        chains.push(chain);
    }
    Ok((track.with_labels(labels)?, chains))
}

/// Translates `rect` by `(dx, dy)` without pushing it further outside the
/// image than it already was.
fn shift_within(rect: &BoundingBox, dx: f64, dy: f64, (w, h): (usize, usize)) -> BoundingBox {
    let clamp = |origin: f64, side: f64, d: f64, limit: f64| {
        let lo = origin.min(0.0);
        let hi = origin.max(limit - side);
        (origin + d).clamp(lo, hi.max(lo))
    };
    rect.with_origin(
        clamp(rect.x(), rect.w(), dx, w as f64),
        clamp(rect.y(), rect.h(), dy, h as f64),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassDiagnostics {
    pub chains: Vec<DisplacementChain>,
}

impl PassDiagnostics {
    pub fn saturated(&self) -> usize {
        self.chains.iter().map(DisplacementChain::saturated).sum()
    }
}

/// Everything measured while correcting one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub video_id: String,
    pub config: CorrectionConfig,
    pub passes: Vec<PassDiagnostics>,
}

impl Diagnostics {
    pub fn saturated(&self) -> usize {
        self.passes.iter().map(PassDiagnostics::saturated).sum()
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("diagnostics always serialize");
        out.push(b'\n');
        out
    }
}

/// Runs `config.passes` correction passes, each on the previous pass's output.
pub fn correct(
    frames: &dyn FrameSource,
    track: &AnnotationTrack,
    config: &CorrectionConfig,
) -> Result<(AnnotationTrack, Diagnostics)> {
    config.validate()?;
    let mut current = track.clone();
    let mut passes = Vec::with_capacity(config.passes);
    for _ in 0..config.passes {
        let (next, chains) = correct_pass(frames, &current, config)?;
        passes.push(PassDiagnostics { chains });
        current = next;
    }
    Ok((
        current,
        Diagnostics {
            video_id: track.video_id().to_string(),
            config: *config,
            passes,
        },
    ))
}
