//! Annotation tracks and detector outputs.
//!
//! All values here are immutable once constructed and validated; the only way
//! to obtain one is through a checking constructor or the parsers in
//! [`crate::format`].

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default frame rate of the thermal videos the toolkit was built around.
pub const DEFAULT_FPS: f64 = 30.0;

/// Axis-aligned rectangle in pixel coordinates, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::validation(None, "box coordinates must be finite"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::validation(
                None,
                format!("box size must be positive, got {w}x{h}"),
            ));
        }
        Ok(Self { x, y, w, h })
    }

    /// Builds a box from its center point and size.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    /// Same size, origin moved by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// Same size, origin replaced.
    pub fn with_origin(&self, x: f64, y: f64) -> Self {
        Self { x, y, ..*self }
    }

    /// Overlap per axis is `min(w_a, w_b, w_a + (x_a - x_b), w_b + (x_b - x_a))`,
    /// which is exact for identical boxes and symmetric in its arguments.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let overlap = |a0: f64, aw: f64, b0: f64, bw: f64| aw.min(bw).min(aw + (a0 - b0)).min(bw + (b0 - a0));
        let iw = overlap(self.x, self.w, other.x, other.w);
        let ih = overlap(self.y, self.h, other.y, other.h);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl Serialize for BoundingBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(deserializer)?;
        BoundingBox::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// Ground truth for one frame: either a visible object with its box, or
/// nothing. The visibility flag is derived from the presence of the box.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameLabel {
    rect: Option<BoundingBox>,
}

impl FrameLabel {
    pub fn visible(rect: BoundingBox) -> Self {
        Self { rect: Some(rect) }
    }

    pub fn invisible() -> Self {
        Self { rect: None }
    }

    pub fn exists(&self) -> bool {
        self.rect.is_some()
    }

    pub fn rect(&self) -> Option<&BoundingBox> {
        self.rect.as_ref()
    }
}

impl From<Option<BoundingBox>> for FrameLabel {
    fn from(rect: Option<BoundingBox>) -> Self {
        Self { rect }
    }
}

/// Per-video sequence of frame labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTrack {
    video_id: String,
    fps: f64,
    labels: Vec<FrameLabel>,
}

impl AnnotationTrack {
    pub fn new(video_id: impl Into<String>, fps: f64, labels: Vec<FrameLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation(None, "annotation track has no frames"));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::validation(None, format!("fps must be positive, got {fps}")));
        }
        Ok(Self {
            video_id: video_id.into(),
            fps,
            labels,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn labels(&self) -> &[FrameLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false for a constructed track; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn visible_count(&self) -> usize {
        self.labels.iter().filter(|l| l.exists()).count()
    }

    /// Returns a copy with the labels replaced. The frame count may change
    /// but must stay non-zero.
    pub fn with_labels(&self, labels: Vec<FrameLabel>) -> Result<Self> {
        Self::new(self.video_id.clone(), self.fps, labels)
    }

    pub fn with_fps(&self, fps: f64) -> Result<Self> {
        Self::new(self.video_id.clone(), fps, self.labels.clone())
    }

    /// Maximal runs of visible frames as inclusive `(start, end)` index pairs.
    pub fn visible_segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, l) in self.labels.iter().enumerate() {
            match (l.exists(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.labels.len() - 1));
        }
        out
    }
}

/// One scored detector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetection")]
pub struct Detection {
    rect: BoundingBox,
    score: f64,
}

#[derive(Deserialize)]
struct RawDetection {
    rect: BoundingBox,
    score: f64,
}

impl TryFrom<RawDetection> for Detection {
    type Error = Error;

    fn try_from(raw: RawDetection) -> Result<Self> {
        Detection::new(raw.rect, raw.score)
    }
}

impl Detection {
    pub fn new(rect: BoundingBox, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::validation(
                None,
                format!("detection score {score} outside [0, 1]"),
            ));
        }
        Ok(Self { rect, score })
    }

    pub fn rect(&self) -> &BoundingBox {
        &self.rect
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Per-frame detector outputs for one video. Frames may be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    video_id: String,
    frames: Vec<Vec<Detection>>,
}

impl DetectionSet {
    pub fn new(video_id: impl Into<String>, frames: Vec<Vec<Detection>>) -> Self {
        Self {
            video_id: video_id.into(),
            frames,
        }
    }

    /// A set with `len` empty frames.
    pub fn empty(video_id: impl Into<String>, len: usize) -> Self {
        Self::new(video_id, vec![Vec::new(); len])
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frames(&self) -> &[Vec<Detection>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn detection_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }
}
