use serde::{Deserialize, Serialize};

use super::NoisyTrack;
use crate::annotation::{AnnotationTrack, BoundingBox, FrameLabel};
use crate::error::{Error, Result};

/// Where an added box came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddedBy {
    Random,
    Tracked,
}

/// One change made by an injector. `frame` is a 0-based index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionRecord {
    Added {
        frame: usize,
        rect: BoundingBox,
        by: AddedBy,
    },
    Removed {
        frame: usize,
        original: BoundingBox,
    },
    Shifted {
        frame: usize,
        original: BoundingBox,
        shifted: BoundingBox,
        clamped: bool,
    },
    /// A planned change that could not be made; the track is untouched.
    Skipped {
        frame: usize,
        reason: String,
    },
}

impl InjectionRecord {
    pub fn frame(&self) -> usize {
        match self {
            InjectionRecord::Added { frame, .. }
            | InjectionRecord::Removed { frame, .. }
            | InjectionRecord::Shifted { frame, .. }
            | InjectionRecord::Skipped { frame, .. } => *frame,
        }
    }
}

/// Ordered list of changes. Replaying it onto the clean track reproduces
/// the corrupted one exactly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InjectionLog {
    pub records: Vec<InjectionRecord>,
}

impl InjectionLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn extend(&mut self, other: InjectionLog) {
        self.records.extend(other.records);
    }

    pub fn count(&self, pred: impl Fn(&InjectionRecord) -> bool) -> usize {
        self.records.iter().filter(|r| pred(r)).count()
    }

    /// Replays the log onto `clean`. Removed and shifted records must find
    /// their recorded original box in place.
    pub fn replay(&self, clean: &AnnotationTrack) -> Result<NoisyTrack> {
        let mut labels = clean.labels().to_vec();
        let mut extra = vec![Vec::new(); labels.len()];
        for record in &self.records {
            let frame = record.frame();
            if frame >= labels.len() {
                return Err(Error::ReplayMismatch {
                    frame,
                    message: format!("track has only {} frames", labels.len()),
                });
            }
            match record {
                InjectionRecord::Added { rect, .. } => extra[frame].push(*rect),
                InjectionRecord::Removed { original, .. } => {
                    expect_box(&labels[frame], original, frame)?;
                    labels[frame] = FrameLabel::invisible();
                }
                InjectionRecord::Shifted { original, shifted, .. } => {
                    expect_box(&labels[frame], original, frame)?;
                    labels[frame] = FrameLabel::visible(*shifted);
                }
                InjectionRecord::Skipped { .. } => {}
            }
        }
        Ok(NoisyTrack::from_parts(clean.with_labels(labels)?, extra))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("log serialisation cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

fn expect_box(label: &FrameLabel, original: &BoundingBox, frame: usize) -> Result<()> {
    if label.rect() != Some(original) {
        return Err(Error::ReplayMismatch {
            frame,
            message: format!(
                "expected box {:?}, found {:?}",
                original.to_array(),
                label.rect().map(BoundingBox::to_array)
            ),
        });
    }
    Ok(())
}
