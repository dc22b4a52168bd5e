//! JSON file formats for annotation tracks and detection sets.
//!
//! Annotation file:
//! `{"video_id": str, "fps": number, "exist": [0|1, ...], "gt_rect": [[x,y,w,h] | null, ...]}`
//!
//! Detection file:
//! `{"video_id": str, "frames": [[{"rect": [x,y,w,h], "score": s}, ...], ...]}`
//!
//! Writers are deterministic: fixed key order and shortest round-trip
//! decimal formatting, so `parse(write(t)) == t` and re-serialising parsed
//! output reproduces the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationTrack, BoundingBox, Detection, DetectionSet, FrameLabel, DEFAULT_FPS};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct AnnotationFileIn {
    #[serde(default)]
    video_id: String,
    #[serde(default = "default_fps")]
    fps: f64,
    exist: Vec<u8>,
    // Invisible frames may carry a placeholder rect of any shape; it is dropped.
    gt_rect: Vec<Option<Vec<f64>>>,
}

#[derive(Serialize)]
struct AnnotationFileOut<'a> {
    video_id: &'a str,
    fps: f64,
    exist: Vec<u8>,
    gt_rect: Vec<Option<[f64; 4]>>,
}

fn default_fps() -> f64 {
    DEFAULT_FPS
}

#[derive(Serialize, Deserialize)]
struct DetectionFile {
    video_id: String,
    frames: Vec<Vec<Detection>>,
}

pub fn parse_annotations(bytes: &[u8]) -> Result<AnnotationTrack> {
    let raw: AnnotationFileIn = serde_json::from_slice(bytes)?;
    if raw.exist.len() != raw.gt_rect.len() {
        return Err(Error::validation(
            None,
            format!(
                "exist has {} entries but gt_rect has {}",
                raw.exist.len(),
                raw.gt_rect.len()
            ),
        ));
    }
    let labels =
        raw.exist
            .iter()
            .zip(raw.gt_rect)
            .enumerate()
            .map(|(i, (&flag, rect))| {
                let t = i + 1;
                match flag {
                    0 => Ok(FrameLabel::invisible()),
                    1 => {
                        let v = rect.ok_or_else(|| Error::validation(Some(t), "exist=1 but gt_rect is missing"))?;
                        let arr: [f64; 4] = v.as_slice().try_into().map_err(|_| {
                            Error::validation(Some(t), format!("gt_rect has {} values, need 4", v.len()))
                        })?;
                        BoundingBox::try_from(arr)
                            .map(FrameLabel::visible)
                            .map_err(|e| relabel(e, t))
                    }
                    other => Err(Error::validation(
                        Some(t),
                        format!("exist flag must be 0 or 1, got {other}"),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
    AnnotationTrack::new(raw.video_id, raw.fps, labels)
}

fn relabel(e: Error, t: usize) -> Error {
    match e {
        Error::Validation { message, .. } => Error::validation(Some(t), message),
        other => other,
    }
}

pub fn write_annotations(track: &AnnotationTrack) -> Vec<u8> {
    let out = AnnotationFileOut {
        video_id: track.video_id(),
        fps: track.fps(),
        exist: track.labels().iter().map(|l| u8::from(l.exists())).collect(),
        gt_rect: track
            .labels()
            .iter()
            .map(|l| l.rect().map(BoundingBox::to_array))
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&out).expect("annotation serialisation cannot fail");
    bytes.push(b'\n');
    bytes
}

pub fn parse_detections(bytes: &[u8]) -> Result<DetectionSet> {
    let raw: DetectionFile = serde_json::from_slice(bytes).map_err(|e| {
        // Range violations surface as serde custom errors; report them as validation.
        if e.is_data() && e.to_string().contains("outside [0, 1]") {
            Error::validation(None, e.to_string())
        } else {
            Error::from(e)
        }
    })?;
    Ok(DetectionSet::new(raw.video_id, raw.frames))
}

pub fn write_detections(set: &DetectionSet) -> Vec<u8> {
    let out = DetectionFile {
        video_id: set.video_id().to_owned(),
        frames: set.frames().to_vec(),
    };
    let mut bytes = serde_json::to_vec(&out).expect("detection serialisation cannot fail");
    bytes.push(b'\n');
    bytes
}

pub fn read_annotations(path: &Path) -> Result<AnnotationTrack> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&bytes)
}

pub fn read_detections(path: &Path) -> Result<DetectionSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&bytes)
}
