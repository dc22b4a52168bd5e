//! Tools for measuring, simulating and repairing annotation errors in
//! single-object video detection datasets.
//!
//! - [`annotation`] / [`format`]: annotation tracks, detections and their JSON files.
//! - [`imaging`]: grayscale frames, patches and ZNCC template search.
//! - [`metrics`]: hit rate, false alarms per minute, TA / MTA, threshold
//!   calibration and annotation difference statistics.
//! - [`noise`]: seeded injection of additional, missing and shifted boxes.
//! - [`correction`]: two-pass template-matching correction with drift detrending.
//! - [`synthetic`]: generated static-scene videos for testing and benchmarks.

pub mod annotation;
pub mod correction;
pub mod error;
pub mod format;
pub mod imaging;
pub mod metrics;
pub mod noise;
pub mod synthetic;

pub use annotation::{AnnotationTrack, BoundingBox, Detection, DetectionSet, FrameLabel};
pub use error::{Error, Result};
