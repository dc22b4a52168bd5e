//! Detection and tracking metrics: IoU, Pascal hit / false-alarm accounting,
//! hit rate, false alarms per minute, tracking accuracy (TA) and the
//! modified tracking accuracy (MTA) that charges every extra detection.

mod calibrate;
mod diff;
mod report;

pub use calibrate::{calibrate_threshold, calibrate_threshold_many, Calibration};
pub use diff::{compare_tracks, compare_tracks_many, diff_stats, diff_stats_many, mean_std, DiffStats};
pub use report::{evaluate, evaluate_many, DatasetReport, EvalReport, TableLayout, Tally};

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationTrack, BoundingBox, Detection, DetectionSet, FrameLabel};
use crate::error::{Error, Result};

/// IoU at or above which a detection counts as a hit.
pub const HIT_IOU: f64 = 0.5;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Objectness cut-off. Inclusive thresholds keep `score >= value`; an
/// exclusive one keeps `score > value`, which lets calibration express
/// "just above the highest score".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    #[serde(default)]
    pub exclusive: bool,
}

impl Threshold {
    pub const KEEP_ALL: Threshold = Threshold {
        value: 0.0,
        exclusive: false,
    };

    pub fn inclusive(value: f64) -> Self {
        Self {
            value,
            exclusive: false,
        }
    }

    pub fn exclusive(value: f64) -> Self {
        Self { value, exclusive: true }
    }

    pub fn keeps(&self, score: f64) -> bool {
        if self.exclusive {
            score > self.value
        } else {
            score >= self.value
        }
    }

    pub fn apply<'a>(&self, dets: &'a [Detection]) -> Vec<&'a Detection> {
        dets.iter().filter(|d| self.keeps(d.score())).collect()
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.exclusive {
            write!(f, ">{}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// Outcome of one frame under the Pascal hit / false-alarm rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    /// 0-based frame index.
    pub t: usize,
    pub visible: bool,
    /// Detections that survived the threshold.
    pub n: usize,
    pub best_iou: f64,
    pub hit: bool,
    pub false_alarms: usize,
}

/// Classifies already-thresholded detections against one frame label.
///
/// A hit needs IoU >= 0.5 with a visible target. Only detections with zero
/// overlap are false alarms; partial overlaps below 0.5 are neither.
pub fn classify_frame(t: usize, label: &FrameLabel, dets: &[&Detection]) -> FrameOutcome {
    let (best_iou, false_alarms) = match label.rect() {
        Some(gt) => {
            let ious: Vec<f64> = dets.iter().map(|d| iou(d.rect(), gt)).collect();
            let best = ious.iter().copied().fold(0.0, f64::max);
            (best, ious.iter().filter(|&&v| v == 0.0).count())
        }
        None => (0.0, dets.len()),
    };
    FrameOutcome {
        t,
        visible: label.exists(),
        n: dets.len(),
        best_iou,
        hit: label.exists() && best_iou >= HIT_IOU,
        false_alarms,
    }
}

pub fn classify_track(track: &AnnotationTrack, dets: &DetectionSet, threshold: Threshold) -> Result<Vec<FrameOutcome>> {
    check_lengths(track, dets)?;
    Ok(track
        .labels()
        .iter()
        .zip(dets.frames())
        .enumerate()
        .map(|(t, (label, frame))| classify_frame(t, label, &threshold.apply(frame)))
        .collect())
}

/// Percentage of visible frames that were hit.
pub fn hit_rate(outcomes: &[FrameOutcome]) -> Result<f64> {
    let visible = outcomes.iter().filter(|o| o.visible).count();
    if visible == 0 {
        return Err(Error::UndefinedMetric("hit rate needs at least one visible frame"));
    }
    let hits = outcomes.iter().filter(|o| o.hit).count();
    Ok(100.0 * hits as f64 / visible as f64)
}

/// False alarms per minute of video.
pub fn fa_per_min(outcomes: &[FrameOutcome], fps: f64) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::UndefinedMetric("false-alarm rate needs at least one frame"));
    }
    if fps.is_nan() || fps <= 0.0 {
        return Err(Error::validation(None, format!("fps must be positive, got {fps}")));
    }
    let fas: usize = outcomes.iter().map(|o| o.false_alarms).sum();
    Ok(fas as f64 * 60.0 * fps / outcomes.len() as f64)
}

/// Per-frame inputs of TA and MTA: visibility, surviving detection count and
/// the IoU of the highest-scoring survivor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TrackingTerm {
    pub visible: bool,
    pub n: usize,
    pub iou: f64,
}

impl TrackingTerm {
    pub fn ta(&self) -> f64 {
        let v = f64::from(u8::from(self.visible));
        let p = f64::from(u8::from(self.n > 0));
        self.iou * v * p + (1.0 - p) * (1.0 - v)
    }

    /// MTA shares the TA numerator.
    pub fn mta_den(&self) -> f64 {
        let v = f64::from(u8::from(self.visible));
        let p = f64::from(u8::from(self.n > 0));
        v.max(self.n as f64) + (1.0 - p) * (1.0 - v)
    }
}

pub(crate) fn tracking_term(label: &FrameLabel, survivors: &[&Detection]) -> TrackingTerm {
    // Highest score wins; the first one listed on ties.
    let top = survivors.iter().fold(None::<&Detection>, |best, d| match best {
        Some(b) if b.score() >= d.score() => Some(b),
        _ => Some(d),
    });
    let iou = match (label.rect(), top) {
        (Some(gt), Some(d)) => iou(d.rect(), gt),
        _ => 0.0,
    };
    TrackingTerm {
        visible: label.exists(),
        n: survivors.len(),
        iou,
    }
}

fn tracking_terms(track: &AnnotationTrack, dets: &DetectionSet, threshold: Threshold) -> Result<Vec<TrackingTerm>> {
    check_lengths(track, dets)?;
    Ok(track
        .labels()
        .iter()
        .zip(dets.frames())
        .map(|(label, frame)| tracking_term(label, &threshold.apply(frame)))
        .collect())
}

/// Tracking accuracy in percent.
pub fn tracking_accuracy(track: &AnnotationTrack, dets: &DetectionSet, threshold: Threshold) -> Result<f64> {
    let terms = tracking_terms(track, dets, threshold)?;
    Ok(100.0 * terms.iter().map(TrackingTerm::ta).sum::<f64>() / terms.len() as f64)
}

/// Modified tracking accuracy in percent: every surviving detection beyond
/// the first adds one to the denominator.
pub fn modified_tracking_accuracy(track: &AnnotationTrack, dets: &DetectionSet, threshold: Threshold) -> Result<f64> {
    let terms = tracking_terms(track, dets, threshold)?;
    let num: f64 = terms.iter().map(TrackingTerm::ta).sum();
    let den: f64 = terms.iter().map(TrackingTerm::mta_den).sum();
    Ok(100.0 * num / den)
}

pub(crate) fn check_lengths(track: &AnnotationTrack, dets: &DetectionSet) -> Result<()> {
    if track.len() != dets.len() {
        return Err(Error::LengthMismatch {
            annotations: track.len(),
            other: dets.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn det(b: BoundingBox, s: f64) -> Detection {
        Detection::new(b, s).unwrap()
    }

    #[test]
    fn iou_analytic_cases() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(20.0, 20.0, 5.0, 5.0)), 0.0);
        assert!((iou(&a, &bb(5.0, 0.0, 10.0, 10.0)) - 1.0 / 3.0).abs() < 1e-15);
        // touching edges do not overlap
        assert_eq!(iou(&a, &bb(10.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn pascal_hit() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let d = det(bb(1.0, 1.0, 10.0, 10.0), 0.9); // IoU 81/119 ~ 0.68
        let o = classify_frame(0, &FrameLabel::visible(gt), &[&d]);
        assert!(o.hit);
        assert_eq!(o.false_alarms, 0);
    }

    #[test]
    fn partial_overlap_is_not_a_false_alarm() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let weak = det(bb(7.0, 0.0, 10.0, 10.0), 0.9); // IoU 30/170
        let far = det(bb(50.0, 50.0, 10.0, 10.0), 0.8);
        let o = classify_frame(0, &FrameLabel::visible(gt), &[&weak, &far]);
        assert!(!o.hit);
        assert_eq!(o.false_alarms, 1);
        assert_eq!(o.n, 2);
    }

    #[test]
    fn invisible_frame_counts_every_detection() {
        let ds: Vec<Detection> = (0..3).map(|i| det(bb(i as f64 * 20.0, 0.0, 5.0, 5.0), 0.5)).collect();
        let refs: Vec<&Detection> = ds.iter().collect();
        let o = classify_frame(0, &FrameLabel::invisible(), &refs);
        assert!(!o.hit);
        assert_eq!(o.false_alarms, 3);
    }

    #[test]
    fn hit_boundary_is_inclusive() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        // 10x10 vs 10x20 sharing the top half: IoU = 100/200 = 0.5
        let d = det(bb(0.0, 0.0, 10.0, 20.0), 1.0);
        assert!(classify_frame(0, &FrameLabel::visible(gt), &[&d]).hit);
    }

    fn outcome(visible: bool, hit: bool, fa: usize) -> FrameOutcome {
        FrameOutcome {
            t: 0,
            visible,
            n: fa + usize::from(hit),
            best_iou: if hit { 1.0 } else { 0.0 },
            hit,
            false_alarms: fa,
        }
    }

    #[test]
    fn hit_rate_counts_visible_frames() {
        let mut v: Vec<FrameOutcome> = (0..97).map(|_| outcome(true, true, 0)).collect();
        v.extend((0..3).map(|_| outcome(true, false, 0)));
        v.extend((0..5).map(|_| outcome(false, false, 0)));
        assert_eq!(hit_rate(&v).unwrap(), 97.0);
        assert!(hit_rate(&[outcome(false, false, 1)]).is_err());
    }

    #[test]
    fn one_minute_of_video() {
        let mut v: Vec<FrameOutcome> = (0..1800).map(|_| outcome(false, false, 0)).collect();
        assert_eq!(fa_per_min(&v, 30.0).unwrap(), 0.0);
        for o in v.iter_mut().take(3) {
            o.false_alarms = 1;
        }
        assert_eq!(fa_per_min(&v, 30.0).unwrap(), 3.0);
        assert!(fa_per_min(&[], 30.0).is_err());
    }

    #[test]
    fn fa_rate_granularity_at_five_thousand_four_hundred_frames() {
        // 3 minutes at 30 fps: 2.4 FA/min is 7.2 false alarms, so the
        // reachable rates bracketing it are 7 -> 2.333.. and 8 -> 2.666..
        let mut v: Vec<FrameOutcome> = (0..5400).map(|_| outcome(false, false, 0)).collect();
        for o in v.iter_mut().take(7) {
            o.false_alarms = 1;
        }
        let rate = fa_per_min(&v, 30.0).unwrap();
        assert!((rate - 7.0 / 3.0).abs() < 1e-12);
        assert!(rate <= 2.4);
    }

    fn track(labels: Vec<FrameLabel>) -> AnnotationTrack {
        AnnotationTrack::new("v", 30.0, labels).unwrap()
    }

    #[test]
    fn ta_two_frame_example() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        // IoU 0.8: 10x10 vs 10x8 inside it
        let d = det(bb(0.0, 0.0, 10.0, 8.0), 0.9);
        let tr = track(vec![FrameLabel::visible(gt), FrameLabel::invisible()]);
        let ds = DetectionSet::new("v", vec![vec![d], vec![]]);
        let ta = tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap();
        assert!((ta - 90.0).abs() < 1e-12);
    }

    #[test]
    fn ta_all_invisible_no_detections() {
        let tr = track(vec![FrameLabel::invisible(); 4]);
        let ds = DetectionSet::empty("v", 4);
        assert_eq!(tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap(), 100.0);
        assert_eq!(
            modified_tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap(),
            100.0
        );
    }

    #[test]
    fn mta_three_detections() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let best = det(bb(0.0, 0.0, 10.0, 9.0), 0.95); // IoU 0.9
        let d2 = det(bb(40.0, 0.0, 10.0, 10.0), 0.5);
        let d3 = det(bb(0.0, 40.0, 10.0, 10.0), 0.4);
        let tr = track(vec![FrameLabel::visible(gt)]);
        let ds = DetectionSet::new("v", vec![vec![d2, best, d3]]);
        let mta = modified_tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap();
        assert!((mta - 30.0).abs() < 1e-12);
        let ta = tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap();
        assert!((ta - 90.0).abs() < 1e-12);
    }

    #[test]
    fn ta_uses_highest_score_not_best_overlap() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let good = det(gt, 0.6);
        let bad = det(bb(30.0, 30.0, 10.0, 10.0), 0.9);
        let tr = track(vec![FrameLabel::visible(gt)]);
        let ds = DetectionSet::new("v", vec![vec![good, bad]]);
        assert_eq!(tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL).unwrap(), 0.0);
        // ...while the hit rule looks at any surviving detection
        let o = classify_track(&tr, &ds, Threshold::KEEP_ALL).unwrap();
        assert!(o[0].hit);
    }

    #[test]
    fn threshold_filters_detections() {
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let tr = track(vec![FrameLabel::visible(gt)]);
        let ds = DetectionSet::new("v", vec![vec![det(gt, 0.4)]]);
        assert_eq!(tracking_accuracy(&tr, &ds, Threshold::inclusive(0.4)).unwrap(), 100.0);
        assert_eq!(tracking_accuracy(&tr, &ds, Threshold::exclusive(0.4)).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        let tr = track(vec![FrameLabel::invisible(); 3]);
        let ds = DetectionSet::empty("v", 2);
        assert!(matches!(
            tracking_accuracy(&tr, &ds, Threshold::KEEP_ALL),
            Err(Error::LengthMismatch {
                annotations: 3,
                other: 2
            })
        ));
    }
}
