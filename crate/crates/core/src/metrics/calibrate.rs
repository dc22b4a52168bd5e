use serde::{Deserialize, Serialize};

use super::{check_lengths, iou, Threshold};
use crate::annotation::{AnnotationTrack, DetectionSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: Threshold,
    /// False-alarm rate achieved at `threshold`.
    pub fa_per_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Smallest objectness threshold whose false-alarm rate does not exceed
/// `target` (false alarms per minute).
pub fn calibrate_threshold(track: &AnnotationTrack, dets: &DetectionSet, target: f64) -> Result<Calibration> {
    calibrate(&[(track, dets)], target)
}

/// [`calibrate_threshold`] with the false-alarm rate pooled over several videos.
pub fn calibrate_threshold_many(pairs: &[(AnnotationTrack, DetectionSet)], target: f64) -> Result<Calibration> {
    let refs: Vec<(&AnnotationTrack, &DetectionSet)> = pairs.iter().map(|(t, d)| (t, d)).collect();
    calibrate(&refs, target)
}

fn calibrate(pairs: &[(&AnnotationTrack, &DetectionSet)], target: f64) -> Result<Calibration> {
    if target.is_nan() || target < 0.0 {
        return Err(Error::validation(
            None,
            format!("target false-alarm rate must be >= 0, got {target}"),
        ));
    }
    let mut minutes = 0.0;
    // (score, is_false_alarm) for every detection. Whether a detection is a
    // false alarm does not depend on which other detections survive.
    let mut scored = Vec::new();
    for (track, dets) in pairs {
        check_lengths(track, dets)?;
        minutes += track.len() as f64 / (60.0 * track.fps());
        for (label, frame) in track.labels().iter().zip(dets.frames()) {
            for d in frame {
                let fa = label.rect().is_none_or(|gt| iou(d.rect(), gt) == 0.0);
                scored.push((d.score(), fa));
            }
        }
    }

    if scored.is_empty() {
        let warning = "no detections; every threshold gives zero false alarms".to_owned();
        log::warn!("{warning}");
        return Ok(Calibration {
            threshold: Threshold::KEEP_ALL,
            fa_per_min: 0.0,
            warning: Some(warning),
        });
    }

    let mut scores: Vec<f64> = scored.iter().map(|&(s, _)| s).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let top = *scores.last().expect("non-empty");
    let candidates: Vec<Threshold> = scores
        .iter()
        .map(|&s| Threshold::inclusive(s))
        .chain(std::iter::once(Threshold::exclusive(top)))
        .collect();

    let rate = |th: &Threshold| {
        let fas = scored.iter().filter(|&&(s, fa)| fa && th.keeps(s)).count();
        fas as f64 / minutes
    };
    // The rate is non-increasing along `candidates`, and the last candidate
    // keeps nothing, so a satisfying index always exists.
    let idx = candidates.partition_point(|th| rate(th) > target);
    let threshold = if idx == 0 { Threshold::KEEP_ALL } else { candidates[idx] };
    Ok(Calibration {
        threshold,
        fa_per_min: rate(&threshold),
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{BoundingBox, Detection, FrameLabel};

    fn far(score: f64) -> Detection {
        Detection::new(BoundingBox::new(100.0, 100.0, 5.0, 5.0).unwrap(), score).unwrap()
    }

    fn track(n: usize) -> AnnotationTrack {
        let gt = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        AnnotationTrack::new("v", 30.0, vec![FrameLabel::visible(gt); n]).unwrap()
    }

    #[test]
    fn all_false_alarms_at_same_score() {
        let dets = DetectionSet::new("v", vec![vec![far(0.9)], vec![far(0.9), far(0.9)]]);
        let c = calibrate_threshold(&track(2), &dets, 0.0).unwrap();
        assert_eq!(c.threshold, Threshold::exclusive(0.9));
        assert_eq!(c.fa_per_min, 0.0);
    }

    #[test]
    fn infinite_target_keeps_everything() {
        let dets = DetectionSet::new("v", vec![vec![far(0.3)], vec![far(0.9)]]);
        let c = calibrate_threshold(&track(2), &dets, f64::INFINITY).unwrap();
        assert_eq!(c.threshold, Threshold::KEEP_ALL);
    }

    #[test]
    fn picks_lowest_satisfying_score() {
        // 1800 frames = 1 minute; FAs at scores 0.2, 0.5, 0.8
        let mut frames = vec![Vec::new(); 1800];
        frames[0] = vec![far(0.2)];
        frames[1] = vec![far(0.5)];
        frames[2] = vec![far(0.8)];
        let dets = DetectionSet::new("v", frames);
        let c = calibrate_threshold(&track(1800), &dets, 1.0).unwrap();
        assert_eq!(c.threshold, Threshold::inclusive(0.8));
        assert_eq!(c.fa_per_min, 1.0);
        let c = calibrate_threshold(&track(1800), &dets, 2.0).unwrap();
        assert_eq!(c.threshold, Threshold::inclusive(0.5));
    }

    #[test]
    fn empty_detections_warn() {
        let c = calibrate_threshold(&track(3), &DetectionSet::empty("v", 3), 1.0).unwrap();
        assert_eq!(c.threshold, Threshold::KEEP_ALL);
        assert!(c.warning.is_some());
    }

    #[test]
    fn negative_target_rejected() {
        assert!(calibrate_threshold(&track(1), &DetectionSet::empty("v", 1), -1.0).is_err());
    }
}
