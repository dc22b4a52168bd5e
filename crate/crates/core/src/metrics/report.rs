use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{check_lengths, classify_frame, tracking_term, FrameOutcome, Threshold, TrackingTerm};
use crate::annotation::{AnnotationTrack, DetectionSet};
use crate::error::{Error, Result};

/// Running sums behind every aggregate metric. Tallies of different videos
/// merge by addition, so dataset figures are pooled over frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub frames: usize,
    pub visible: usize,
    pub hits: usize,
    pub false_alarms: usize,
    pub minutes: f64,
    pub ta_sum: f64,
    pub mta_den: f64,
}

impl Tally {
    fn add(&mut self, outcome: &FrameOutcome, term: &TrackingTerm) {
        self.frames += 1;
        self.visible += usize::from(outcome.visible);
        self.hits += usize::from(outcome.hit);
        self.false_alarms += outcome.false_alarms;
        self.ta_sum += term.ta();
        self.mta_den += term.mta_den();
    }

    pub fn merge(&mut self, other: &Tally) {
        self.frames += other.frames;
        self.visible += other.visible;
        self.hits += other.hits;
        self.false_alarms += other.false_alarms;
        self.minutes += other.minutes;
        self.ta_sum += other.ta_sum;
        self.mta_den += other.mta_den;
    }

    pub fn hit_rate(&self) -> Option<f64> {
        (self.visible > 0).then(|| 100.0 * self.hits as f64 / self.visible as f64)
    }

    pub fn fa_per_min(&self) -> f64 {
        if self.minutes > 0.0 {
            self.false_alarms as f64 / self.minutes
        } else {
            0.0
        }
    }

    pub fn ta(&self) -> f64 {
        100.0 * self.ta_sum / self.frames as f64
    }

    pub fn mta(&self) -> f64 {
        100.0 * self.ta_sum / self.mta_den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub video_id: String,
    pub threshold: Threshold,
    /// `None` when no frame is visible.
    pub hit_rate: Option<f64>,
    pub fa_per_min: f64,
    pub ta: f64,
    pub mta: f64,
    pub frames: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<FrameOutcome>,
}

impl EvalReport {
    fn from_tally(video_id: String, threshold: Threshold, tally: &Tally, outcomes: Vec<FrameOutcome>) -> Self {
        Self {
            video_id,
            threshold,
            hit_rate: tally.hit_rate(),
            fa_per_min: tally.fa_per_min(),
            ta: tally.ta(),
            mta: tally.mta(),
            frames: tally.frames,
            outcomes,
        }
    }
}

pub(crate) fn tally_video(
    track: &AnnotationTrack,
    dets: &DetectionSet,
    threshold: Threshold,
) -> Result<(Tally, Vec<FrameOutcome>)> {
    check_lengths(track, dets)?;
    let mut tally = Tally::default();
    let mut outcomes = Vec::with_capacity(track.len());
    for (t, (label, frame)) in track.labels().iter().zip(dets.frames()).enumerate() {
        let survivors = threshold.apply(frame);
        let outcome = classify_frame(t, label, &survivors);
        tally.add(&outcome, &tracking_term(label, &survivors));
        outcomes.push(outcome);
    }
    tally.minutes = track.len() as f64 / (60.0 * track.fps());
    Ok((tally, outcomes))
}

/// Evaluates one video at a fixed threshold.
pub fn evaluate(track: &AnnotationTrack, dets: &DetectionSet, threshold: Threshold) -> Result<EvalReport> {
    let (tally, outcomes) = tally_video(track, dets, threshold)?;
    Ok(EvalReport::from_tally(
        track.video_id().to_owned(),
        threshold,
        &tally,
        outcomes,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub summary: EvalReport,
    pub videos: Vec<EvalReport>,
}

/// Evaluates several videos at one threshold; the summary pools all frames.
pub fn evaluate_many(pairs: &[(AnnotationTrack, DetectionSet)], threshold: Threshold) -> Result<DatasetReport> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric("no videos to evaluate"));
    }
    let mut total = Tally::default();
    let mut videos = Vec::with_capacity(pairs.len());
    for (track, dets) in pairs {
        let (tally, _) = tally_video(track, dets, threshold)?;
        total.merge(&tally);
        videos.push(EvalReport::from_tally(
            track.video_id().to_owned(),
            threshold,
            &tally,
            Vec::new(),
        ));
    }
    Ok(DatasetReport {
        summary: EvalReport::from_tally("all".to_owned(), threshold, &total, Vec::new()),
        videos,
    })
}

/// Column layout of the plain-text table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// FA, HR, TA, MTA: results at a fixed objectness threshold.
    FixedThreshold,
    /// Th, HR, TA, MTA: results at a calibrated false-alarm rate.
    FixedFaRate,
}

impl DatasetReport {
    pub fn table(&self, layout: TableLayout) -> String {
        let first = match layout {
            TableLayout::FixedThreshold => "FA/min",
            TableLayout::FixedFaRate => "Th",
        };
        let rows: Vec<&EvalReport> = self.videos.iter().chain(std::iter::once(&self.summary)).collect();
        let id_width = rows.iter().map(|r| r.video_id.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<id_width$}  {:>8}  {:>7}  {:>7}  {:>7}",
            "video", first, "HR%", "TA%", "MTA%"
        );
        for r in rows {
            let lead = match layout {
                TableLayout::FixedThreshold => format!("{:.2}", r.fa_per_min),
                TableLayout::FixedFaRate => r.threshold.to_string(),
            };
            let hr = r.hit_rate.map_or_else(|| "-".to_owned(), |h| format!("{h:.1}"));
            let _ = writeln!(
                out,
                "{:<id_width$}  {:>8}  {:>7}  {:>7.1}  {:>7.1}",
                r.video_id, lead, hr, r.ta, r.mta
            );
        }
        out
    }
}
