use serde::{Deserialize, Serialize};

use super::iou;
use crate::annotation::AnnotationTrack;
use crate::error::{Error, Result};

/// Center differences between two annotation sets, in pixels and normalised
/// by the reference box size. Standard deviations are population values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub mean_x: f64,
    pub std_x: f64,
    pub mean_y: f64,
    pub std_y: f64,
    pub norm_mean_x: f64,
    pub norm_std_x: f64,
    pub norm_mean_y: f64,
    pub norm_std_y: f64,
    /// Frames visible in both sets.
    pub frames: usize,
}

/// Statistics of `center(b) - center(a)` over frames visible in both tracks.
pub fn diff_stats(a: &AnnotationTrack, b: &AnnotationTrack) -> Result<DiffStats> {
    diff_stats_many(&[(a.clone(), b.clone())])
}

pub fn diff_stats_many(pairs: &[(AnnotationTrack, AnnotationTrack)]) -> Result<DiffStats> {
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (a, b) in pairs {
        same_length(a, b)?;
        for (la, lb) in a.labels().iter().zip(b.labels()) {
            if let (Some(ra), Some(rb)) = (la.rect(), lb.rect()) {
                let (ax, ay) = ra.center();
                let (bx, by) = rb.center();
                let (dx, dy) = (bx - ax, by - ay);
                cols[0].push(dx);
                cols[1].push(dy);
                cols[2].push(dx / ra.w());
                cols[3].push(dy / ra.h());
            }
        }
    }
    if cols[0].is_empty() {
        return Err(Error::UndefinedMetric("no frame is visible in both annotation sets"));
    }
    let [(mean_x, std_x), (mean_y, std_y), (norm_mean_x, norm_std_x), (norm_mean_y, norm_std_y)] =
        cols.each_ref().map(|c| mean_std(c));
    Ok(DiffStats {
        mean_x,
        std_x,
        mean_y,
        std_y,
        norm_mean_x,
        norm_std_x,
        norm_mean_y,
        norm_std_y,
        frames: cols[0].len(),
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Tracking accuracy of `b` scored against `a`, treating every visible box
/// of `b` as a single prediction.
pub fn compare_tracks(a: &AnnotationTrack, b: &AnnotationTrack) -> Result<f64> {
    let (sum, frames) = compare_sum(a, b)?;
    Ok(100.0 * sum / frames as f64)
}

/// [`compare_tracks`] pooled over the frames of several videos.
pub fn compare_tracks_many(pairs: &[(AnnotationTrack, AnnotationTrack)]) -> Result<f64> {
    let mut total = 0.0;
    let mut frames = 0;
    for (a, b) in pairs {
        let (s, n) = compare_sum(a, b)?;
        total += s;
        frames += n;
    }
    if frames == 0 {
        return Err(Error::UndefinedMetric("no videos to compare"));
    }
    Ok(100.0 * total / frames as f64)
}

fn compare_sum(a: &AnnotationTrack, b: &AnnotationTrack) -> Result<(f64, usize)> {
    same_length(a, b)?;
    let sum = a
        .labels()
        .iter()
        .zip(b.labels())
        .map(|(la, lb)| match (la.rect(), lb.rect()) {
            (Some(ra), Some(rb)) => iou(ra, rb),
            (None, None) => 1.0,
            _ => 0.0,
        })
        .sum();
    Ok((sum, a.len()))
}

fn same_length(a: &AnnotationTrack, b: &AnnotationTrack) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            annotations: a.len(),
            other: b.len(),
        });
    }
    Ok(())
}
