use super::inject::{check_image, sample_box, SizeStats};
use super::log::{AddedBy, InjectionLog, InjectionRecord};
use super::seed::rng;
use super::{blocks, percent_count, NoisyTrack};
use crate::annotation::BoundingBox;
use crate::error::{Error, Result};
use crate::imaging::{extract_patch, patch_variance, zncc_match, FrameSource, Patch};

/// Settings for temporally consistent additional boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistentParams {
    pub p: f64,
    pub block: usize,
    pub candidates_per_frame: usize,
    /// Keep the seed template instead of re-cutting it on every frame.
    pub fixed_template: bool,
    pub radius: u32,
}

/// Temporally consistent additional boxes.
///
/// For each block of `block` frames with `m = round(p% of block)`: every
/// leading frame (all but the last `m`) proposes random candidate boxes, the
/// candidate whose patch has the highest intensity variance becomes the
/// seed, and the seed is tracked with ZNCC through the last `m` frames. Each
/// tracked position is added as an extra box of the seed's size. When `m`
/// covers the whole block the first frame still proposes the candidates.
pub fn inject_additional_consistent(
    track: &NoisyTrack,
    frames: &dyn FrameSource,
    stats: &SizeStats,
    params: &ConsistentParams,
    seed: u64,
) -> Result<(NoisyTrack, InjectionLog)> {
    let labels = track.track().labels();
    if frames.frame_count() < labels.len() {
        return Err(Error::validation(
            None,
            format!(
                "video has {} frames but the track has {}",
                frames.frame_count(),
                labels.len()
            ),
        ));
    }
    if !(0.0..=100.0).contains(&params.p) || params.block == 0 || params.radius == 0 {
        return Err(Error::InvalidSpec(format!("bad consistent-box parameters {params:?}")));
    }
    let dims = frames.dims();
    check_image(dims)?;

    let mut rng = rng(seed);
    let mut extra = track.extra().to_vec();
    let mut log = InjectionLog::default();

    for (start, len) in blocks(labels.len(), params.block) {
        let m = percent_count(params.p, len);
        if m == 0 {
            continue;
        }
        let tracked_from = start + len - m;
        let candidate_end = tracked_from.max(start + 1);

        // Seed selection by patch variance; the first maximum wins.
        let mut seed_box: Option<(f64, usize, BoundingBox, Patch)> = None;
        for (t, label) in labels.iter().enumerate().take(candidate_end).skip(start) {
            let frame = frames.frame(t)?;
            for _ in 0..params.candidates_per_frame {
                let Some(rect) = sample_box(&mut rng, stats, dims, label.rect()) else {
                    continue;
                };
                let Ok(patch) = extract_patch(&frame, &rect) else {
                    continue;
                };
                let var = patch_variance(&patch);
                if seed_box.as_ref().is_none_or(|(best, ..)| var > *best) {
                    seed_box = Some((var, t, rect, patch));
                }
            }
        }
        let Some((_, _, mut rect, mut template)) = seed_box else {
            for t in tracked_from..start + len {
                log.records.push(InjectionRecord::Skipped {
                    frame: t,
                    reason: "no usable candidate box in block".into(),
                });
            }
            continue;
        };

        for (t, boxes) in extra.iter_mut().enumerate().take(start + len).skip(tracked_from) {
            let frame = frames.frame(t)?;
            let found = match zncc_match(&template, &frame, rect.center(), params.radius) {
                Ok(m) => m,
                Err(e) => {
                    log.records.push(InjectionRecord::Skipped {
                        frame: t,
                        reason: format!("tracking failed: {e}"),
                    });
                    continue;
                }
            };
            let d = found.displacement;
            rect = rect.translated(f64::from(d.dx), f64::from(d.dy));
            boxes.push(rect);
            log.records.push(InjectionRecord::Added {
                frame: t,
                rect,
                by: AddedBy::Tracked,
            });
            if !params.fixed_template {
                if let Ok(p) = extract_patch(&frame, &rect) {
                    template = p;
                }
            }
        }
    }
    Ok((NoisyTrack::from_parts(track.track().clone(), extra), log))
}
