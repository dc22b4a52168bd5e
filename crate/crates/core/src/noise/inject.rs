use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::log::{AddedBy, InjectionLog, InjectionRecord};
use super::seed::{rng, NoiseRng};
use super::{blocks, percent_count, NoisyTrack, ShiftSigma, MAX_ATTEMPTS, MIN_BOX_SIDE};
use crate::annotation::{AnnotationTrack, BoundingBox, FrameLabel};
use crate::error::{Error, Result};
use crate::metrics::iou;

/// Mean and population standard deviation of box width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub mean_w: f64,
    pub std_w: f64,
    pub mean_h: f64,
    pub std_h: f64,
}

/// Box size statistics over every visible box of every track.
pub fn size_stats<'a>(tracks: impl IntoIterator<Item = &'a AnnotationTrack>) -> Result<SizeStats> {
    let (mut ws, mut hs) = (Vec::new(), Vec::new());
    for track in tracks {
        for rect in track.labels().iter().filter_map(FrameLabel::rect) {
            ws.push(rect.w());
            hs.push(rect.h());
        }
    }
    if ws.is_empty() {
        return Err(Error::UndefinedMetric("size statistics need at least one visible box"));
    }
    let (mean_w, std_w) = crate::metrics::mean_std(&ws);
    let (mean_h, std_h) = crate::metrics::mean_std(&hs);
    Ok(SizeStats {
        mean_w,
        std_w,
        mean_h,
        std_h,
    })
}

/// Gaussian draw restricted to `[lo, hi]` by rejection; falls back to the
/// clamped mean after `MAX_ATTEMPTS` misses.
fn truncated_normal(rng: &mut NoiseRng, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    if std > 0.0 {
        let normal = Normal::new(mean, std).expect("finite std");
        for _ in 0..MAX_ATTEMPTS {
            let v = normal.sample(rng);
            if (lo..=hi).contains(&v) {
                return v;
            }
        }
    }
    mean.clamp(lo, hi)
}

/// Random box with Gaussian size and uniform position fully inside the
/// image, resampled until it does not overlap `avoid`.
pub(crate) fn sample_box(
    rng: &mut NoiseRng,
    stats: &SizeStats,
    (width, height): (usize, usize),
    avoid: Option<&BoundingBox>,
) -> Option<BoundingBox> {
    let (iw, ih) = (width as f64, height as f64);
    for _ in 0..MAX_ATTEMPTS {
        let w = truncated_normal(rng, stats.mean_w, stats.std_w, MIN_BOX_SIDE, iw);
        let h = truncated_normal(rng, stats.mean_h, stats.std_h, MIN_BOX_SIDE, ih);
        let x = rng.random_range(0.0..=iw - w);
        let y = rng.random_range(0.0..=ih - h);
        let rect = BoundingBox::new(x, y, w, h).expect("positive size");
        if avoid.is_none_or(|gt| iou(&rect, gt) == 0.0) {
            return Some(rect);
        }
    }
    None
}

pub(crate) fn check_image(dims: (usize, usize)) -> Result<()> {
    if (dims.0 as f64) < MIN_BOX_SIDE || (dims.1 as f64) < MIN_BOX_SIDE {
        return Err(Error::InvalidSpec(format!(
            "image {}x{} is smaller than the minimum box side {MIN_BOX_SIDE}",
            dims.0, dims.1
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidSpec(format!("percentage {p} outside [0, 100]")));
    }
    Ok(())
}

/// Adds one random box to `round(p% of T)` distinct frames chosen uniformly.
/// Boxes never overlap the frame's annotation.
pub fn inject_additional_random(
    track: &NoisyTrack,
    stats: &SizeStats,
    p: f64,
    dims: (usize, usize),
    seed: u64,
) -> Result<(NoisyTrack, InjectionLog)> {
    check_p(p)?;
    check_image(dims)?;
    let n = track.track().len();
    let count = percent_count(p, n);
    let mut rng = rng(seed);
    let mut frames = index::sample(&mut rng, n, count).into_vec();
    frames.sort_unstable();

    let mut extra = track.extra().to_vec();
    let mut log = InjectionLog::default();
    for t in frames {
        let gt = track.track().labels()[t].rect();
        match sample_box(&mut rng, stats, dims, gt) {
            Some(rect) => {
                extra[t].push(rect);
                log.records.push(InjectionRecord::Added {
                    frame: t,
                    rect,
                    by: AddedBy::Random,
                });
            }
            None => log.records.push(InjectionRecord::Skipped {
                frame: t,
                reason: format!("no overlap-free box after {MAX_ATTEMPTS} attempts"),
            }),
        }
    }
    Ok((NoisyTrack::from_parts(track.track().clone(), extra), log))
}

/// Removes the annotations of `round(p% of visible frames)` visible frames
/// chosen uniformly.
pub fn inject_missing_random(track: &NoisyTrack, p: f64, seed: u64) -> Result<(NoisyTrack, InjectionLog)> {
    check_p(p)?;
    let visible: Vec<usize> = track
        .track()
        .labels()
        .iter()
        .enumerate()
        .filter_map(|(t, l)| l.exists().then_some(t))
        .collect();
    let count = percent_count(p, visible.len());
    let mut rng = rng(seed);
    let mut chosen: Vec<usize> = index::sample(&mut rng, visible.len(), count)
        .into_iter()
        .map(|i| visible[i])
        .collect();
    chosen.sort_unstable();
    remove_frames(track, &chosen)
}

/// Within each block, keeps the leading frames and removes the annotations
/// of the last `round(p% of block length)` frames.
pub fn inject_missing_consistent(track: &NoisyTrack, p: f64, block: usize) -> Result<(NoisyTrack, InjectionLog)> {
    check_p(p)?;
    if block == 0 {
        return Err(Error::InvalidSpec("block length must be at least 1".into()));
    }
    let labels = track.track().labels();
    let chosen: Vec<usize> = blocks(labels.len(), block)
        .flat_map(|(start, len)| {
            let m = percent_count(p, len);
            start + len - m..start + len
        })
        .filter(|&t| labels[t].exists())
        .collect();
    remove_frames(track, &chosen)
}

fn remove_frames(track: &NoisyTrack, frames: &[usize]) -> Result<(NoisyTrack, InjectionLog)> {
    let mut labels = track.track().labels().to_vec();
    let mut log = InjectionLog::default();
    for &t in frames {
        let original = *labels[t].rect().expect("only visible frames are removed");
        labels[t] = FrameLabel::invisible();
        log.records.push(InjectionRecord::Removed { frame: t, original });
    }
    Ok((
        NoisyTrack::from_parts(track.track().with_labels(labels)?, track.extra().to_vec()),
        log,
    ))
}

/// Shifts every visible annotation by independent zero-mean Gaussian noise
/// per axis, keeping its size. With an image size, shifted boxes are clamped
/// so their center stays inside the image (at least half the box visible).
pub fn inject_shifted(
    track: &NoisyTrack,
    sigma: ShiftSigma,
    dims: Option<(usize, usize)>,
    seed: u64,
) -> Result<(NoisyTrack, InjectionLog)> {
    let mut rng = rng(seed);
    let mut labels = track.track().labels().to_vec();
    let mut log = InjectionLog::default();
    for (t, label) in labels.iter_mut().enumerate() {
        let Some(original) = label.rect().copied() else {
            continue;
        };
        let (sx, sy) = sigma.for_box(&original);
        if !(sx >= 0.0 && sy >= 0.0) {
            return Err(Error::InvalidSpec(format!("negative sigma at frame {}", t + 1)));
        }
        if sx == 0.0 && sy == 0.0 {
            continue;
        }
        let ex = gaussian(&mut rng, sx);
        let ey = gaussian(&mut rng, sy);
        let mut shifted = original.translated(ex, ey);
        let mut clamped = false;
        if let Some((w, h)) = dims {
            let x = shifted.x().clamp(-shifted.w() / 2.0, w as f64 - shifted.w() / 2.0);
            let y = shifted.y().clamp(-shifted.h() / 2.0, h as f64 - shifted.h() / 2.0);
            if (x, y) != (shifted.x(), shifted.y()) {
                clamped = true;
                shifted = shifted.with_origin(x, y);
            }
        }
        *label = FrameLabel::visible(shifted);
        log.records.push(InjectionRecord::Shifted {
            frame: t,
            original,
            shifted,
            clamped,
        });
    }
    Ok((
        NoisyTrack::from_parts(track.track().with_labels(labels)?, track.extra().to_vec()),
        log,
    ))
}

fn gaussian(rng: &mut NoiseRng, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).expect("finite std").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(n: usize) -> AnnotationTrack {
        let labels = (0..n)
            .map(|i| FrameLabel::visible(BoundingBox::new(10.0 + (i % 7) as f64, 20.0, 30.0, 20.0).unwrap()))
            .collect();
        AnnotationTrack::new("v", 30.0, labels).unwrap()
    }

    const STATS: SizeStats = SizeStats {
        mean_w: 50.0,
        std_w: 10.0,
        mean_h: 40.0,
        std_h: 8.0,
    };

    #[test]
    fn size_stats_cases() {
        let one = AnnotationTrack::new(
            "a",
            30.0,
            vec![FrameLabel::visible(BoundingBox::new(0.0, 0.0, 40.0, 30.0).unwrap())],
        )
        .unwrap();
        let s = size_stats([&one]).unwrap();
        assert_eq!((s.mean_w, s.std_w, s.mean_h, s.std_h), (40.0, 0.0, 30.0, 0.0));

        let two = AnnotationTrack::new(
            "b",
            30.0,
            vec![
                FrameLabel::visible(BoundingBox::new(0.0, 0.0, 30.0, 30.0).unwrap()),
                FrameLabel::invisible(),
                FrameLabel::visible(BoundingBox::new(0.0, 0.0, 50.0, 50.0).unwrap()),
            ],
        )
        .unwrap();
        let s = size_stats([&two]).unwrap();
        assert_eq!((s.mean_w, s.std_w), (40.0, 10.0));

        let none = AnnotationTrack::new("c", 30.0, vec![FrameLabel::invisible()]).unwrap();
        assert!(size_stats([&none]).is_err());
    }

    #[test]
    fn zero_rates_are_identity() {
        let t = NoisyTrack::from(clean(50));
        let (a, log) = inject_additional_random(&t, &STATS, 0.0, (320, 240), 1).unwrap();
        assert_eq!(a, t);
        assert!(log.is_empty());
        let (a, log) = inject_missing_random(&t, 0.0, 1).unwrap();
        assert_eq!(a, t);
        assert!(log.is_empty());
        let (a, log) = inject_missing_consistent(&t, 0.0, 100).unwrap();
        assert_eq!(a, t);
        assert!(log.is_empty());
        let (a, log) = inject_shifted(&t, ShiftSigma::Pixels(0.0), None, 1).unwrap();
        assert_eq!(a, t);
        assert!(log.is_empty());
    }

    #[test]
    fn additional_everywhere_stays_inside_and_off_target() {
        let t = NoisyTrack::from(clean(10));
        let (a, log) = inject_additional_random(&t, &STATS, 100.0, (320, 240), 5).unwrap();
        assert_eq!(log.len(), 10);
        for (label, extra) in a.track().labels().iter().zip(a.extra()) {
            assert_eq!(extra.len(), 1);
            let b = extra[0];
            assert!(b.x() >= 0.0 && b.y() >= 0.0);
            assert!(b.x() + b.w() <= 320.0 && b.y() + b.h() <= 240.0);
            assert!(b.w() >= MIN_BOX_SIDE && b.h() >= MIN_BOX_SIDE);
            assert_eq!(iou(&b, label.rect().unwrap()), 0.0);
        }
    }

    #[test]
    fn additional_rejects_tiny_image() {
        let t = NoisyTrack::from(clean(3));
        assert!(inject_additional_random(&t, &STATS, 50.0, (3, 100), 1).is_err());
    }

    #[test]
    fn missing_consistent_tail_block_is_proportional() {
        let t = NoisyTrack::from(clean(150));
        let (a, _) = inject_missing_consistent(&t, 25.0, 100).unwrap();
        let gone: Vec<usize> = a
            .track()
            .labels()
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (!l.exists()).then_some(i))
            .collect();
        // 25 of the first block, round(12.5) = 13 of the 50-frame tail
        let expected: Vec<usize> = (75..100).chain(137..150).collect();
        assert_eq!(gone, expected);
    }

    #[test]
    fn missing_everything() {
        let t = NoisyTrack::from(clean(40));
        let (a, _) = inject_missing_random(&t, 100.0, 3).unwrap();
        assert_eq!(a.track().visible_count(), 0);
        let (a, _) = inject_missing_consistent(&t, 100.0, 100).unwrap();
        assert_eq!(a.track().visible_count(), 0);
    }

    #[test]
    fn shift_keeps_size_and_clamps() {
        let t = NoisyTrack::from(clean(200));
        let (a, log) = inject_shifted(&t, ShiftSigma::Pixels(40.0), Some((60, 50)), 9).unwrap();
        assert!(log.count(|r| matches!(r, InjectionRecord::Shifted { clamped: true, .. })) > 0);
        for (before, after) in t.track().labels().iter().zip(a.track().labels()) {
            let (b, a) = (before.rect().unwrap(), after.rect().unwrap());
            assert_eq!((b.w(), b.h()), (a.w(), a.h()));
            let (cx, cy) = a.center();
            assert!((0.0..=60.0).contains(&cx) && (0.0..=50.0).contains(&cy));
        }
    }

    #[test]
    fn fractional_sigma_scales_with_box() {
        let labels = vec![FrameLabel::visible(BoundingBox::new(500.0, 500.0, 50.0, 20.0).unwrap()); 20_000];
        let t = NoisyTrack::from(AnnotationTrack::new("v", 30.0, labels).unwrap());
        let (_, log) = inject_shifted(&t, ShiftSigma::Fraction(0.1), None, 4).unwrap();
        let (dx, dy): (Vec<f64>, Vec<f64>) = log
            .records
            .iter()
            .map(|r| match r {
                InjectionRecord::Shifted { original, shifted, .. } => {
                    (shifted.x() - original.x(), shifted.y() - original.y())
                }
                _ => unreachable!(),
            })
            .unzip();
        let (_, sx) = crate::metrics::mean_std(&dx);
        let (_, sy) = crate::metrics::mean_std(&dy);
        assert!((sx - 5.0).abs() < 0.1, "{sx}");
        assert!((sy - 2.0).abs() < 0.05, "{sy}");
    }
}
