#![allow(dead_code)]

use annofix::metrics::Threshold;
use annofix::{AnnotationTrack, BoundingBox, Detection, DetectionSet, FrameLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain-array instance used by the oracle, kept apart from the library types.
#[derive(Debug, Clone)]
pub struct Instance {
    pub fps: f64,
    pub gt: Vec<Option<[f64; 4]>>,
    pub dets: Vec<Vec<([f64; 4], f64)>>,
}

impl Instance {
    pub fn track(&self) -> AnnotationTrack {
        let labels = self
            .gt
            .iter()
            .map(|g| match g {
                Some(r) => FrameLabel::visible(BoundingBox::try_from(*r).unwrap()),
                None => FrameLabel::invisible(),
            })
            .collect();
        AnnotationTrack::new("inst", self.fps, labels).unwrap()
    }

    pub fn detections(&self) -> DetectionSet {
        let frames = self
            .dets
            .iter()
            .map(|f| {
                f.iter()
                    .map(|(r, s)| Detection::new(BoundingBox::try_from(*r).unwrap(), *s).unwrap())
                    .collect()
            })
            .collect();
        DetectionSet::new("inst", frames)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.dets.iter().flatten().map(|(_, s)| *s).collect()
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_t: usize) -> Instance {
    let t = rng.random_range(1..=max_t);
    let fps = [25.0, 30.0, 50.0][rng.random_range(0..3)];
    let mut gt = Vec::with_capacity(t);
    let mut dets = Vec::with_capacity(t);
    for _ in 0..t {
        let g = rng.random_bool(0.7).then(|| {
            [
                rng.random_range(0.0..200.0),
                rng.random_range(0.0..150.0),
                rng.random_range(4.0..40.0),
                rng.random_range(4.0..40.0),
            ]
        });
        let n = rng.random_range(0..=4);
        let frame = (0..n)
            .map(|_| {
                let rect = match g {
                    // jitter around the target: hits, partial overlaps and misses
                    Some(r) if rng.random_bool(0.6) => {
                        let j = rng.random_range(0.0..1.2);
                        [
                            r[0] + rng.random_range(-j..=j) * r[2],
                            r[1] + rng.random_range(-j..=j) * r[3],
                            r[2] * rng.random_range(0.6..1.5),
                            r[3] * rng.random_range(0.6..1.5),
                        ]
                    }
                    _ => [
                        rng.random_range(0.0..200.0),
                        rng.random_range(0.0..150.0),
                        rng.random_range(4.0..40.0),
                        rng.random_range(4.0..40.0),
                    ],
                };
                // coarse grid so that equal scores occur
                let score = f64::from(rng.random_range(0..=20u32)) / 20.0;
                (rect, score)
            })
            .collect();
        gt.push(g);
        dets.push(frame);
    }
    Instance { fps, gt, dets }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// IoU from corner coordinates.
pub fn oracle_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let (ax2, ay2) = (a[0] + a[2], a[1] + a[3]);
    let (bx2, by2) = (b[0] + b[2], b[1] + b[3]);
    let iw = (ax2.min(bx2) - a[0].max(b[0])).max(0.0);
    let ih = (ay2.min(by2) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

fn survivors(frame: &[([f64; 4], f64)], th: Threshold) -> Vec<&([f64; 4], f64)> {
    frame
        .iter()
        .filter(|(_, s)| if th.exclusive { *s > th.value } else { *s >= th.value })
        .collect()
}

/// Per-frame terms: (IoU_t * v_t * p_t + (1 - p_t)(1 - v_t), max(v_t, n_t) + (1 - p_t)(1 - v_t)).
fn terms(inst: &Instance, th: Threshold) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (g, frame) in inst.gt.iter().zip(&inst.dets) {
        let surv = survivors(frame, th);
        let v = if g.is_some() { 1.0 } else { 0.0 };
        let n = surv.len() as f64;
        let p = if surv.is_empty() { 0.0 } else { 1.0 };
        let mut top: Option<&([f64; 4], f64)> = None;
        for d in &surv {
            if top.is_none() || d.1 > top.unwrap().1 {
                top = Some(d);
            }
        }
        let iou = match (g, top) {
            (Some(g), Some(d)) => oracle_iou(&d.0, g),
            _ => 0.0,
        };
        let num = iou * v * p + (1.0 - p) * (1.0 - v);
        let den = if v > n { v } else { n } + (1.0 - p) * (1.0 - v);
        out.push((num, den));
    }
    out
}

pub fn oracle_ta(inst: &Instance, th: Threshold) -> f64 {
    let t = terms(inst, th);
    100.0 * t.iter().map(|x| x.0).sum::<f64>() / t.len() as f64
}

pub fn oracle_mta(inst: &Instance, th: Threshold) -> f64 {
    let t = terms(inst, th);
    100.0 * t.iter().map(|x| x.0).sum::<f64>() / t.iter().map(|x| x.1).sum::<f64>()
}

/// (hits, visible frames, false alarms) under the Pascal rules.
pub fn oracle_counts(inst: &Instance, th: Threshold) -> (usize, usize, usize) {
    let (mut hits, mut visible, mut fas) = (0, 0, 0);
    for (g, frame) in inst.gt.iter().zip(&inst.dets) {
        let surv = survivors(frame, th);
        match g {
            Some(g) => {
                visible += 1;
                if surv.iter().any(|d| oracle_iou(&d.0, g) >= 0.5) {
                    hits += 1;
                }
                fas += surv.iter().filter(|d| oracle_iou(&d.0, g) == 0.0).count();
            }
            None => fas += surv.len(),
        }
    }
    (hits, visible, fas)
}

pub fn oracle_fa_per_min(inst: &Instance, th: Threshold) -> f64 {
    let (_, _, fas) = oracle_counts(inst, th);
    fas as f64 / (inst.gt.len() as f64 / (60.0 * inst.fps))
}

/// Smallest candidate threshold (distinct scores ascending, then "above the
/// maximum") whose false-alarm rate is within `target`, by trying them all.
pub fn sweep_threshold(inst: &Instance, target: f64) -> Threshold {
    let mut scores = inst.scores();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let Some(&top) = scores.last() else {
        return Threshold::KEEP_ALL;
    };
    let candidates = scores
        .iter()
        .map(|&s| Threshold::inclusive(s))
        .chain([Threshold::exclusive(top)]);
    for th in candidates {
        if oracle_fa_per_min(inst, th) <= target {
            return th;
        }
    }
    unreachable!("the exclusive top threshold keeps nothing")
}

/// Detections kept by `th`, as (frame, index) pairs.
pub fn kept(inst: &Instance, th: Threshold) -> Vec<(usize, usize)> {
    inst.dets
        .iter()
        .enumerate()
        .flat_map(|(t, f)| {
            f.iter()
                .enumerate()
                .filter(move |(_, (_, s))| if th.exclusive { *s > th.value } else { *s >= th.value })
                .map(move |(i, _)| (t, i))
        })
        .collect()
}
