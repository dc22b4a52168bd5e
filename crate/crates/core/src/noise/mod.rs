//! Seeded injection of annotation errors: additional boxes (random or
//! tracked), missing boxes (random or in consistent blocks) and shifted boxes.
//!
//! Every injector returns the corrupted track together with an
//! [`InjectionLog`] that replays onto the clean track bit-exactly. Identical
//! inputs and seed always give identical outputs.

mod consistent;
mod inject;
mod log;
pub mod seed;

pub use consistent::{inject_additional_consistent, ConsistentParams};
pub use inject::{
    inject_additional_random, inject_missing_consistent, inject_missing_random, inject_shifted, size_stats, SizeStats,
};
pub use log::{AddedBy, InjectionLog, InjectionRecord};

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationTrack, BoundingBox};
use crate::error::{Error, Result};
use crate::imaging::FrameSource;

/// Frames per block for the temporally consistent variants.
pub const DEFAULT_BLOCK: usize = 100;
/// Search radius of the correlation tracker used for consistent additional boxes.
pub const TRACKER_RADIUS: u32 = 20;
/// Resampling attempts before an additional box is given up.
pub const MAX_ATTEMPTS: usize = 100;
/// Smallest side of a generated box, in pixels.
pub const MIN_BOX_SIDE: f64 = 4.0;

/// Standard deviation of the shift noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftSigma {
    Pixels(f64),
    /// Fraction of each box's own width (x) and height (y).
    Fraction(f64),
}

impl ShiftSigma {
    pub(crate) fn for_box(&self, rect: &BoundingBox) -> (f64, f64) {
        match *self {
            ShiftSigma::Pixels(s) => (s, s),
            ShiftSigma::Fraction(f) => (f * rect.w(), f * rect.h()),
        }
    }

    fn value(&self) -> f64 {
        match *self {
            ShiftSigma::Pixels(s) | ShiftSigma::Fraction(s) => s,
        }
    }
}

fn default_block() -> usize {
    DEFAULT_BLOCK
}

fn default_candidates() -> usize {
    1
}

fn default_radius() -> u32 {
    TRACKER_RADIUS
}

/// One error process, as written in a noise config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    AdditionalRandom {
        p: f64,
    },
    AdditionalConsistent {
        p: f64,
        #[serde(default = "default_block")]
        block: usize,
        #[serde(default = "default_candidates")]
        candidates_per_frame: usize,
        #[serde(default)]
        fixed_template: bool,
        #[serde(default = "default_radius")]
        radius: u32,
    },
    MissingRandom {
        p: f64,
    },
    MissingConsistent {
        p: f64,
        #[serde(default = "default_block")]
        block: usize,
    },
    Shifted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_px: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_frac: Option<f64>,
    },
    Combined {
        specs: Vec<NoiseSpec>,
    },
}

impl NoiseSpec {
    pub fn shifted_px(sigma: f64) -> Self {
        NoiseSpec::Shifted {
            sigma_px: Some(sigma),
            sigma_frac: None,
        }
    }

    pub fn shifted_frac(fraction: f64) -> Self {
        NoiseSpec::Shifted {
            sigma_px: None,
            sigma_frac: Some(fraction),
        }
    }

    pub fn additional_consistent(p: f64) -> Self {
        NoiseSpec::AdditionalConsistent {
            p,
            block: DEFAULT_BLOCK,
            candidates_per_frame: 1,
            fixed_template: false,
            radius: TRACKER_RADIUS,
        }
    }

    pub fn missing_consistent(p: f64) -> Self {
        NoiseSpec::MissingConsistent {
            p,
            block: DEFAULT_BLOCK,
        }
    }

    /// 25% consistent missing boxes, 25% random additional boxes, then
    /// shifts with sigma = 10% of box size.
    pub fn combined_recipe() -> Self {
        NoiseSpec::Combined {
            specs: vec![
                NoiseSpec::missing_consistent(25.0),
                NoiseSpec::AdditionalRandom { p: 25.0 },
                NoiseSpec::shifted_frac(0.10),
            ],
        }
    }

    pub(crate) fn shift_sigma(&self) -> Result<Option<ShiftSigma>> {
        match self {
            NoiseSpec::Shifted { sigma_px, sigma_frac } => match (sigma_px, sigma_frac) {
                (Some(s), None) => Ok(Some(ShiftSigma::Pixels(*s))),
                (None, Some(f)) => Ok(Some(ShiftSigma::Fraction(*f))),
                _ => Err(Error::InvalidSpec(
                    "shifted needs exactly one of sigma_px or sigma_frac".into(),
                )),
            },
            _ => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_p = |p: f64| {
            if (0.0..=100.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("percentage {p} outside [0, 100]")))
            }
        };
        let check_block = |b: usize| {
            if b == 0 {
                Err(Error::InvalidSpec("block length must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        match self {
            NoiseSpec::AdditionalRandom { p } | NoiseSpec::MissingRandom { p } => check_p(*p),
            NoiseSpec::MissingConsistent { p, block } => {
                check_p(*p)?;
                check_block(*block)
            }
            NoiseSpec::AdditionalConsistent {
                p,
                block,
                candidates_per_frame,
                radius,
                ..
            } => {
                check_p(*p)?;
                check_block(*block)?;
                if *candidates_per_frame == 0 || *radius == 0 {
                    return Err(Error::InvalidSpec(
                        "candidates_per_frame and radius must be at least 1".into(),
                    ));
                }
                Ok(())
            }
            NoiseSpec::Shifted { .. } => {
                let sigma = self.shift_sigma()?.expect("shifted");
                if !(sigma.value() >= 0.0 && sigma.value().is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "sigma must be finite and >= 0, got {}",
                        sigma.value()
                    )));
                }
                Ok(())
            }
            NoiseSpec::Combined { specs } => {
                if specs.is_empty() {
                    return Err(Error::InvalidSpec("combined spec list is empty".into()));
                }
                specs.iter().try_for_each(NoiseSpec::validate)
            }
        }
    }
}

/// Noise config file: `{"seed": u64, "specs": [...]}`. The specs are applied
/// in order, like a combined spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    pub specs: Vec<NoiseSpec>,
}

impl NoiseConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: NoiseConfig = serde_json::from_slice(bytes)?;
        cfg.as_combined().validate()?;
        Ok(cfg)
    }

    pub fn as_combined(&self) -> NoiseSpec {
        NoiseSpec::Combined {
            specs: self.specs.clone(),
        }
    }

    /// Applies the config to one video, seeding from `(seed, video_id)`.
    pub fn apply(&self, track: &AnnotationTrack, ctx: &NoiseContext<'_>) -> Result<(NoisyTrack, InjectionLog)> {
        let seed = seed::video_seed(self.seed, track.video_id());
        apply_spec(&NoisyTrack::from(track.clone()), &self.as_combined(), seed, ctx)
    }
}

/// Inputs some injectors need beyond the track itself.
#[derive(Clone, Copy, Default)]
pub struct NoiseContext<'a> {
    /// `(width, height)`; falls back to the frame dimensions.
    pub image_size: Option<(usize, usize)>,
    pub frames: Option<&'a dyn FrameSource>,
    pub size_stats: Option<SizeStats>,
}

impl NoiseContext<'_> {
    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.image_size.or_else(|| self.frames.map(|f| f.dims()))
    }
}

/// A corrupted track: the (possibly removed or shifted) primary annotation
/// per frame plus any additional boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTrack {
    track: AnnotationTrack,
    extra: Vec<Vec<BoundingBox>>,
}

impl From<AnnotationTrack> for NoisyTrack {
    fn from(track: AnnotationTrack) -> Self {
        let extra = vec![Vec::new(); track.len()];
        Self { track, extra }
    }
}

impl NoisyTrack {
    pub(crate) fn from_parts(track: AnnotationTrack, extra: Vec<Vec<BoundingBox>>) -> Self {
        debug_assert_eq!(track.len(), extra.len());
        Self { track, extra }
    }

    pub fn track(&self) -> &AnnotationTrack {
        &self.track
    }

    pub fn extra(&self) -> &[Vec<BoundingBox>] {
        &self.extra
    }

    pub fn extra_count(&self) -> usize {
        self.extra.iter().map(Vec::len).sum()
    }

    /// Per-frame box lists (primary first) for detector training export.
    pub fn to_multibox(&self) -> MultiBoxExport {
        MultiBoxExport {
            video_id: self.track.video_id().to_owned(),
            frames: self
                .track
                .labels()
                .iter()
                .zip(&self.extra)
                .map(|(l, extra)| l.rect().into_iter().chain(extra).copied().collect())
                .collect(),
        }
    }
}

/// Multi-box label file `{"video_id": str, "frames": [[[x,y,w,h], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBoxExport {
    pub video_id: String,
    pub frames: Vec<Vec<BoundingBox>>,
}

impl MultiBoxExport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("export serialisation cannot fail");
        bytes.push(b'\n');
        bytes
    }
}

/// `round(fraction * n)` with halves rounded up, for a percentage `p`.
pub fn percent_count(p: f64, n: usize) -> usize {
    (p * n as f64 / 100.0 + 0.5).floor() as usize
}

/// Splits `len` frames into consecutive blocks, yielding `(start, length)`.
pub(crate) fn blocks(len: usize, block: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).step_by(block).map(move |s| (s, block.min(len - s)))
}

/// Applies one spec. Combined specs run their components in order, each
/// seeded from `(seed, index)`.
pub fn apply_spec(
    track: &NoisyTrack,
    spec: &NoiseSpec,
    seed: u64,
    ctx: &NoiseContext<'_>,
) -> Result<(NoisyTrack, InjectionLog)> {
    spec.validate()?;
    match spec {
        NoiseSpec::AdditionalRandom { p } => {
            let stats = ctx
                .size_stats
                .ok_or_else(|| Error::InvalidSpec("additional_random needs dataset size statistics".into()))?;
            let dims = ctx
                .image_size()
                .ok_or_else(|| Error::InvalidSpec("additional_random needs the image size".into()))?;
            inject_additional_random(track, &stats, *p, dims, seed)
        }
        NoiseSpec::AdditionalConsistent {
            p,
            block,
            candidates_per_frame,
            fixed_template,
            radius,
        } => {
            let stats = ctx
                .size_stats
                .ok_or_else(|| Error::InvalidSpec("additional_consistent needs dataset size statistics".into()))?;
            let frames = ctx
                .frames
                .ok_or_else(|| Error::InvalidSpec("additional_consistent needs video frames".into()))?;
            let params = ConsistentParams {
                p: *p,
                block: *block,
                candidates_per_frame: *candidates_per_frame,
                fixed_template: *fixed_template,
                radius: *radius,
            };
            inject_additional_consistent(track, frames, &stats, &params, seed)
        }
        NoiseSpec::MissingRandom { p } => inject_missing_random(track, *p, seed),
        NoiseSpec::MissingConsistent { p, block } => inject_missing_consistent(track, *p, *block),
        NoiseSpec::Shifted { .. } => {
            let sigma = spec.shift_sigma()?.expect("shifted");
            inject_shifted(track, sigma, ctx.image_size(), seed)
        }
        NoiseSpec::Combined { specs } => inject_combined(track, specs, seed, ctx),
    }
}

pub fn inject_combined(
    track: &NoisyTrack,
    specs: &[NoiseSpec],
    seed: u64,
    ctx: &NoiseContext<'_>,
) -> Result<(NoisyTrack, InjectionLog)> {
    if specs.is_empty() {
        return Err(Error::InvalidSpec("combined spec list is empty".into()));
    }
    let mut current = track.clone();
    let mut log = InjectionLog::default();
    for (i, spec) in specs.iter().enumerate() {
        let (next, sub) = apply_spec(&current, spec, seed::component_seed(seed, i), ctx)?;
        current = next;
        log.extend(sub);
    }
    Ok((current, log))
}
