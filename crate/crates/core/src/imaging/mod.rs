//! Grayscale frames, template patches and zero-mean normalized
//! cross-correlation search.

mod sequence;
mod zncc;

pub use sequence::{decode_gray, write_pgm, FrameSequence, FrameSource};
pub use zncc::{zncc_match, zncc_match_f64, Displacement, FloatImage, Match};

use crate::annotation::BoundingBox;
use crate::error::{Error, Result};

/// Smallest patch side accepted by [`extract_patch`].
pub const MIN_PATCH_SIDE: i64 = 4;

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(None, "frame dimensions must be non-zero"));
        }
        if pixels.len() != width * height {
            return Err(Error::validation(
                None,
                format!("frame buffer has {} bytes, expected {}x{}", pixels.len(), width, height),
            ));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Rectangular block of intensities copied out of a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Patch {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Integer pixel region covered by `rect`: origin floored, size rounded half-up.
pub fn pixel_region(rect: &BoundingBox) -> (i64, i64, i64, i64) {
    let x0 = rect.x().floor() as i64;
    let y0 = rect.y().floor() as i64;
    let w = (rect.w() + 0.5).floor() as i64;
    let h = (rect.h() + 0.5).floor() as i64;
    (x0, y0, w, h)
}

/// Copies the pixels under `rect`, rounded to the pixel grid and clamped to
/// the frame.
pub fn extract_patch(frame: &GrayFrame, rect: &BoundingBox) -> Result<Patch> {
    let (x0, y0, w, h) = pixel_region(rect);
    let left = x0.max(0);
    let top = y0.max(0);
    let right = (x0 + w).min(frame.width as i64);
    let bottom = (y0 + h).min(frame.height as i64);
    let (cw, ch) = (right - left, bottom - top);
    if cw < MIN_PATCH_SIDE || ch < MIN_PATCH_SIDE {
        return Err(Error::DegeneratePatch {
            width: cw.max(0),
            height: ch.max(0),
        });
    }
    let (left, top, cw, ch) = (left as usize, top as usize, cw as usize, ch as usize);
    let mut pixels = Vec::with_capacity(cw * ch);
    for row in top..top + ch {
        let start = row * frame.width + left;
        pixels.extend_from_slice(&frame.pixels[start..start + cw]);
    }
    Ok(Patch {
        width: cw,
        height: ch,
        pixels,
    })
}

/// Population variance of the patch intensities.
pub fn patch_variance(patch: &Patch) -> f64 {
    let n = patch.pixels.len() as f64;
    let mean = patch.pixels.iter().map(|&p| f64::from(p)).sum::<f64>() / n;
    patch
        .pixels
        .iter()
        .map(|&p| {
            let d = f64::from(p) - mean;
            d * d
        })
        .sum::<f64>()
        / n
}
