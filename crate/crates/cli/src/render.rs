//! Overlay images: frames with 1-pixel box outlines, one colour per set.

use std::path::Path;
use std::str::FromStr;

use annofix::format::read_annotations;
use annofix::imaging::{FrameSequence, FrameSource, GrayFrame};
use annofix::{AnnotationTrack, BoundingBox};
use anyhow::Context;
use image::{Rgb, RgbImage};

use crate::cli::RenderArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Color(pub [u8; 3]);

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rgb = match s.trim().to_ascii_lowercase().as_str() {
            "green" => [0, 255, 0],
            "red" => [255, 0, 0],
            "blue" => [0, 0, 255],
            "yellow" => [255, 255, 0],
            "cyan" => [0, 255, 255],
            "magenta" => [255, 0, 255],
            "white" => [255, 255, 255],
            "black" => [0, 0, 0],
            hex => {
                let digits = hex
                    .strip_prefix('#')
                    .filter(|h| h.len() == 6)
                    .ok_or_else(|| format!("unknown colour {s:?}"))?;
                let byte =
                    |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).map_err(|_| format!("bad colour {s:?}"));
                [byte(0)?, byte(2)?, byte(4)?]
            }
        };
        Ok(Color(rgb))
    }
}

/// Gray frame as RGB with each box outlined. Box edges are rounded to whole
/// pixels once; the outline covers columns `round(x)..round(x + w) - 1` and
/// the matching rows, clipped to the image.
pub fn overlay(frame: &GrayFrame, boxes: &[(&BoundingBox, Color)]) -> RgbImage {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        let v = frame.get(x as usize, y as usize);
        Rgb([v, v, v])
    });
    for (rect, color) in boxes {
        let x0 = rect.x().round() as i64;
        let y0 = rect.y().round() as i64;
        let x1 = (rect.x() + rect.w()).round() as i64 - 1;
        let y1 = (rect.y() + rect.h()).round() as i64 - 1;
        let mut put = |x: i64, y: i64| {
            if (0..i64::from(w)).contains(&x) && (0..i64::from(h)).contains(&y) {
                img.put_pixel(x as u32, y as u32, Rgb(color.0));
            }
        };
        for x in x0..=x1 {
            put(x, y0);
            put(x, y1);
        }
        for y in y0..=y1 {
            put(x0, y);
            put(x1, y);
        }
    }
    img
}

/// Writes `<out>/<t>.png` (1-based, six digits) for every frame. Returns the
/// number of frames that failed.
pub fn render(args: &RenderArgs) -> anyhow::Result<usize> {
    if args.colors.len() < args.sets.len() {
        return Err(crate::usage(format!(
            "{} annotation sets but only {} colours",
            args.sets.len(),
            args.colors.len()
        )));
    }
    let frames = FrameSequence::open(&args.frames)?;
    let sets: Vec<AnnotationTrack> = args
        .sets
        .iter()
        .map(|p| read_annotations(p).with_context(|| p.display().to_string()))
        .collect::<anyhow::Result<_>>()?;
    for (path, set) in args.sets.iter().zip(&sets) {
        if set.len() != frames.frame_count() {
            anyhow::bail!(
                "{}: {} labels for {} frames",
                path.display(),
                set.len(),
                frames.frame_count()
            );
        }
    }
    std::fs::create_dir_all(&args.out).with_context(|| args.out.display().to_string())?;
    let mut failed = 0;
    for t in 0..frames.frame_count() {
        if let Err(e) = render_frame(&frames, &sets, &args.colors, t, &args.out) {
            log::error!("frame {}: {e:#}", t + 1);
            eprintln!("frame {}: {e:#}", t + 1);
            failed += 1;
        }
    }
    Ok(failed)
}

fn render_frame(
    frames: &FrameSequence,
    sets: &[AnnotationTrack],
    colors: &[Color],
    t: usize,
    out: &Path,
) -> anyhow::Result<()> {
    let frame = frames.frame(t)?;
    let boxes: Vec<(&BoundingBox, Color)> = sets
        .iter()
        .zip(colors)
        .filter_map(|(s, c)| s.labels()[t].rect().map(|r| (r, *c)))
        .collect();
    let path = out.join(format!("{:06}.png", t + 1));
    overlay(&frame, &boxes)
        .save(&path)
        .with_context(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colours() {
        assert_eq!("green".parse::<Color>(), Ok(Color([0, 255, 0])));
        assert_eq!("#0a0B0c".parse::<Color>(), Ok(Color([10, 11, 12])));
        assert!("#12345".parse::<Color>().is_err());
        assert!("teal".parse::<Color>().is_err());
    }

    #[test]
    fn outline_is_one_pixel_at_rounded_box() {
        let frame = GrayFrame::filled(10, 8, 50).unwrap();
        let rect = BoundingBox::new(1.6, 2.4, 4.0, 3.0).unwrap();
        let red = Color([255, 0, 0]);
        let img = overlay(&frame, &[(&rect, red)]);
        // columns 2..=5, rows 2..=4
        for y in 0..8 {
            for x in 0..10 {
                let on_edge =
                    ((x == 2 || x == 5) && (2..=4).contains(&y)) || ((y == 2 || y == 4) && (2..=5).contains(&x));
                let expected = if on_edge { [255, 0, 0] } else { [50, 50, 50] };
                assert_eq!(img.get_pixel(x, y).0, expected, "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn boxes_are_clipped() {
        let frame = GrayFrame::filled(6, 6, 0).unwrap();
        let rect = BoundingBox::new(-3.0, 4.0, 5.0, 9.0).unwrap();
        let img = overlay(&frame, &[(&rect, Color([1, 2, 3]))]);
        assert_eq!(img.get_pixel(1, 4).0, [1, 2, 3]);
        assert_eq!(img.get_pixel(1, 5).0, [1, 2, 3]);
        assert_eq!(img.get_pixel(0, 5).0, [0, 0, 0]);
    }
}
