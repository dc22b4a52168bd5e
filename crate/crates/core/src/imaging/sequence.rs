use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use image::DynamicImage;

use super::GrayFrame;
use crate::error::{Error, Result};

/// Random access to the frames of one video. Indices are 0-based.
pub trait FrameSource: Send + Sync {
    fn frame_count(&self) -> usize;

    /// `(width, height)` shared by every frame.
    fn dims(&self) -> (usize, usize);

    fn frame(&self, index: usize) -> Result<Arc<GrayFrame>>;
}

impl FrameSource for [GrayFrame] {
    fn frame_count(&self) -> usize {
        self.len()
    }

    fn dims(&self) -> (usize, usize) {
        self.first().map_or((0, 0), |f| (f.width(), f.height()))
    }

    fn frame(&self, index: usize) -> Result<Arc<GrayFrame>> {
        self.get(index).cloned().map(Arc::new).ok_or(Error::FrameOutOfRange {
            t: index + 1,
            len: self.len(),
        })
    }
}

impl FrameSource for Vec<GrayFrame> {
    fn frame_count(&self) -> usize {
        self.as_slice().frame_count()
    }

    fn dims(&self) -> (usize, usize) {
        self.as_slice().dims()
    }

    fn frame(&self, index: usize) -> Result<Arc<GrayFrame>> {
        self.as_slice().frame(index)
    }
}

const CACHE_CAPACITY: usize = 4;
const FRAME_EXTENSIONS: [&str; 2] = ["pgm", "png"];

/// Directory of pre-extracted frames (`000001.pgm`, `000002.pgm`, ...),
/// ordered by file name. Decoded frames are kept in a small shared cache.
#[derive(Debug)]
pub struct FrameSequence {
    dir: PathBuf,
    files: Vec<PathBuf>,
    width: usize,
    height: usize,
    cache: Mutex<VecDeque<(usize, Arc<GrayFrame>)>>,
}

impl FrameSequence {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            let is_frame = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if is_frame && path.is_file() {
                files.push(path);
            }
        }
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        let Some(first) = files.first() else {
            return Err(Error::validation(
                None,
                format!("{}: no .pgm or .png frames", dir.display()),
            ));
        };
        let frame = load_file(first)?;
        let (width, height) = (frame.width(), frame.height());
        Ok(Self {
            dir,
            files,
            width,
            height,
            cache: Mutex::new(VecDeque::from([(0, Arc::new(frame))])),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Loads frame `t`, counted from 1.
    pub fn load_frame(&self, t: usize) -> Result<Arc<GrayFrame>> {
        if t == 0 {
            return Err(Error::FrameOutOfRange { t, len: self.len() });
        }
        self.frame(t - 1)
    }
}

impl FrameSource for FrameSequence {
    fn frame_count(&self) -> usize {
        self.files.len()
    }

    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn frame(&self, index: usize) -> Result<Arc<GrayFrame>> {
        let path = self.files.get(index).ok_or(Error::FrameOutOfRange {
            t: index + 1,
            len: self.files.len(),
        })?;
        {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            if let Some((_, f)) = cache.iter().find(|(i, _)| *i == index) {
                return Ok(Arc::clone(f));
            }
        }
        let frame = load_file(path)?;
        if (frame.width(), frame.height()) != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                path: path.clone(),
                expected_w: self.width as u32,
                expected_h: self.height as u32,
                found_w: frame.width() as u32,
                found_h: frame.height() as u32,
            });
        }
        let frame = Arc::new(frame);
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= CACHE_CAPACITY {
            cache.pop_front();
        }
        cache.push_back((index, Arc::clone(&frame)));
        Ok(frame)
    }
}

fn load_file(path: &Path) -> Result<GrayFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray(&bytes).map_err(|e| match e {
        Error::Image { message, .. } => Error::Image {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Decodes a PGM or PNG image to 8-bit gray. Colour images are reduced with
/// luma weights 0.299/0.587/0.114, rounded half-up.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayFrame> {
    let image_err = |message: String| Error::Image {
        path: PathBuf::new(),
        message,
    };
    let img = image::load_from_memory(bytes).map_err(|e| image_err(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(image_err(format!(
                "unsupported pixel format {:?}, need 8-bit gray or RGB",
                other.color()
            )))
        }
    };
    GrayFrame::new(w, h, pixels)
}

fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000) as u8
}

/// Writes a binary (P5) PGM with maxval 255.
pub fn write_pgm(path: &Path, frame: &GrayFrame) -> Result<()> {
    let mut out = Vec::with_capacity(frame.pixels().len() + 32);
    write!(out, "P5\n{} {}\n255\n", frame.width(), frame.height()).expect("write to Vec");
    out.extend_from_slice(frame.pixels());
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_binary_pgm() {
        let bytes = b"P5\n2 2\n255\n\x00\x40\x80\xff";
        let f = decode_gray(bytes).unwrap();
        assert_eq!(f.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn white_rgb_png_is_full_luma() {
        let img = image::RgbImage::from_pixel(3, 2, image::Rgb([255, 255, 255]));
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .unwrap();
        let f = decode_gray(&bytes).unwrap();
        assert!(f.pixels().iter().all(|&p| p == 255));
    }

    #[test]
    fn luma_rounds_half_up() {
        // 0.299 * 10 = 2.99 -> 3; 0.114 * 5 = 0.57 -> 1
        assert_eq!(luma(10, 0, 0), 3);
        assert_eq!(luma(0, 0, 5), 1);
    }

    #[test]
    fn sequence_orders_by_name_and_checks_range() {
        let dir = tempfile::tempdir().unwrap();
        for (name, v) in [("000002.pgm", 20u8), ("000001.pgm", 10), ("000003.pgm", 30)] {
            let f = GrayFrame::filled(3, 2, v).unwrap();
            write_pgm(&dir.path().join(name), &f).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let seq = FrameSequence::open(dir.path()).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.load_frame(1).unwrap().get(0, 0), 10);
        assert_eq!(seq.load_frame(3).unwrap().get(0, 0), 30);
        assert!(matches!(
            seq.load_frame(4),
            Err(Error::FrameOutOfRange { t: 4, len: 3 })
        ));
    }

    #[test]
    fn sequence_rejects_mismatched_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        write_pgm(&dir.path().join("000001.pgm"), &GrayFrame::filled(3, 2, 0).unwrap()).unwrap();
        write_pgm(&dir.path().join("000002.pgm"), &GrayFrame::filled(4, 2, 0).unwrap()).unwrap();
        let seq = FrameSequence::open(dir.path()).unwrap();
        assert!(matches!(seq.frame(1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn undecodable_frame_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("000001.pgm");
        std::fs::write(&path, b"not an image").unwrap();
        match FrameSequence::open(dir.path()) {
            Err(Error::Image { path: p, .. }) => assert_eq!(p, path),
            other => panic!("unexpected {other:?}"),
        }
    }
}
