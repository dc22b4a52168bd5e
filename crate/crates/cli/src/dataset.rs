use std::path::{Path, PathBuf};

use anyhow::Context;

pub const LABEL_FILE: &str = "label.json";
pub const FRAMES_DIR: &str = "frames";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Video {
    pub id: String,
    pub dir: PathBuf,
}

impl Video {
    pub fn label_path(&self) -> PathBuf {
        self.dir.join(LABEL_FILE)
    }

    pub fn frames_dir(&self) -> PathBuf {
        self.dir.join(FRAMES_DIR)
    }

    /// Label file of this video in a mirrored tree.
    pub fn mirrored_label(&self, root: &Path) -> PathBuf {
        root.join(&self.id).join(LABEL_FILE)
    }
}

/// Every subdirectory of `root` is one video, sorted by id.
pub fn list_videos(root: &Path) -> anyhow::Result<Vec<Video>> {
    let entries = std::fs::read_dir(root).map_err(|e| crate::usage(format!("{}: {e}", root.display())))?;
    let mut videos = Vec::new();
    for entry in entries {
        let entry = entry.with_context(|| root.display().to_string())?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let Ok(id) = entry.file_name().into_string() else {
            log::warn!("skipping non UTF-8 directory {}", entry.path().display());
            continue;
        };
        videos.push(Video { id, dir: entry.path() });
    }
    videos.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(videos)
}

/// Creates `path`'s parent directories and writes the file.
pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    std::fs::write(path, bytes).with_context(|| path.display().to_string())
}
