//! The operator decisions file `{"decisions": [DecisionRecord, ...]}`.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Original,
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub video_id: String,
    pub choice: Choice,
    pub operator: String,
    /// UTC seconds since the Unix epoch.
    pub timestamp: u64,
}

impl DecisionRecord {
    pub fn now(video_id: impl Into<String>, choice: Choice, operator: impl Into<String>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            video_id: video_id.into(),
            choice,
            operator: operator.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionFile {
    pub decisions: Vec<DecisionRecord>,
}

impl DecisionFile {
    /// A missing file is an empty decision list; an unreadable or invalid one
    /// is an error.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(e).with_context(|| path.display().to_string()),
        };
        let file: DecisionFile =
            serde_json::from_slice(&bytes).with_context(|| format!("{}: corrupt decisions file", path.display()))?;
        let mut ids: Vec<&str> = file.decisions.iter().map(|d| d.video_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!(
                "{}: corrupt decisions file, video {} appears twice",
                path.display(),
                w[0]
            );
        }
        Ok(file)
    }

    pub fn get(&self, video_id: &str) -> Option<&DecisionRecord> {
        self.decisions.iter().find(|d| d.video_id == video_id)
    }

    /// Inserts the record, replacing an earlier decision for the same video.
    pub fn upsert(&mut self, record: DecisionRecord) {
        match self.decisions.iter_mut().find(|d| d.video_id == record.video_id) {
            Some(slot) => *slot = record,
            None => self.decisions.push(record),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("decisions serialise");
        bytes.push(b'\n');
        bytes
    }

    /// Writes a temporary file next to `path`, syncs it and renames it over
    /// `path`, so readers see either the old or the new file.
    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
        let name = path.file_name().context("decisions path has no file name")?;
        let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_json())?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            anyhow::Error::new(e).context(path.display().to_string())
        })
    }
}
