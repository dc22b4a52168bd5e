use std::path::PathBuf;

/// Errors produced by the annofix core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// An invariant of a domain value was violated. `frame` is 1-based.
    #[error("{}", match .frame {
        Some(t) => format!("invalid data at frame {t}: {}", .message),
        None => format!("invalid data: {}", .message),
    })]
    Validation { frame: Option<usize>, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {message}")]
    Image { path: PathBuf, message: String },

    #[error("frame {t} out of range (sequence has {len} frames)")]
    FrameOutOfRange { t: usize, len: usize },

    #[error("{path}: frame is {found_w}x{found_h}, sequence is {expected_w}x{expected_h}")]
    DimensionMismatch {
        path: PathBuf,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },

    #[error("degenerate patch: clamped region is {width}x{height}, need at least 4x4")]
    DegeneratePatch { width: i64, height: i64 },

    #[error("no feasible template placement ({template_w}x{template_h} template in {frame_w}x{frame_h} frame)")]
    MatchInfeasible {
        template_w: usize,
        template_h: usize,
        frame_w: usize,
        frame_h: usize,
    },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("length mismatch: annotations have {annotations} frames, other input has {other}")]
    LengthMismatch { annotations: usize, other: usize },

    #[error("invalid noise specification: {0}")]
    InvalidSpec(String),

    #[error("injection log does not match the track at frame {frame}: {message}")]
    ReplayMismatch { frame: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(frame: Option<usize>, message: impl Into<String>) -> Self {
        Error::Validation {
            frame,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
