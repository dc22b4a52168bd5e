//! HTTP review service. Serves frames and both annotation sets of every
//! video and records one operator decision per video.
//!
//! - `GET /api/videos`: [`Manifest`]
//! - `GET /api/videos/{id}/frames/{t}`: frame `t` (0-based, as in the label arrays) as PNG
//! - `GET /api/videos/{id}/annotations?set=original|corrected`: annotation JSON
//! - `POST /api/videos/{id}/decision` with `{"choice": ..., "operator": ...}`: the stored [`DecisionRecord`]
//! - `GET /api/decisions`: the decisions file
//!
//! Everything else is served from the UI bundle directory when one is given.
//! The decisions file is the only thing the service writes.

use std::collections::HashMap;
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use annofix::format::{read_annotations, write_annotations};
use annofix::imaging::{FrameSequence, FrameSource};
use anyhow::Context;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::cli::ServeArgs;
use crate::dataset::{list_videos, Video};
use crate::decisions::{Choice, DecisionFile, DecisionRecord};

#[derive(Debug, Clone)]
pub struct ReviewConfig {
    pub dataset: PathBuf,
    pub corrected: PathBuf,
    pub decisions: PathBuf,
    pub ui: Option<PathBuf>,
}

impl From<&ServeArgs> for ReviewConfig {
    fn from(a: &ServeArgs) -> Self {
        Self {
            dataset: a.dataset.clone(),
            corrected: a.corrected.clone(),
            decisions: a.decisions.clone(),
            ui: a.ui.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    None,
    Original,
    Corrected,
}

impl From<Choice> for Decision {
    fn from(c: Choice) -> Self {
        match c {
            Choice::Original => Decision::Original,
            Choice::Corrected => Decision::Corrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// `None` when the frame directory cannot be read.
    pub frames: Option<usize>,
    pub frames_dir: PathBuf,
    pub original: Option<PathBuf>,
    pub corrected: Option<PathBuf>,
    pub decision: Decision,
    pub operator: Option<String>,
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub videos: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DecisionRequest {
    pub choice: Choice,
    pub operator: String,
}

struct AppState {
    videos: Vec<Video>,
    corrected: PathBuf,
    decisions_path: PathBuf,
    decisions: Mutex<DecisionFile>,
    sequences: Mutex<HashMap<String, Arc<FrameSequence>>>,
}

impl AppState {
    fn video(&self, id: &str) -> Result<&Video, ApiError> {
        self.videos
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| ApiError::not_found(format!("unknown video {id:?}")))
    }

    fn sequence(&self, video: &Video) -> anyhow::Result<Arc<FrameSequence>> {
        if let Some(seq) = self.sequences.lock().expect("sequence cache lock").get(&video.id) {
            return Ok(seq.clone());
        }
        let seq = Arc::new(FrameSequence::open(video.frames_dir())?);
        self.sequences
            .lock()
            .expect("sequence cache lock")
            .insert(video.id.clone(), seq.clone());
        Ok(seq)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

/// Builds the service. Fails when the dataset or corrected tree is missing
/// or the decisions file is corrupt.
pub fn router(config: &ReviewConfig) -> anyhow::Result<Router> {
    if !config.corrected.is_dir() {
        return Err(crate::usage(format!(
            "{}: corrected annotation tree not found",
            config.corrected.display()
        )));
    }
    let videos = list_videos(&config.dataset)?;
    let decisions = DecisionFile::load(&config.decisions).map_err(|e| crate::usage(format!("{e:#}")))?;
    for d in &decisions.decisions {
        if !videos.iter().any(|v| v.id == d.video_id) {
            log::warn!("decisions file mentions unknown video {}", d.video_id);
        }
    }
    let state = Arc::new(AppState {
        videos,
        corrected: config.corrected.clone(),
        decisions_path: config.decisions.clone(),
        decisions: Mutex::new(decisions),
        sequences: Mutex::new(HashMap::new()),
    });
    let api = Router::new()
        .route("/api/videos", get(manifest))
        .route("/api/videos/{id}/frames/{t}", get(frame))
        .route("/api/videos/{id}/annotations", get(annotations))
        .route("/api/videos/{id}/decision", post(decide))
        .route("/api/decisions", get(all_decisions))
        .with_state(state);
    Ok(match &config.ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_ui),
    })
}

pub async fn serve(config: &ReviewConfig, bind: SocketAddr) -> anyhow::Result<()> {
    let app = router(config)?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("cannot bind {bind}"))?;
    log::info!("review service listening on {}", listener.local_addr()?);
    eprintln!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

pub fn serve_blocking(args: &ServeArgs) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(&ReviewConfig::from(args), args.bind))
}

async fn no_ui() -> (StatusCode, &'static str) {
    (
        StatusCode::NOT_FOUND,
        "no UI bundle configured (start with --ui <dir>); the API is under /api\n",
    )
}

fn existing(path: PathBuf) -> Option<PathBuf> {
    path.is_file().then_some(path)
}

async fn manifest(State(state): State<Arc<AppState>>) -> Result<Json<Manifest>, ApiError> {
    let s = state.clone();
    let entries = tokio::task::spawn_blocking(move || {
        s.videos
            .iter()
            .map(|v| {
                let frames = match s.sequence(v) {
                    Ok(seq) => Some(seq.frame_count()),
                    Err(e) => {
                        log::warn!("video {}: {e}", v.id);
                        None
                    }
                };
                ManifestEntry {
                    id: v.id.clone(),
                    frames,
                    frames_dir: v.frames_dir(),
                    original: existing(v.label_path()),
                    corrected: existing(v.mirrored_label(&s.corrected)),
                    decision: Decision::None,
                    operator: None,
                    timestamp: None,
                }
            })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(ApiError::internal)?;
    let decisions = state.decisions.lock().expect("decisions lock");
    let videos = entries
        .into_iter()
        .map(|mut e| {
            if let Some(d) = decisions.get(&e.id) {
                e.decision = d.choice.into();
                e.operator = Some(d.operator.clone());
                e.timestamp = Some(d.timestamp);
            }
            e
        })
        .collect();
    Ok(Json(Manifest { videos }))
}

async fn frame(
    State(state): State<Arc<AppState>>,
    UrlPath((id, t)): UrlPath<(String, usize)>,
) -> Result<Response, ApiError> {
    let video = state.video(&id)?.clone();
    let s = state.clone();
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let seq = s.sequence(&video).map_err(|e| ApiError::not_found(e.to_string()))?;
        if t >= seq.frame_count() {
            return Err(ApiError::not_found(format!(
                "frame {t} out of range, video has {} frames",
                seq.frame_count()
            )));
        }
        let frame = seq.frame(t).map_err(ApiError::internal)?;
        let img = image::GrayImage::from_raw(frame.width() as u32, frame.height() as u32, frame.pixels().to_vec())
            .ok_or_else(|| ApiError::internal("frame buffer size mismatch"))?;
        let mut out = Vec::new();
        img.write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png)
            .map_err(ApiError::internal)?;
        Ok(out)
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Deserialize)]
struct SetQuery {
    set: Option<String>,
}

async fn annotations(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SetQuery>,
) -> Result<Response, ApiError> {
    let video = state.video(&id)?;
    let path = match q.set.as_deref().unwrap_or("original") {
        "original" => video.label_path(),
        "corrected" => video.mirrored_label(&state.corrected),
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown set {other:?}, use original or corrected"
            )))
        }
    };
    let body = read_json_labels(&path)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

fn read_json_labels(path: &Path) -> Result<Vec<u8>, ApiError> {
    if !path.is_file() {
        return Err(ApiError::not_found(format!("{} not found", path.display())));
    }
    read_annotations(path)
        .map(|t| write_annotations(&t))
        .map_err(ApiError::internal)
}

async fn decide(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<DecisionRequest>,
) -> Result<Json<DecisionRecord>, ApiError> {
    state.video(&id)?;
    let record = DecisionRecord::now(id, req.choice, req.operator);
    let s = state.clone();
    let saved = record.clone();
    tokio::task::spawn_blocking(move || {
        let mut file = s.decisions.lock().expect("decisions lock");
        let mut next = file.clone();
        next.upsert(saved);
        next.save(&s.decisions_path)?;
        *file = next;
        anyhow::Ok(())
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(|e| ApiError::internal(format!("{e:#}")))?;
    Ok(Json(record))
}

async fn all_decisions(State(state): State<Arc<AppState>>) -> Json<DecisionFile> {
    Json(state.decisions.lock().expect("decisions lock").clone())
}
