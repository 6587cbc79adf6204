//! Local HTTP API: generate a signal, then fetch its spectrum and event table.
//!
//! Jobs live in memory for the life of the process; their files are written
//! under `<output dir>/<job id>/`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use poresim_core::io::{write_run, RunFiles};
use poresim_core::psd::welch_psd;
use poresim_core::{assemble, EventRecord, Error, GenerationConfig, Psd};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::preview::{decimate_minmax, Preview, MAX_PREVIEW_POINTS};

/// Welch segment length used for the spectrum endpoint.
pub const PSD_SEGMENT: usize = 8192;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default)]
pub struct JobRequest {
    pub config: GenerationConfig,
    /// Include a decimated waveform in the response.
    pub preview: bool,
}

impl Default for JobRequest {
    fn default() -> Self {
        Self {
            config: GenerationConfig::default(),
            preview: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdResponse {
    pub frequency: Vec<f64>,
    pub power: Vec<f64>,
    /// Log-log slope between the first non-zero bin and Nyquist.
    pub slope: Option<f64>,
}

impl From<&Psd> for PsdResponse {
    fn from(p: &Psd) -> Self {
        let nyquist = p.frequency.last().copied().unwrap_or_default();
        Self {
            frequency: p.frequency.clone(),
            power: p.power.clone(),
            slope: p.loglog_slope(p.resolution(), nyquist),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobResult {
    pub id: String,
    pub files: RunFiles,
    pub samples: usize,
    pub preview: Option<Preview>,
    pub psd: PsdResponse,
    pub events: Vec<EventRecord>,
    pub log: Vec<String>,
}

#[derive(Clone)]
pub struct AppState {
    out_dir: PathBuf,
    jobs: Arc<RwLock<HashMap<String, Arc<JobResult>>>>,
}

impl AppState {
    pub fn new(out_dir: PathBuf) -> Self {
        Self {
            out_dir,
            jobs: Arc::default(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/generate", post(generate))
        .route("/api/jobs/{id}/psd", get(job_psd))
        .route("/api/jobs/{id}/events", get(job_events))
        .route("/api/defaults", get(defaults))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, out_dir: PathBuf) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(out_dir))).await
}

fn error(status: StatusCode, message: String, log: Vec<String>) -> Response {
    (status, Json(json!({ "error": message, "log": log }))).into_response()
}

/// Generation, file output and analysis for one job; runs off the async executor.
fn run_job(id: String, req: JobRequest, out_dir: PathBuf) -> Result<JobResult, (Error, Vec<String>)> {
    let mut log = vec![format!("job {id}: seed {}", req.config.seed)];
    let fail = |e: Error, mut log: Vec<String>| {
        log.push(format!("failed: {e}"));
        (e, log)
    };
    let g = match assemble::<f64>(&req.config) {
        Ok(g) => g,
        Err(e) => return Err(fail(e, log)),
    };
    log.push(format!("generated {} samples, {} events", g.bundle.len(), g.records.len()));
    let dir = out_dir.join(&id);
    let files = match write_run(&dir, &req.config, &g) {
        Ok(f) => f,
        Err(e) => return Err(fail(e, log)),
    };
    log.push(format!("wrote {}", dir.display()));
    let x = &g.bundle.current;
    let seg = PSD_SEGMENT.min(x.len());
    let psd = match welch_psd(x, g.bundle.sampfreq, seg, seg / 2) {
        Ok(p) => p,
        Err(e) => return Err(fail(e, log)),
    };
    let preview = req
        .preview
        .then(|| decimate_minmax(&g.bundle.time, x, MAX_PREVIEW_POINTS));
    Ok(JobResult {
        id,
        files,
        samples: x.len(),
        preview,
        psd: PsdResponse::from(&psd),
        events: g.records,
        log,
    })
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Response {
    let req: JobRequest = if body.iter().all(u8::is_ascii_whitespace) {
        JobRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request: {e}"), vec![]),
        }
    };
    if let Err(e) = req.config.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string(), vec![]);
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    let out_dir = state.out_dir.clone();
    let job = tokio::task::spawn_blocking(move || run_job(id, req, out_dir)).await;
    match job {
        Ok(Ok(result)) => {
            let result = Arc::new(result);
            state.jobs.write().insert(result.id.clone(), Arc::clone(&result));
            Json(&*result).into_response()
        }
        Ok(Err((e, log))) if e.is_config() => error(StatusCode::BAD_REQUEST, e.to_string(), log),
        Ok(Err((e, log))) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), log),
        Err(join) => error(StatusCode::INTERNAL_SERVER_ERROR, join.to_string(), vec![]),
    }
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<JobResult>, Response> {
    state
        .jobs
        .read()
        .get(id)
        .cloned()
        .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("unknown job {id}"), vec![]))
}

async fn job_psd(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match lookup(&state, &id) {
        Ok(job) => Json(&job.psd).into_response(),
        Err(r) => r,
    }
}

async fn job_events(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match lookup(&state, &id) {
        Ok(job) => Json(&job.events).into_response(),
        Err(r) => r,
    }
}

async fn defaults() -> Json<GenerationConfig> {
    Json(GenerationConfig::default())
}
