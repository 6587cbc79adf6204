use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use poresim_cli::service::{router, AppState, JobResult, PsdResponse};
use poresim_core::io::read_event_details_csv;
use poresim_core::{EventRecord, GenerationConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn post(body: Value) -> Request<Body> {
    Request::post("/api/generate")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn small_config() -> GenerationConfig {
    let mut cfg = GenerationConfig {
        seed: 5,
        ..GenerationConfig::default()
    };
    cfg.events.numpulses = 30;
    cfg
}

#[tokio::test]
async fn generate_then_fetch_psd_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    let (status, body) = call(&app, post(json!({ "config": small_config() }))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let job: JobResult = serde_json::from_slice(&body).unwrap();
    let preview = job.preview.as_ref().unwrap();
    assert!(preview.current.len() <= 4096 && !preview.current.is_empty());
    assert_eq!(job.events.len(), 30);

    let (status, body) = call(&app, get(&format!("/api/jobs/{}/events", job.id))).await;
    assert_eq!(status, StatusCode::OK);
    let events: Vec<EventRecord> = serde_json::from_slice(&body).unwrap();
    assert_eq!(events, read_event_details_csv(&job.files.details).unwrap());

    let (status, body) = call(&app, get(&format!("/api/jobs/{}/psd", job.id))).await;
    assert_eq!(status, StatusCode::OK);
    let psd: PsdResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(psd.frequency.len(), psd.power.len());
    assert!(psd.slope.is_some());
}

#[tokio::test]
async fn empty_body_uses_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    let req = Request::post("/api/generate").body(Body::empty()).unwrap();
    let (status, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let job: JobResult = serde_json::from_slice(&body).unwrap();
    assert_eq!(job.events.len(), 100);
}

#[tokio::test]
async fn invalid_requests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    let mut cfg = small_config();
    cfg.noise.nsigma = 0.0;
    let (status, body) = call(&app, post(json!({ "config": cfg }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: Value = serde_json::from_slice(&body).unwrap();
    assert!(err["error"].as_str().unwrap().contains("nsigma"));

    let req = Request::post("/api/generate").body(Body::from("{not json")).unwrap();
    assert_eq!(call(&app, req).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_job_is_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    assert_eq!(call(&app, get("/api/jobs/nope/psd")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/api/jobs/nope/events")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn defaults_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    let (status, body) = call(&app, get("/api/defaults")).await;
    assert_eq!(status, StatusCode::OK);
    let cfg: GenerationConfig = serde_json::from_slice(&body).unwrap();
    assert_eq!(cfg, GenerationConfig::default());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_jobs_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(dir.path().to_path_buf()));
    let mut handles = Vec::new();
    for seed in 0..4u64 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let mut cfg = small_config();
            cfg.seed = seed;
            let (status, body) = call(&app, post(json!({ "config": cfg, "preview": false }))).await;
            assert_eq!(status, StatusCode::OK);
            serde_json::from_slice::<JobResult>(&body).unwrap()
        }));
    }
    let mut ids = Vec::new();
    for h in handles {
        let job = h.await.unwrap();
        assert!(job.preview.is_none());
        ids.push(job.id);
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 4);
}
