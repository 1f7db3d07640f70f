//! HTTP API: `/api/health`, `/api/config`, `/api/link`, plus the static
//! console under `/`.

use std::future::IntoFuture;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use dblplink_core::{link, EmbeddingKind, LinkMode, Resources, SpanModelId};
use serde::Serialize;
use tower_http::services::ServeDir;

use crate::config::{ConfigError, ServiceConfig};
use crate::wire::{link_error, ApiError, ConfigBody, LinkBody, LinkRequestBody};

/// Response header carrying the linking time in milliseconds.
pub const ELAPSED_HEADER: &str = "x-link-elapsed-ms";

pub struct AppState {
    meta: ConfigBody,
    detectors: Vec<SpanModelId>,
    embeddings: Vec<EmbeddingKind>,
    resources: OnceLock<Resources>,
}

impl AppState {
    fn with_meta(detectors: Vec<SpanModelId>, embeddings: Vec<EmbeddingKind>, samples: Vec<String>, default_k: usize) -> Self {
        let embeddings: Vec<EmbeddingKind> = EmbeddingKind::ALL.into_iter().filter(|k| embeddings.contains(k)).collect();
        let meta = ConfigBody {
            span_models: detectors.iter().map(|d| d.to_string()).collect(),
            embeddings: embeddings.iter().map(|k| k.as_str().to_string()).collect(),
            modes: LinkMode::ALL.iter().map(|m| m.as_str().to_string()).collect(),
            sample_questions: samples,
            default_k,
        };
        Self { meta, detectors, embeddings, resources: OnceLock::new() }
    }

    /// State for already-loaded resources.
    pub fn ready(resources: Resources, samples: Vec<String>, default_k: usize) -> Self {
        let state = Self::with_meta(resources.detector_ids(), resources.embedding_kinds(), samples, default_k);
        let _ = state.resources.set(resources);
        state
    }

    /// State whose resources are still loading; see [`AppState::install`].
    pub fn pending(cfg: &ServiceConfig) -> Self {
        let detectors = cfg.detectors.iter().map(|d| SpanModelId::new(d.id.clone())).collect();
        let embeddings = cfg.embeddings.iter().filter_map(|e| e.kind.parse().ok()).collect();
        Self::with_meta(detectors, embeddings, cfg.sample_questions.clone(), cfg.default_k)
    }

    pub fn install(&self, resources: Resources) {
        let _ = self.resources.set(resources);
    }

    pub fn is_ready(&self) -> bool {
        self.resources.get().is_some()
    }

    pub fn config_body(&self) -> &ConfigBody {
        &self.meta
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, self.body())
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body).into_response()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response body serializes")
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/config", get(config))
        .route("/api/link", post(link_handler))
        .method_not_allowed_fallback(not_allowed)
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).not_found_service(axum::routing::any(not_found))),
        None => api.fallback(not_found),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(404, "not_found", "no such resource")
}

async fn not_allowed() -> ApiError {
    ApiError::new(404, "not_found", "no such resource for this method")
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let status = if state.is_ready() { "ok" } else { "loading" };
    json_response(StatusCode::OK, to_json(&serde_json::json!({ "status": status })))
}

async fn config(State(state): State<Arc<AppState>>) -> Response {
    json_response(StatusCode::OK, to_json(state.config_body()))
}

#[derive(Serialize)]
struct PartialBody<'a> {
    error: crate::wire::ErrorDetail,
    result: &'a LinkBody,
}

async fn link_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req = LinkRequestBody::parse(&body)?.resolve(&state.detectors, &state.embeddings, state.meta.default_k)?;
    if !state.is_ready() {
        return Err(ApiError::new(500, "loading", "resources are still loading"));
    }
    let worker = state.clone();
    let (result, elapsed) = tokio::task::spawn_blocking(move || {
        let started = Instant::now();
        let resources = worker.resources.get().expect("checked above");
        let result = link(&req, resources);
        (result, started.elapsed().as_millis() as u64)
    })
    .await
    .map_err(|_| ApiError::new(500, "internal", "linking task failed"))?;
    let result = result.map_err(|e| link_error(&e))?;
    let body = LinkBody::from(&result);
    let remote_failure = result.spans.iter().filter_map(|s| s.error.as_ref()).find(|e| e.is_remote());
    let mut response = match remote_failure {
        None => json_response(StatusCode::OK, to_json(&body)),
        Some(f) => {
            let error = crate::wire::ErrorDetail { code: f.code.to_string(), message: f.message.clone() };
            json_response(StatusCode::BAD_GATEWAY, to_json(&PartialBody { error, result: &body }))
        }
    };
    response.headers_mut().insert(ELAPSED_HEADER, HeaderValue::from(elapsed));
    Ok(response)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("loading resources failed: {0}")]
    Load(ConfigError),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Validate files, bind, then load resources in the background while
/// `/api/health` reports `loading`. A load failure stops the server.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServeError> {
    cfg.check_files()?;
    let listener =
        tokio::net::TcpListener::bind(&cfg.listen).await.map_err(|source| ServeError::Bind { addr: cfg.listen.clone(), source })?;
    serve_on(listener, cfg).await
}

pub async fn serve_on(listener: tokio::net::TcpListener, cfg: ServiceConfig) -> Result<(), ServeError> {
    let state = Arc::new(AppState::pending(&cfg));
    let static_dir: Option<PathBuf> = cfg.static_dir.clone();
    let app = router(state.clone(), static_dir.as_deref());
    let loader = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || cfg.load_resources().map(|r| state.install(r)))
    };
    let server = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .into_future();
    tokio::pin!(server);
    tokio::select! {
        r = &mut server => return Ok(r?),
        loaded = loader => match loaded {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(ServeError::Load(e)),
            Err(_) => return Err(ServeError::Load(ConfigError::Invalid("loader task panicked".into()))),
        },
    }
    Ok(server.await?)
}
