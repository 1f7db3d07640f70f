//! Reference stand-ins for the remote encoder and span services, used for
//! hermetic integration runs.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use dblplink_core::span::{serialize_spans, LexiconDetector};
use dblplink_core::{HashEncoder, TEXT_DIM};

use crate::remote::{EncodeResponse, SpanRequest, SpanResponse};

/// Path both stubs answer on.
pub const STUB_PATH: &str = "/";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderStubMode {
    /// Hash-encoder vectors for each text.
    Hash,
    /// Like `Hash` but every vector is one component short.
    ShortVectors,
    /// Always HTTP 503.
    Fail,
}

#[derive(Debug, Clone)]
pub enum SpanStubMode {
    /// Reply with the same output for every question.
    Fixed(String),
    /// Run a lexicon detector and serialize its spans.
    Lexicon(Arc<LexiconDetector>),
}

#[derive(Debug, Clone)]
struct SpanState {
    mode: SpanStubMode,
    delay: Duration,
}

#[derive(serde::Deserialize)]
struct EncodeBody {
    texts: Vec<String>,
}

pub fn encoder_router(mode: EncoderStubMode) -> Router {
    Router::new().route(STUB_PATH, post(encode_handler)).with_state(mode)
}

async fn encode_handler(State(mode): State<EncoderStubMode>, Json(body): Json<EncodeBody>) -> Result<Json<EncodeResponse>, StatusCode> {
    if mode == EncoderStubMode::Fail {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let mut vectors = Vec::with_capacity(body.texts.len());
    for t in &body.texts {
        let mut v = HashEncoder.embed(t).ok_or(StatusCode::BAD_REQUEST)?.into_inner();
        if mode == EncoderStubMode::ShortVectors {
            v.truncate(TEXT_DIM - 1);
        }
        vectors.push(v);
    }
    Ok(Json(EncodeResponse { vectors }))
}

pub fn span_router(mode: SpanStubMode, delay: Duration) -> Router {
    Router::new().route(STUB_PATH, post(span_handler)).with_state(SpanState { mode, delay })
}

async fn span_handler(State(state): State<SpanState>, Json(body): Json<SpanRequest>) -> Result<Json<SpanResponse>, StatusCode> {
    if !state.delay.is_zero() {
        tokio::time::sleep(state.delay).await;
    }
    let output = match &state.mode {
        SpanStubMode::Fixed(s) => s.clone(),
        SpanStubMode::Lexicon(d) => serialize_spans(&d.detect_spans(&body.question)).map_err(|_| StatusCode::INTERNAL_SERVER_ERROR)?,
    };
    Ok(Json(SpanResponse { output }))
}

/// A router served from a background thread with its own runtime; stops
/// when dropped.
#[derive(Debug)]
pub struct Spawned {
    addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Spawned {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://addr/`
    pub fn url(&self) -> String {
        format!("http://{}{}", self.addr, STUB_PATH)
    }
}

impl Drop for Spawned {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn(router: Router, addr: SocketAddr) -> std::io::Result<Spawned> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().expect("tokio runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            // Open keep-alive connections are cut rather than drained.
            tokio::select! {
                _ = axum::serve(listener, router) => {}
                _ = rx => {}
            }
        });
    });
    Ok(Spawned { addr, shutdown: Some(tx), thread: Some(thread) })
}

/// Spawn on an ephemeral localhost port.
pub fn spawn_local(router: Router) -> std::io::Result<Spawned> {
    spawn(router, SocketAddr::from(([127, 0, 0, 1], 0)))
}
