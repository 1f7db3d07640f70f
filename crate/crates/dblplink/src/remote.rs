//! HTTP clients for the remote text encoder and span detector.

use std::time::Duration;

use dblplink_core::encoder::{first_empty, EncodeError};
use dblplink_core::span::{parse_model_output, DetectError};
use dblplink_core::{SpanDetector, SpanPrediction, TextEmbedding, TextEncoder};
use serde::{Deserialize, Serialize};

#[derive(Serialize)]
pub struct EncodeRequest<'a> {
    pub texts: &'a [&'a str],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpanRequest {
    pub model: String,
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpanResponse {
    pub output: String,
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into()
}

/// POST `body` and decode a JSON reply; every failure is a cause string.
fn post_json<B: Serialize, R: for<'de> Deserialize<'de>>(agent: &ureq::Agent, url: &str, body: &B) -> Result<R, String> {
    let mut resp = agent.post(url).send_json(body).map_err(|e| e.to_string())?;
    resp.body_mut().read_json::<R>().map_err(|e| format!("unreadable response: {e}"))
}

/// Client for `POST {"texts": [...]}` → `{"vectors": [[...], ...]}`.
#[derive(Debug, Clone)]
pub struct RemoteEncoder {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteEncoder {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self { endpoint: endpoint.into(), agent: agent(timeout) }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl TextEncoder for RemoteEncoder {
    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<TextEmbedding>, EncodeError> {
        if let Some(index) = first_empty(texts) {
            return Err(EncodeError::EmptyText { index });
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp: EncodeResponse = post_json(&self.agent, &self.endpoint, &EncodeRequest { texts })
            .map_err(|cause| EncodeError::RemoteUnavailable { endpoint: self.endpoint.clone(), cause })?;
        if resp.vectors.len() != texts.len() {
            return Err(EncodeError::BadRemoteVector {
                index: resp.vectors.len().min(texts.len()),
                reason: format!("expected {} vectors, got {}", texts.len(), resp.vectors.len()),
            });
        }
        resp.vectors
            .into_iter()
            .enumerate()
            .map(|(index, v)| TextEmbedding::new(v).map_err(|reason| EncodeError::BadRemoteVector { index, reason }))
            .collect()
    }
}

/// Client for `POST {"model", "question"}` → `{"output": "<spans>"}`.
#[derive(Debug, Clone)]
pub struct RemoteSpanDetector {
    endpoint: String,
    model: String,
    agent: ureq::Agent,
}

impl RemoteSpanDetector {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        Self { endpoint: endpoint.into(), model: model.into(), agent: agent(timeout) }
    }
}

impl SpanDetector for RemoteSpanDetector {
    fn detect(&self, question: &str) -> Result<Vec<SpanPrediction>, DetectError> {
        let body = SpanRequest { model: self.model.clone(), question: question.to_string() };
        let resp: SpanResponse = post_json(&self.agent, &self.endpoint, &body)
            .map_err(|cause| DetectError::RemoteUnavailable { endpoint: self.endpoint.clone(), cause })?;
        parse_model_output(&resp.output).map_err(|error| DetectError::Parse { error, raw: resp.output })
    }
}

/// Remote span detection as a free function.
pub fn detect_remote(endpoint: &str, model: &str, question: &str, timeout: Duration) -> Result<Vec<SpanPrediction>, DetectError> {
    RemoteSpanDetector::new(endpoint, model, timeout).detect(question)
}
