//! JSON bodies of the HTTP API and the `link` command.
//!
//! Distances are written with exactly six fractional digits.

use dblplink_core::pipeline::{LinkError, SpanLink, UnknownMode};
use dblplink_core::{EmbeddingKind, LinkMode, LinkRequest, LinkResult, RankedEntity, SpanModelId};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// Fixed-point rendering used for every distance on the wire.
pub fn format_distance(d: f64) -> String {
    // `{:.6}` keeps the sign of -0.0.
    format!("{:.6}", if d == 0.0 { 0.0 } else { d })
}

fn distance_value(d: f64) -> Box<RawValue> {
    let text = if d.is_finite() { format_distance(d) } else { "null".to_string() };
    RawValue::from_string(text).expect("fixed-point number is valid JSON")
}

#[derive(Debug, Serialize)]
pub struct EntityBody {
    pub uri: String,
    pub label: String,
    #[serde(rename = "type")]
    pub etype: String,
    pub distance: Box<RawValue>,
    pub url: String,
}

impl From<&RankedEntity> for EntityBody {
    fn from(e: &RankedEntity) -> Self {
        Self {
            uri: e.uri.clone(),
            label: e.matched_label.clone(),
            etype: e.etype.as_str().to_string(),
            distance: distance_value(e.distance),
            url: e.uri.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq, Eq)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct SpanBody {
    pub label: String,
    #[serde(rename = "type")]
    pub etype: String,
    pub top: Option<EntityBody>,
    pub ranked: Vec<EntityBody>,
    pub disambiguation_ran: bool,
    pub scorer: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorDetail>,
}

impl From<&SpanLink> for SpanBody {
    fn from(s: &SpanLink) -> Self {
        Self {
            label: s.span.label_text.clone(),
            etype: s.span.etype.as_str().to_string(),
            top: s.top.as_ref().map(EntityBody::from),
            ranked: s.ranked.iter().map(EntityBody::from).collect(),
            disambiguation_ran: s.disambiguation_ran,
            scorer: s.scorer.as_str(),
            error: s.error.as_ref().map(|e| ErrorDetail { code: e.code.to_string(), message: e.message.clone() }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq, Eq)]
pub struct RequestEcho {
    pub question: String,
    pub span_model: String,
    pub embedding: String,
    pub mode: String,
    pub k: usize,
}

impl From<&LinkRequest> for RequestEcho {
    fn from(r: &LinkRequest) -> Self {
        Self {
            question: r.question.clone(),
            span_model: r.span_model.to_string(),
            embedding: r.embedding.as_str().to_string(),
            mode: r.mode.as_str().to_string(),
            k: r.k,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LinkBody {
    pub request: RequestEcho,
    pub spans: Vec<SpanBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl From<&LinkResult> for LinkBody {
    fn from(r: &LinkResult) -> Self {
        Self { request: RequestEcho::from(&r.request), spans: r.spans.iter().map(SpanBody::from).collect(), timing_ms: r.timing_ms }
    }
}

pub fn link_json(result: &LinkResult) -> String {
    serde_json::to_string(&LinkBody::from(result)).expect("link body serializes")
}

pub fn link_json_pretty(result: &LinkResult) -> String {
    serde_json::to_string_pretty(&LinkBody::from(result)).expect("link body serializes")
}

/// Body of `GET /api/config`.
#[derive(Debug, Serialize, Deserialize, Clone, PartialEq, Eq)]
pub struct ConfigBody {
    pub span_models: Vec<String>,
    pub embeddings: Vec<String>,
    pub modes: Vec<String>,
    pub sample_questions: Vec<String>,
    pub default_k: usize,
}

/// Incoming `POST /api/link` body.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRequestBody {
    pub question: String,
    pub span_model: String,
    pub embedding: String,
    pub mode: String,
    #[serde(default)]
    pub k: Option<usize>,
}

/// An error with an HTTP status and a stable machine code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn body(&self) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: ErrorRef<'a>,
        }
        #[derive(Serialize)]
        struct ErrorRef<'a> {
            code: &'a str,
            message: &'a str,
        }
        serde_json::to_string(&Envelope { error: ErrorRef { code: self.code, message: &self.message } }).expect("error body serializes")
    }
}

impl LinkRequestBody {
    pub fn parse(bytes: &[u8]) -> Result<Self, ApiError> {
        serde_json::from_slice(bytes).map_err(|e| ApiError::new(400, "malformed_body", e.to_string()))
    }

    /// Resolve names against the available detectors and embeddings.
    pub fn resolve(self, detectors: &[SpanModelId], embeddings: &[EmbeddingKind], default_k: usize) -> Result<LinkRequest, ApiError> {
        if self.question.trim().is_empty() {
            return Err(ApiError::new(400, "invalid_request", "question is empty"));
        }
        let k = self.k.unwrap_or(default_k);
        if k == 0 {
            return Err(ApiError::new(400, "invalid_request", "k must be at least 1"));
        }
        let model = SpanModelId::new(self.span_model);
        if !detectors.contains(&model) {
            return Err(ApiError::new(422, "unknown_span_model", format!("unknown span model {:?}", model.as_str())));
        }
        let mode: LinkMode = self.mode.parse().map_err(|e: UnknownMode| ApiError::new(422, "unknown_mode", e.to_string()))?;
        let embedding: EmbeddingKind = match self.embedding.parse() {
            Ok(kind) if embeddings.contains(&kind) || mode == LinkMode::LabelSorting => kind,
            _ => return Err(ApiError::new(422, "unknown_embedding", format!("unknown embedding {:?}", self.embedding))),
        };
        Ok(LinkRequest { question: self.question, span_model: model, embedding, mode, k })
    }
}

/// Map a pipeline error onto the API's status and codes.
pub fn link_error(err: &LinkError) -> ApiError {
    use dblplink_core::span::DetectError;
    match err {
        LinkError::InvalidRequest(m) => ApiError::new(400, "invalid_request", *m),
        LinkError::ResourceMissing(m) => ApiError::new(422, "unknown_resource", m.clone()),
        LinkError::Detect { source: DetectError::RemoteUnavailable { .. }, .. } => {
            ApiError::new(502, "span_detector_unavailable", err.to_string())
        }
        LinkError::Detect { source: DetectError::Parse { .. }, .. } => ApiError::new(502, "span_output_malformed", err.to_string()),
    }
}
