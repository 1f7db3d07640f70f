//! Span detection, candidate generation and disambiguation.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::embed::{EmbeddingKind, KgEmbeddingSet};
use crate::encoder::{EncodeError, TextEncoder};
use crate::index::{any_duplicate_label, duplicate_label_exists, Candidate, LabelIndex};
use crate::rerank::{compose_question, entity_features, rank, RankedEntity, RerankError, SiameseParams};
use crate::rerank::{FEATURE_DIM, KG_DIM};
use crate::span::{DetectError, SpanDetector, SpanModelId, SpanPrediction};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkMode {
    LabelSorting,
    ConditionalDisambiguation,
    HardDisambiguation,
}

impl LinkMode {
    pub const ALL: [LinkMode; 3] =
        [LinkMode::LabelSorting, LinkMode::ConditionalDisambiguation, LinkMode::HardDisambiguation];

    pub fn as_str(self) -> &'static str {
        match self {
            LinkMode::LabelSorting => "label-sorting",
            LinkMode::ConditionalDisambiguation => "conditional",
            LinkMode::HardDisambiguation => "hard",
        }
    }
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown link mode {0:?}")]
pub struct UnknownMode(pub String);

impl FromStr for LinkMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "label-sorting" | "labelsorting" => Ok(LinkMode::LabelSorting),
            "conditional" | "conditional-disambiguation" => Ok(LinkMode::ConditionalDisambiguation),
            "hard" | "hard-disambiguation" => Ok(LinkMode::HardDisambiguation),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRequest {
    pub question: String,
    pub span_model: SpanModelId,
    pub embedding: EmbeddingKind,
    pub mode: LinkMode,
    pub k: usize,
}

impl LinkRequest {
    pub fn new(question: impl Into<String>, span_model: SpanModelId, embedding: EmbeddingKind, mode: LinkMode) -> Self {
        Self { question: question.into(), span_model, embedding, mode, k: DEFAULT_K }
    }
}

/// Which score produced the distances of a span's ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scorer {
    /// `1 - lexical_score` from the label index.
    Lexical,
    /// Cosine distance between Siamese encodings.
    Siamese,
}

impl Scorer {
    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::Lexical => "lexical",
            Scorer::Siamese => "siamese",
        }
    }
}

/// Error attached to one span while its siblings still resolve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanFailure {
    pub code: &'static str,
    pub message: String,
}

impl SpanFailure {
    pub fn is_remote(&self) -> bool {
        matches!(self.code, "encoder_unavailable" | "bad_remote_vector")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanLink {
    pub span: SpanPrediction,
    pub top: Option<RankedEntity>,
    pub ranked: Vec<RankedEntity>,
    pub disambiguation_ran: bool,
    pub scorer: Scorer,
    pub error: Option<SpanFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub request: LinkRequest,
    pub spans: Vec<SpanLink>,
    /// Wall-clock time, filled in by callers that own a clock.
    pub timing_ms: Option<u64>,
}

impl LinkResult {
    /// Top-ranked uri of every span that produced one, in span order.
    pub fn top_uris(&self) -> impl Iterator<Item = &str> {
        self.spans.iter().filter_map(|s| s.top.as_ref().map(|t| t.uri.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("resource missing: {0}")]
    ResourceMissing(String),
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("span detector {model} failed: {source}")]
    Detect { model: SpanModelId, source: DetectError },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResourceError {
    #[error("{kind} embeddings have dimension {found}, expected {expected}")]
    EmbeddingDim { kind: EmbeddingKind, expected: usize, found: usize },
    #[error("{kind} re-ranker expects {found} inputs, expected {expected}")]
    ParamsInput { kind: EmbeddingKind, expected: usize, found: usize },
    #[error("span model {0} configured twice")]
    DuplicateDetector(SpanModelId),
}

/// When conditional disambiguation fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriggerRule {
    /// The top candidate's label equals another candidate's label.
    #[default]
    TopCandidate,
    /// Any two candidates share a label.
    AnyPair,
}

/// What the entity label is compared against for the similarity feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityTarget {
    #[default]
    Question,
    Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkOptions {
    pub trigger: TriggerRule,
    pub similarity: SimilarityTarget,
}

pub type SharedDetector = Box<dyn SpanDetector + Send + Sync>;
pub type SharedEncoder = Box<dyn TextEncoder + Send + Sync>;

/// Embedding set plus the re-ranker trained against it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reranker {
    pub embeddings: KgEmbeddingSet,
    pub params: SiameseParams,
}

/// Everything [`link`] needs, loaded once and shared read-only.
pub struct Resources {
    index: LabelIndex,
    detectors: Vec<(SpanModelId, SharedDetector)>,
    rerankers: BTreeMap<EmbeddingKind, Reranker>,
    encoder: SharedEncoder,
    options: LinkOptions,
}

impl fmt::Debug for Resources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resources")
            .field("labels", &self.index.labels().len())
            .field("detectors", &self.detector_ids())
            .field("embeddings", &self.embedding_kinds())
            .field("options", &self.options)
            .finish()
    }
}

impl Resources {
    pub fn new(index: LabelIndex, encoder: SharedEncoder) -> Self {
        Self { index, detectors: Vec::new(), rerankers: BTreeMap::new(), encoder, options: LinkOptions::default() }
    }

    pub fn with_options(mut self, options: LinkOptions) -> Self {
        self.options = options;
        self
    }

    pub fn add_detector(&mut self, id: SpanModelId, detector: SharedDetector) -> Result<(), ResourceError> {
        if self.detectors.iter().any(|(d, _)| *d == id) {
            return Err(ResourceError::DuplicateDetector(id));
        }
        self.detectors.push((id, detector));
        Ok(())
    }

    /// Register the embedding set and re-ranker for their kind, replacing any
    /// earlier one.
    pub fn add_reranker(&mut self, reranker: Reranker) -> Result<(), ResourceError> {
        let kind = reranker.embeddings.kind();
        if reranker.embeddings.dim() != KG_DIM {
            return Err(ResourceError::EmbeddingDim { kind, expected: KG_DIM, found: reranker.embeddings.dim() });
        }
        if reranker.params.input_dim() != FEATURE_DIM {
            return Err(ResourceError::ParamsInput { kind, expected: FEATURE_DIM, found: reranker.params.input_dim() });
        }
        self.rerankers.insert(kind, reranker);
        Ok(())
    }

    pub fn index(&self) -> &LabelIndex {
        &self.index
    }

    pub fn options(&self) -> LinkOptions {
        self.options
    }

    pub fn detector(&self, id: &SpanModelId) -> Option<&(dyn SpanDetector + Send + Sync)> {
        self.detectors.iter().find(|(d, _)| d == id).map(|(_, det)| det.as_ref())
    }

    pub fn reranker(&self, kind: EmbeddingKind) -> Option<&Reranker> {
        self.rerankers.get(&kind)
    }

    pub fn encoder(&self) -> &(dyn TextEncoder + Send + Sync) {
        self.encoder.as_ref()
    }

    /// Detector ids in registration order.
    pub fn detector_ids(&self) -> Vec<SpanModelId> {
        self.detectors.iter().map(|(d, _)| d.clone()).collect()
    }

    /// Loaded embedding kinds in display order.
    pub fn embedding_kinds(&self) -> Vec<EmbeddingKind> {
        EmbeddingKind::ALL.into_iter().filter(|k| self.rerankers.contains_key(k)).collect()
    }

    pub fn available_combinations(&self) -> Vec<(SpanModelId, EmbeddingKind)> {
        available_combinations(&self.detector_ids(), &self.embedding_kinds())
    }
}

/// Cross product of detectors (given order) and embedding kinds (display order).
pub fn available_combinations(
    detectors: &[SpanModelId],
    embeddings: &[EmbeddingKind],
) -> Vec<(SpanModelId, EmbeddingKind)> {
    let kinds: Vec<EmbeddingKind> = EmbeddingKind::ALL.into_iter().filter(|k| embeddings.contains(k)).collect();
    detectors.iter().flat_map(|d| kinds.iter().map(move |&k| (d.clone(), k))).collect()
}

/// Link every span the requested detector finds in the question.
///
/// Label sorting never needs the embedding set; the other modes require it
/// up front, whether or not disambiguation ends up running.
pub fn link(req: &LinkRequest, resources: &Resources) -> Result<LinkResult, LinkError> {
    if req.question.trim().is_empty() {
        return Err(LinkError::InvalidRequest("question is empty"));
    }
    if req.k == 0 {
        return Err(LinkError::InvalidRequest("k must be at least 1"));
    }
    let detector = resources
        .detector(&req.span_model)
        .ok_or_else(|| LinkError::ResourceMissing(alloc::format!("span model {}", req.span_model)))?;
    let reranker = match req.mode {
        LinkMode::LabelSorting => None,
        _ => Some(
            resources
                .reranker(req.embedding)
                .ok_or_else(|| LinkError::ResourceMissing(alloc::format!("{} embeddings", req.embedding)))?,
        ),
    };
    let spans = detector
        .detect(&req.question)
        .map_err(|source| LinkError::Detect { model: req.span_model.clone(), source })?;
    let spans = spans.into_iter().map(|span| link_span(req, resources, reranker, span)).collect();
    Ok(LinkResult { request: req.clone(), spans, timing_ms: None })
}

fn link_span(req: &LinkRequest, resources: &Resources, reranker: Option<&Reranker>, span: SpanPrediction) -> SpanLink {
    let mut out =
        SpanLink { span, top: None, ranked: Vec::new(), disambiguation_ran: false, scorer: Scorer::Lexical, error: None };
    let candidates = match resources.index().search(&out.span.label_text, Some(&out.span.etype), req.k) {
        Ok(c) => c,
        Err(e) => {
            out.error = Some(SpanFailure { code: "invalid_span", message: e.to_string() });
            return out;
        }
    };
    let trigger = match (req.mode, resources.options().trigger) {
        (LinkMode::LabelSorting, _) => false,
        (LinkMode::ConditionalDisambiguation, TriggerRule::TopCandidate) => duplicate_label_exists(&candidates),
        (LinkMode::ConditionalDisambiguation, TriggerRule::AnyPair) => any_duplicate_label(&candidates),
        (LinkMode::HardDisambiguation, _) => !candidates.is_empty(),
    };
    match reranker.filter(|_| trigger) {
        None => out.ranked = candidates.iter().map(lexical_entity).collect(),
        Some(reranker) => {
            out.disambiguation_ran = true;
            out.scorer = Scorer::Siamese;
            match rerank_candidates(req, resources, reranker, &out.span, &candidates) {
                Ok(ranked) => out.ranked = ranked,
                Err(e) => out.error = Some(failure(e)),
            }
        }
    }
    out.top = out.ranked.first().cloned();
    out
}

fn lexical_entity(c: &Candidate) -> RankedEntity {
    RankedEntity {
        uri: c.uri.clone(),
        matched_label: c.matched_label.clone(),
        etype: c.etype.clone(),
        distance: (1.0 - c.lexical_score).max(0.0),
    }
}

fn rerank_candidates(
    req: &LinkRequest,
    resources: &Resources,
    reranker: &Reranker,
    span: &SpanPrediction,
    candidates: &[Candidate],
) -> Result<Vec<RankedEntity>, RerankError> {
    let mut texts: Vec<&str> = Vec::with_capacity(candidates.len() + 1);
    texts.push(&req.question);
    texts.extend(candidates.iter().map(|c| c.matched_label.as_str()));
    let embedded = resources.encoder().encode_batch(&texts)?;
    let context = match resources.options().similarity {
        SimilarityTarget::Question => req.question.as_str(),
        SimilarityTarget::Span => span.label_text.as_str(),
    };
    let question = compose_question(&embedded[0]);
    let pairs = candidates
        .iter()
        .zip(&embedded[1..])
        .map(|(c, emb)| {
            let fv = entity_features(emb, Some(&reranker.embeddings), &c.uri, &c.matched_label, context)?;
            Ok((c.clone(), fv))
        })
        .collect::<Result<Vec<_>, RerankError>>()?;
    rank(&reranker.params, &question, &pairs)
}

fn failure(e: RerankError) -> SpanFailure {
    let code = match &e {
        RerankError::Encode(EncodeError::RemoteUnavailable { .. }) => "encoder_unavailable",
        RerankError::Encode(EncodeError::BadRemoteVector { .. }) => "bad_remote_vector",
        RerankError::Encode(EncodeError::EmptyText { .. }) | RerankError::EmptyText => "empty_text",
        _ => "rerank_failed",
    };
    SpanFailure { code, message: e.to_string() }
}
