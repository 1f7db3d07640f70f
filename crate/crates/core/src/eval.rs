//! Precision, recall and F1 of linked entities against gold question sets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embed::EmbeddingKind;
use crate::pipeline::{link, LinkError, LinkMode, LinkRequest, LinkResult, Resources};
use crate::span::SpanModelId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldQuestion {
    pub id: String,
    pub question: String,
    pub gold_entities: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset contains no questions")]
    Empty,
    #[error("duplicate question id {0:?}")]
    DuplicateId(String),
}

/// Reject empty datasets and repeated ids.
pub fn validate_dataset(questions: &[GoldQuestion]) -> Result<(), DatasetError> {
    if questions.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut seen = BTreeSet::new();
    for q in questions {
        if !seen.insert(q.id.as_str()) {
            return Err(DatasetError::DuplicateId(q.id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf1 {
    fn from_counts(hits: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize| match (n, predicted + gold) {
            (_, 0) => 1.0,
            (0, _) => 0.0,
            (n, _) => hits as f64 / n as f64,
        };
        let (precision, recall) = (ratio(predicted), ratio(gold));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { precision, recall, f1 }
    }
}

/// Set precision, recall and F1. An empty prediction scores 1 against an
/// empty gold set and 0 otherwise.
pub fn prf1(predicted: &BTreeSet<String>, gold: &BTreeSet<String>) -> Prf1 {
    Prf1::from_counts(predicted.intersection(gold).count(), predicted.len(), gold.len())
}

/// How a link result turns into a predicted entity set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionPolicy {
    /// The top-ranked entity of each span.
    #[default]
    TopPerSpan,
    /// The first `n` ranked entities of each span.
    TopNPerSpan(usize),
}

impl PredictionPolicy {
    pub fn predict(self, result: &LinkResult) -> BTreeSet<String> {
        let n = match self {
            PredictionPolicy::TopPerSpan => 1,
            PredictionPolicy::TopNPerSpan(n) => n,
        };
        result.spans.iter().flat_map(|s| s.ranked.iter().take(n).map(|r| r.uri.clone())).collect()
    }
}

/// One report row. Label sorting rows carry no embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey<'a> {
    pub detector: &'a str,
    pub embedding: Option<EmbeddingKind>,
    pub mode: LinkMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionRecord {
    pub id: String,
    pub predicted: BTreeSet<String>,
    pub scores: Prf1,
    pub disambiguated: bool,
    /// Detector or per-span failure; the prediction is then partial or empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub detector: SpanModelId,
    pub embedding: Option<EmbeddingKind>,
    pub mode: LinkMode,
    /// Mean of per-question scores.
    pub macro_avg: Prf1,
    /// Scores over pooled counts.
    pub micro_avg: Prf1,
    pub errors: usize,
    pub records: Vec<QuestionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset_size: usize,
    pub empty_gold: usize,
    pub rows: Vec<EvalRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSettings {
    pub k: usize,
    pub policy: PredictionPolicy,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { k: crate::pipeline::DEFAULT_K, policy: PredictionPolicy::default() }
    }
}

/// Report rows in table order: for each detector, label sorting once, then
/// conditional for every embedding, then hard for every embedding.
pub fn plan_rows(combinations: &[(SpanModelId, EmbeddingKind)], modes: &[LinkMode]) -> Vec<(SpanModelId, Option<EmbeddingKind>, LinkMode)> {
    let mut detectors: Vec<&SpanModelId> = Vec::new();
    let mut kinds: BTreeMap<&SpanModelId, Vec<EmbeddingKind>> = BTreeMap::new();
    for (d, k) in combinations {
        if !detectors.contains(&d) {
            detectors.push(d);
        }
        let ks = kinds.entry(d).or_default();
        if !ks.contains(k) {
            ks.push(*k);
        }
    }
    let mut rows = Vec::new();
    for d in detectors {
        for mode in LinkMode::ALL.into_iter().filter(|m| modes.contains(m)) {
            if mode == LinkMode::LabelSorting {
                rows.push((d.clone(), None, mode));
            } else {
                rows.extend(kinds[d].iter().map(|&k| (d.clone(), Some(k), mode)));
            }
        }
    }
    rows
}

/// Link every question under every planned row and aggregate the scores.
///
/// Missing resources abort; detector and per-span failures are recorded on
/// the question and scored as whatever was predicted.
pub fn evaluate(
    dataset: &[GoldQuestion],
    combinations: &[(SpanModelId, EmbeddingKind)],
    modes: &[LinkMode],
    resources: &Resources,
    settings: EvalSettings,
) -> Result<EvalReport, LinkError> {
    let mut rows = Vec::new();
    for (detector, embedding, mode) in plan_rows(combinations, modes) {
        // Label sorting ignores the embedding; any kind will do for the request.
        let kind = embedding.unwrap_or(EmbeddingKind::TransE);
        let mut records = Vec::with_capacity(dataset.len());
        for q in dataset {
            let req = LinkRequest { k: settings.k, ..LinkRequest::new(q.question.clone(), detector.clone(), kind, mode) };
            let record = match link(&req, resources) {
                Ok(result) => {
                    let predicted = settings.policy.predict(&result);
                    let error = result.spans.iter().find_map(|s| s.error.as_ref()).map(|e| e.message.clone());
                    QuestionRecord {
                        id: q.id.clone(),
                        scores: prf1(&predicted, &q.gold_entities),
                        predicted,
                        disambiguated: result.spans.iter().any(|s| s.disambiguation_ran),
                        error,
                    }
                }
                Err(e @ LinkError::Detect { .. }) => QuestionRecord {
                    id: q.id.clone(),
                    scores: prf1(&BTreeSet::new(), &q.gold_entities),
                    predicted: BTreeSet::new(),
                    disambiguated: false,
                    error: Some(e.to_string()),
                },
                Err(e) => return Err(e),
            };
            records.push(record);
        }
        rows.push(aggregate(detector, embedding, mode, records, dataset));
    }
    Ok(EvalReport {
        dataset_size: dataset.len(),
        empty_gold: dataset.iter().filter(|q| q.gold_entities.is_empty()).count(),
        rows,
    })
}

fn aggregate(
    detector: SpanModelId,
    embedding: Option<EmbeddingKind>,
    mode: LinkMode,
    records: Vec<QuestionRecord>,
    dataset: &[GoldQuestion],
) -> EvalRow {
    let n = records.len().max(1) as f64;
    let mean = |f: fn(&Prf1) -> f64| records.iter().map(|r| f(&r.scores)).sum::<f64>() / n;
    let macro_avg = if records.is_empty() {
        Prf1::default()
    } else {
        Prf1 { precision: mean(|s| s.precision), recall: mean(|s| s.recall), f1: mean(|s| s.f1) }
    };
    let (mut hits, mut predicted, mut gold) = (0, 0, 0);
    for (r, q) in records.iter().zip(dataset) {
        hits += r.predicted.intersection(&q.gold_entities).count();
        predicted += r.predicted.len();
        gold += q.gold_entities.len();
    }
    EvalRow {
        detector,
        embedding,
        mode,
        macro_avg,
        micro_avg: Prf1::from_counts(hits, predicted, gold),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        records,
    }
}

impl EvalRow {
    pub fn key(&self) -> RowKey<'_> {
        RowKey { detector: self.detector.as_str(), embedding: self.embedding, mode: self.mode }
    }
}
