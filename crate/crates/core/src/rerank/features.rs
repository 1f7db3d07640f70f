//! The 969-dimensional feature layout.
//!
//! | range        | question         | entity                         |
//! |--------------|------------------|--------------------------------|
//! | `[0, 768)`   | text embedding   | text embedding of the label    |
//! | `[768, 968)` | zero             | KG embedding of the entity     |
//! | `968`        | zero             | label/question string similarity |

use alloc::vec;
use alloc::vec::Vec;

use super::RerankError;
use crate::encoder::{TextEmbedding, TEXT_DIM};
use crate::text::{levenshtein_similarity, normalize};

pub const KG_DIM: usize = 200;
pub const FEATURE_DIM: usize = TEXT_DIM + KG_DIM + 1;
pub const KG_SLOT: core::ops::Range<usize> = TEXT_DIM..TEXT_DIM + KG_DIM;
pub const SIMILARITY_SLOT: usize = FEATURE_DIM - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self, RerankError> {
        if values.len() != FEATURE_DIM {
            return Err(RerankError::DimensionMismatch { expected: FEATURE_DIM, found: values.len() });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn text_part(&self) -> &[f64] {
        &self.0[..TEXT_DIM]
    }

    pub fn kg_part(&self) -> &[f64] {
        &self.0[KG_SLOT]
    }

    pub fn similarity(&self) -> f64 {
        self.0[SIMILARITY_SLOT]
    }
}

pub fn compose_question(question: &TextEmbedding) -> FeatureVector {
    let mut values = vec![0.0; FEATURE_DIM];
    values[..TEXT_DIM].copy_from_slice(question.as_slice());
    FeatureVector(values)
}

pub fn compose_entity(label: &TextEmbedding, kg: &[f64], similarity: f64) -> Result<FeatureVector, RerankError> {
    if kg.len() != KG_DIM {
        return Err(RerankError::DimensionMismatch { expected: KG_DIM, found: kg.len() });
    }
    if !(0.0..=1.0).contains(&similarity) {
        return Err(RerankError::SimilarityOutOfRange(similarity));
    }
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend_from_slice(label.as_slice());
    values.extend_from_slice(kg);
    values.push(similarity);
    Ok(FeatureVector(values))
}

/// Best `1 - levenshtein / max_len` between `label` and any window of
/// `question` with the label's length (the whole question when it is the
/// shorter string). Both sides are normalized first.
pub fn string_similarity(label: &str, question: &str) -> Result<f64, RerankError> {
    let label: Vec<char> = normalize(label).chars().collect();
    let question: Vec<char> = normalize(question).chars().collect();
    if label.is_empty() || question.is_empty() {
        return Err(RerankError::EmptyText);
    }
    if label.len() > question.len() {
        return Ok(levenshtein_similarity(&label, &question));
    }
    let mut best = 0.0f64;
    for window in question.windows(label.len()) {
        best = best.max(levenshtein_similarity(&label, window));
        if best == 1.0 {
            break;
        }
    }
    Ok(best)
}
