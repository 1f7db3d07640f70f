//! Disambiguation by a Siamese network over question and entity features.
//!
//! Training minimizes the triplet loss with L2 distances between encoded
//! vectors; ranking orders candidates by cosine distance to the encoded
//! question.

mod dataset;
mod features;
mod network;
mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use dataset::{build_triplets, NegativePolicy, TrainingExample, TripletSources};
pub use features::{
    compose_entity, compose_question, string_similarity, FeatureVector, FEATURE_DIM, KG_DIM, KG_SLOT,
    SIMILARITY_SLOT,
};
pub use network::{SiameseParams, DEFAULT_HIDDEN, DEFAULT_OUTPUT, PARAMS_MAGIC};
pub use train::{mean_triplet_loss, train_reranker, RerankOutcome, RerankTrainConfig, Triplet};

use crate::embed::KgEmbeddingSet;
use crate::encoder::{EncodeError, TextEmbedding};
use crate::index::Candidate;
use crate::kg::EntityType;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RerankError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("string similarity {0} outside [0, 1]")]
    SimilarityOutOfRange(f64),
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("network produced a non-finite output")]
    NonFiniteOutput,
    #[error("parameters contain non-finite values")]
    NonFiniteParams,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss diverged in epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// A candidate ordered by cosine distance to the question.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntity {
    pub uri: String,
    pub matched_label: String,
    pub etype: EntityType,
    /// Lower is better, in `[0, 2]`.
    pub distance: f64,
}

/// Entity features for `uri`: label embedding, KG vector (zeros when the
/// embedding set has none) and the similarity of `label` to `context`.
pub fn entity_features(
    label_embedding: &TextEmbedding,
    embeddings: Option<&KgEmbeddingSet>,
    uri: &str,
    label: &str,
    context: &str,
) -> Result<FeatureVector, RerankError> {
    let zeros = [0.0; KG_DIM];
    let kg = embeddings.and_then(|e| e.entity(uri)).unwrap_or(&zeros);
    compose_entity(label_embedding, kg, string_similarity(label, context)?)
}

/// `max(0, ‖f(a) - f(p)‖ - ‖f(a) - f(n)‖ + margin)`.
pub fn triplet_loss(
    params: &SiameseParams,
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
) -> Result<f64, RerankError> {
    let (ya, yp, yn) = (params.forward(anchor)?, params.forward(positive)?, params.forward(negative)?);
    Ok((linalg::l2_distance(&ya, &yp) - linalg::l2_distance(&ya, &yn) + margin).max(0.0))
}

/// Triplet loss and its gradient with respect to [`SiameseParams::flat`].
pub fn triplet_loss_and_gradient(
    params: &SiameseParams,
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
) -> Result<(f64, Vec<f64>), RerankError> {
    let mut grad = vec![0.0; params.flat().len()];
    let loss = accumulate_triplet_gradient(params, (anchor, positive, negative), margin, 1.0, &mut grad)?;
    Ok((loss, grad))
}

/// Add `scale * ∂loss/∂θ` into `grad` and return the loss.
pub(crate) fn accumulate_triplet_gradient(
    params: &SiameseParams,
    (anchor, positive, negative): (&[f64], &[f64], &[f64]),
    margin: f64,
    scale: f64,
    grad: &mut [f64],
) -> Result<f64, RerankError> {
    let ta = params.trace(anchor)?;
    let tp = params.trace(positive)?;
    let tn = params.trace(negative)?;
    let d_pos = linalg::l2_distance(&ta.output, &tp.output);
    let d_neg = linalg::l2_distance(&ta.output, &tn.output);
    let loss = d_pos - d_neg + margin;
    if loss <= 0.0 {
        return Ok(0.0);
    }
    // unit direction from the second vector to the first; zero at coincidence
    let unit = |from: &[f64], to: &[f64], dist: f64| -> Vec<f64> {
        if dist == 0.0 {
            vec![0.0; from.len()]
        } else {
            from.iter().zip(to).map(|(a, b)| scale * (a - b) / dist).collect()
        }
    };
    let u_pos = unit(&ta.output, &tp.output, d_pos);
    let u_neg = unit(&ta.output, &tn.output, d_neg);
    let d_anchor: Vec<f64> = u_pos.iter().zip(&u_neg).map(|(p, n)| p - n).collect();
    let d_positive: Vec<f64> = u_pos.iter().map(|p| -p).collect();
    params.backward(anchor, &ta, &d_anchor, grad);
    params.backward(positive, &tp, &d_positive, grad);
    params.backward(negative, &tn, &u_neg, grad);
    Ok(loss)
}

/// Largest `|analytic - central difference| / max(1, |analytic|)` of the
/// triplet loss gradient, over `coords` (all parameters when `None`).
pub fn triplet_grad_check(
    params: &SiameseParams,
    (anchor, positive, negative): (&[f64], &[f64], &[f64]),
    margin: f64,
    step: f64,
    coords: Option<&[usize]>,
) -> Result<f64, RerankError> {
    if !(step > 0.0) {
        return Err(RerankError::InvalidConfig("finite-difference step must be positive"));
    }
    let (_, analytic) = triplet_loss_and_gradient(params, anchor, positive, negative, margin)?;
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..analytic.len()).collect();
            &all
        }
    };
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for &i in coords {
        let orig = probe.flat()[i];
        probe.flat_mut()[i] = orig + step;
        let plus = triplet_loss(&probe, anchor, positive, negative, margin)?;
        probe.flat_mut()[i] = orig - step;
        let minus = triplet_loss(&probe, anchor, positive, negative, margin)?;
        probe.flat_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(1.0));
    }
    Ok(worst)
}

/// Rank candidates by cosine distance between encoded question and entity.
pub fn rank(
    params: &SiameseParams,
    question: &FeatureVector,
    candidates: &[(Candidate, FeatureVector)],
) -> Result<Vec<RankedEntity>, RerankError> {
    rank_with(|x| params.forward(x), question, candidates)
}

/// [`rank`] with an arbitrary encoder in place of the network.
pub fn rank_with<F>(
    encode: F,
    question: &FeatureVector,
    candidates: &[(Candidate, FeatureVector)],
) -> Result<Vec<RankedEntity>, RerankError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, RerankError>,
{
    if candidates.is_empty() {
        return Err(RerankError::EmptyCandidates);
    }
    let q = encode(question.as_slice())?;
    let mut ranked = candidates
        .iter()
        .map(|(c, fv)| {
            Ok(RankedEntity {
                uri: c.uri.clone(),
                matched_label: c.matched_label.clone(),
                etype: c.etype.clone(),
                distance: linalg::cosine_distance(&q, &encode(fv.as_slice())?),
            })
        })
        .collect::<Result<Vec<_>, RerankError>>()?;
    ranked.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.uri.cmp(&b.uri)));
    Ok(ranked)
}
