//! Turning (question, gold entity, optional negative) examples into
//! feature-vector triplets.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::compose_question;
use super::train::{RerankTrainConfig, Triplet};
use super::{entity_features, RerankError};
use crate::embed::KgEmbeddingSet;
use crate::encoder::TextEncoder;
use crate::index::LabelIndex;
use crate::kg::{EntityRecord, EntityStore};

/// Where negatives come from when an example does not name one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativePolicy {
    /// Other candidates retrieved for the gold entity's label, topped up with
    /// random entities.
    #[default]
    Hard,
    /// Uniformly drawn entities.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub question: String,
    pub positive: String,
    pub negative: Option<String>,
}

pub struct TripletSources<'a> {
    pub store: &'a EntityStore,
    pub index: &'a LabelIndex,
    pub embeddings: Option<&'a KgEmbeddingSet>,
    pub encoder: &'a dyn TextEncoder,
}

const HARD_NEGATIVE_POOL: usize = 10;

pub fn build_triplets(
    examples: &[TrainingExample],
    sources: &TripletSources<'_>,
    cfg: &RerankTrainConfig,
) -> Result<Vec<Triplet>, RerankError> {
    let uris: Vec<&str> = sources.store.iter().map(|r| r.uri.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lookup = |uri: &str| sources.store.get(uri).ok_or_else(|| RerankError::UnknownEntity(uri.into()));
    let mut triplets = Vec::new();
    for ex in examples {
        let positive = lookup(&ex.positive)?;
        let negatives: Vec<&EntityRecord> = match &ex.negative {
            Some(uri) => alloc::vec![lookup(uri)?],
            None => pick_negatives(positive, sources, &uris, cfg, &mut rng)
                .into_iter()
                .map(lookup)
                .collect::<Result<_, _>>()?,
        };
        let mut texts: Vec<&str> = alloc::vec![ex.question.as_str(), positive.label.as_str()];
        texts.extend(negatives.iter().map(|r| r.label.as_str()));
        let embedded = sources.encoder.encode_batch(&texts)?;
        let anchor = compose_question(&embedded[0]);
        let features = |record: &EntityRecord, i: usize| {
            entity_features(&embedded[i], sources.embeddings, &record.uri, &record.label, &ex.question)
        };
        let positive_fv = features(positive, 1)?;
        for (i, neg) in negatives.iter().enumerate() {
            triplets.push(Triplet {
                anchor: anchor.clone(),
                positive: positive_fv.clone(),
                negative: features(neg, i + 2)?,
            });
        }
    }
    Ok(triplets)
}

fn pick_negatives<'s>(
    positive: &EntityRecord,
    sources: &TripletSources<'s>,
    uris: &[&'s str],
    cfg: &RerankTrainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<&'s str> {
    let want = cfg.negatives_per_example;
    let mut picked: Vec<&'s str> = Vec::with_capacity(want);
    if cfg.negatives == NegativePolicy::Hard {
        let pool = HARD_NEGATIVE_POOL.max(want + 1);
        if let Ok(hits) = sources.index.search(&positive.label, Some(&positive.etype), pool) {
            for hit in hits.iter().filter(|h| h.uri != positive.uri).take(want) {
                if let Some(rec) = sources.store.get(&hit.uri) {
                    picked.push(rec.uri.as_str());
                }
            }
        }
    }
    // fall back to random entities
    if uris.len() > 1 {
        while picked.len() < want {
            let uri = uris[rng.random_range(0..uris.len())];
            if uri != positive.uri {
                picked.push(uri);
            }
        }
    }
    picked
}
