//! Mini-batch gradient descent on the mean triplet loss.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::NegativePolicy;
use super::features::{FeatureVector, FEATURE_DIM};
use super::network::{SiameseParams, DEFAULT_HIDDEN, DEFAULT_OUTPUT};
use super::{accumulate_triplet_gradient, triplet_loss, RerankError};

#[derive(Debug, Clone, PartialEq)]
pub struct RerankTrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
    pub output: usize,
    /// How negatives are drawn when a training example does not name one.
    pub negatives: NegativePolicy,
    pub negatives_per_example: usize,
}

impl Default for RerankTrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            learning_rate: 0.05,
            epochs: 20,
            batch_size: 16,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            output: DEFAULT_OUTPUT,
            negatives: NegativePolicy::Hard,
            negatives_per_example: 1,
        }
    }
}

impl RerankTrainConfig {
    fn validate(&self) -> Result<(), RerankError> {
        if !(self.margin > 0.0) {
            return Err(RerankError::InvalidConfig("margin must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(RerankError::InvalidConfig("learning rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 || self.output == 0 {
            return Err(RerankError::InvalidConfig("epochs, batch size and widths must be positive"));
        }
        Ok(())
    }
}

/// Question, gold entity and a wrong entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub anchor: FeatureVector,
    pub positive: FeatureVector,
    pub negative: FeatureVector,
}

impl Triplet {
    fn slices(&self) -> (&[f64], &[f64], &[f64]) {
        (self.anchor.as_slice(), self.positive.as_slice(), self.negative.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    pub params: SiameseParams,
    /// Mean loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn mean_triplet_loss(params: &SiameseParams, dataset: &[Triplet], margin: f64) -> Result<f64, RerankError> {
    if dataset.is_empty() {
        return Err(RerankError::EmptyDataset);
    }
    let mut total = 0.0;
    for t in dataset {
        let (a, p, n) = t.slices();
        total += triplet_loss(params, a, p, n, margin)?;
    }
    Ok(total / dataset.len() as f64)
}

pub fn train_reranker(dataset: &[Triplet], cfg: &RerankTrainConfig) -> Result<RerankOutcome, RerankError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(RerankError::EmptyDataset);
    }
    let mut params = SiameseParams::init_with_dims(FEATURE_DIM, cfg.hidden, cfg.output, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_7a1e);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grad = vec![0.0; params.flat().len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                total += accumulate_triplet_gradient(&params, dataset[i].slices(), cfg.margin, scale, &mut grad)
                    .map_err(|e| match e {
                        RerankError::NonFiniteOutput => RerankError::DivergedLoss { epoch },
                        other => other,
                    })?;
            }
            if !total.is_finite() {
                return Err(RerankError::DivergedLoss { epoch });
            }
            for (w, g) in params.flat_mut().iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
        if !params.flat().iter().all(|w| w.is_finite()) {
            return Err(RerankError::DivergedLoss { epoch });
        }
        epoch_losses.push(total / dataset.len() as f64);
    }
    Ok(RerankOutcome { params, epoch_losses })
}
