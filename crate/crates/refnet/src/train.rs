use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RefnetError, Result};
use crate::mnist::MnistSplit;
use crate::net::{forward, loss_and_gradients, Gradients, RefNetParams, CLASSES};

/// How the single training epoch is degraded.
///
/// The training subset is drawn by a seeded permutation of the train images
/// whose label is in `class_subset`; the first `round(fraction · n)` of that
/// permutation are kept. With `shuffle = false` the kept samples are then
/// stably grouped by class, `first_class` first and the remaining classes in
/// ascending order, so each class block keeps its seeded internal order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRegime {
    pub fraction: f64,
    pub class_subset: Vec<u8>,
    pub shuffle: bool,
    pub first_class: u8,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainRegime {
    fn default() -> Self {
        Self {
            fraction: 1.0,
            class_subset: (0..CLASSES as u8).collect(),
            shuffle: true,
            first_class: 9,
            seed: 0,
            learning_rate: 0.01,
            batch_size: 32,
        }
    }
}

impl TrainRegime {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RefnetError::InvalidRegime(m));
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return bad(format!("fraction must lie in (0, 1], got {}", self.fraction));
        }
        if self.class_subset.is_empty() {
            return bad("class_subset is empty".into());
        }
        if let Some(c) = self.class_subset.iter().find(|&&c| c as usize >= CLASSES) {
            return bad(format!("class {c} is not a digit"));
        }
        if self.first_class as usize >= CLASSES {
            return bad(format!("first_class {} is not a digit", self.first_class));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }

    /// Indices into `labels` in the order they are fed to SGD.
    pub fn training_order(&self, labels: &[u8]) -> Result<Vec<usize>> {
        self.validate()?;
        let mut pool: Vec<usize> = (0..labels.len())
            .filter(|&i| self.class_subset.contains(&labels[i]))
            .collect();
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let keep = (self.fraction * pool.len() as f64).round() as usize;
        if keep < self.batch_size {
            return Err(RefnetError::EmptyTrainingSet {
                available: keep,
                batch_size: self.batch_size,
            });
        }
        pool.truncate(keep);
        if !self.shuffle {
            let first = self.first_class;
            pool.sort_by_key(|&i| (labels[i] != first, labels[i]));
        }
        Ok(pool)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Fraction of each digit's test images classified correctly.
    pub per_class_recall: Vec<f64>,
    /// How often each digit was predicted.
    pub predictions: Vec<usize>,
    pub images: usize,
}

/// Classifies every image of `split` (arg-max of the logits, lowest class
/// on ties).
pub fn evaluate(params: &RefNetParams, split: &MnistSplit) -> Result<Evaluation> {
    let mut correct = [0usize; CLASSES];
    let mut seen = [0usize; CLASSES];
    let mut predictions = vec![0usize; CLASSES];
    for i in 0..split.len() {
        let logits = forward(params, split.image(i))?.logits;
        let mut best = 0;
        for (c, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = c;
            }
        }
        let label = split.labels[i] as usize;
        seen[label] += 1;
        predictions[best] += 1;
        if best == label {
            correct[label] += 1;
        }
    }
    let total: usize = correct.iter().sum();
    Ok(Evaluation {
        accuracy: total as f64 / split.len().max(1) as f64,
        per_class_recall: (0..CLASSES)
            .map(|c| correct[c] as f64 / seen[c].max(1) as f64)
            .collect(),
        predictions,
        images: split.len(),
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: RefNetParams,
    pub regime: TrainRegime,
    pub train_samples: usize,
    /// Mean cross-entropy of each mini-batch, before its update.
    pub batch_losses: Vec<f64>,
    pub test: Evaluation,
}

impl TrainOutcome {
    pub fn test_accuracy(&self) -> f64 {
        self.test.accuracy
    }
}

/// One epoch of mini-batch SGD on softmax cross-entropy, then evaluation on
/// `test`. The final batch may be short. Parameters are initialized from
/// `regime.seed`.
pub fn train_one_epoch(regime: &TrainRegime, train: &MnistSplit, test: &MnistSplit) -> Result<TrainOutcome> {
    let order = regime.training_order(&train.labels)?;
    let mut params = RefNetParams::init(regime.seed);
    let mut grads = Gradients::zeros();
    let mut batch_losses = Vec::with_capacity(order.len().div_ceil(regime.batch_size));
    for batch in order.chunks(regime.batch_size) {
        let images: Vec<&[f64]> = batch.iter().map(|&i| train.image(i)).collect();
        let labels: Vec<u8> = batch.iter().map(|&i| train.labels[i]).collect();
        batch_losses.push(loss_and_gradients(&params, &images, &labels, &mut grads)?);
        params.axpy(-regime.learning_rate, &grads);
    }
    let test = evaluate(&params, test)?;
    Ok(TrainOutcome {
        params,
        regime: regime.clone(),
        train_samples: order.len(),
        batch_losses,
        test,
    })
}
