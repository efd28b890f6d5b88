use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

use super::{AdamState, FocalLossParams, Mode, Model, Window, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 20,
            dropout: 0.2,
            learning_rate: AdamState::DEFAULT_LR,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Mean training loss and accuracy seen during one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Minibatch training with per-epoch shuffling. Deterministic for a given
/// seed.
pub fn train(
    model: &mut Model,
    data: &[Window],
    labels: &[usize],
    config: &TrainConfig,
    loss: &FocalLossParams,
) -> Result<Vec<EpochStats>> {
    config.validate()?;
    loss.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    if data.len() != labels.len() {
        return Err(Error::invalid(format!("{} samples but {} labels", data.len(), labels.len())));
    }
    let mut seen = [false; NUM_CLASSES];
    for &l in labels {
        if l >= NUM_CLASSES {
            return Err(Error::invalid(format!("class index {l} out of range")));
        }
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() == 1 {
        log::warn!("training set contains a single class");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(model.params()).with_lr(config.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch: Vec<Window> = Vec::with_capacity(config.batch_size);
    let mut batch_labels = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for idx in order.chunks(config.batch_size) {
            batch.clear();
            batch_labels.clear();
            batch.extend(idx.iter().map(|&i| data[i]));
            batch_labels.extend(idx.iter().map(|&i| labels[i]));
            let mode = Mode::Training {
                dropout: config.dropout,
                rng: &mut rng,
            };
            let out = model.gradients(&batch, &batch_labels, loss, mode)?;
            loss_sum += out.loss * idx.len() as f64;
            correct += out.correct;
            adam.step(model.params_mut(), &out.grads)?;
        }
        model.check_finite()?;
        let stats = EpochStats {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        };
        log::info!("epoch {epoch}: loss {:.5} accuracy {:.4}", stats.loss, stats.accuracy);
        history.push(stats);
    }
    Ok(history)
}

/// History as CSV with header `epoch,loss,accuracy`.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut s = String::from("epoch,loss,accuracy\n");
    for h in history {
        s.push_str(&format!("{},{},{}\n", h.epoch, h.loss, h.accuracy));
    }
    s
}
