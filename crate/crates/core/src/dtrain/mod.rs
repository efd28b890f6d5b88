//! Synchronous data-parallel training over simulated workers.
//!
//! Each rank is a thread with its own model replica and optimizer state.
//! Ranks talk only through bounded channels arranged in a ring: gradients
//! are averaged with a ring all-reduce, initial weights come from rank 0,
//! and replica checksums are compared after every step.

mod ring;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nnet::{AdamState, EpochStats, FocalLossParams, Mode, Model, TrainConfig, Window, NUM_CLASSES};
use crate::{Error, Result};

pub use ring::{ring_allreduce, run_group, AllReduceStats, RingMember, WorkerGroup};

/// One rank's model and optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub model: Model,
    pub adam: AdamState,
}

impl Replica {
    pub fn new(model: Model, lr: f64) -> Self {
        let adam = AdamState::new(model.params()).with_lr(lr);
        Replica { model, adam }
    }
}

fn flat_params(m: &Model) -> Vec<f64> {
    m.params().iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn assign_params(m: &mut Model, flat: &[f64]) {
    let mut off = 0;
    for t in m.params_mut() {
        let n = t.len();
        t.data_mut().copy_from_slice(&flat[off..off + n]);
        off += n;
    }
}

/// Copy rank 0's weights into this rank's replica.
pub fn broadcast_model(member: &RingMember, model: &mut Model) -> Result<()> {
    let mut flat = flat_params(model);
    member.broadcast_root(&mut flat)?;
    assign_params(model, &flat);
    Ok(())
}

/// Outcome of one synchronized step on one rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    /// Mean loss on this rank's batch.
    pub loss: f64,
    pub correct: usize,
    pub comm: AllReduceStats,
}

/// Gradients on the local batch, all-reduce mean, identical Adam update,
/// then a checksum comparison across the ring.
pub fn data_parallel_step(
    member: &RingMember,
    replica: &mut Replica,
    batch: &[Window],
    labels: &[usize],
    loss: &FocalLossParams,
    mode: Mode<'_>,
) -> Result<StepResult> {
    let mut out = replica.model.gradients(batch, labels, loss, mode)?;
    let mut flat = out.grads.flatten();
    let comm = member.allreduce_mean(&mut flat)?;
    out.grads.assign_flat(&flat)?;
    replica.adam.step(replica.model.params_mut(), &out.grads)?;
    member.check_consistency(replica.model.checksum())?;
    Ok(StepResult {
        loss: out.loss,
        correct: out.correct,
        comm,
    })
}

/// Settings for [`train_distributed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistConfig {
    pub workers: usize,
    /// Samples per rank per step. `None` splits the configured batch size
    /// across ranks, keeping the global batch fixed.
    pub per_worker_batch: Option<usize>,
    pub train: TrainConfig,
}

impl DistConfig {
    pub fn new(workers: usize, train: TrainConfig) -> Self {
        DistConfig {
            workers,
            per_worker_batch: None,
            train,
        }
    }

    pub fn local_batch(&self) -> usize {
        self.per_worker_batch
            .unwrap_or_else(|| (self.train.batch_size as f64 / self.workers as f64).round() as usize)
            .max(1)
    }
}

/// Result of a distributed run.
#[derive(Debug, Clone)]
pub struct DistOutcome {
    pub model: Model,
    pub history: Vec<EpochStats>,
    pub elapsed_s: f64,
    pub samples_processed: usize,
    pub comm: AllReduceStats,
}

/// Train with `config.workers` synchronized replicas.
///
/// Every epoch all ranks derive the same shuffle from the seed; each global
/// batch of `K·b` samples is split into contiguous per-rank slices. A tail
/// shorter than `K` samples is skipped so that per-rank batches stay equal.
pub fn train_distributed(
    initial: &Model,
    data: &[Window],
    labels: &[usize],
    config: &DistConfig,
    loss: &FocalLossParams,
) -> Result<DistOutcome> {
    let k = config.workers;
    if k == 0 {
        return Err(Error::invalid("at least one worker is required"));
    }
    config.train.validate()?;
    loss.validate()?;
    if data.is_empty() || data.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} samples with {} labels",
            data.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l >= NUM_CLASSES) {
        return Err(Error::invalid("class index out of range"));
    }
    let b = config.local_batch();
    let cfg = config.train;
    let start = Instant::now();
    let results = run_group(k, |member| {
        let rank = member.rank();
        // non-root ranks start from different weights; broadcast fixes that
        let mut model = if rank == 0 {
            initial.clone()
        } else {
            Model::new(initial.architecture(), cfg.seed.wrapping_add(rank as u64))
        };
        broadcast_model(&member, &mut model)?;
        let mut replica = Replica::new(model, cfg.learning_rate);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(rank as u64 + 1)));
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut history = Vec::new();
        let mut processed = 0usize;
        let mut comm = AllReduceStats::default();
        let mut batch = Vec::with_capacity(b);
        let mut batch_labels = Vec::with_capacity(b);
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut loss_sum = 0.0;
            let mut correct = 0.0;
            let mut seen = 0usize;
            for global in order.chunks(b * k) {
                let local = global.len() / k;
                if local == 0 {
                    continue;
                }
                let mine = &global[rank * local..(rank + 1) * local];
                batch.clear();
                batch_labels.clear();
                batch.extend(mine.iter().map(|&i| data[i]));
                batch_labels.extend(mine.iter().map(|&i| labels[i]));
                let mode = Mode::Training {
                    dropout: cfg.dropout,
                    rng: &mut dropout_rng,
                };
                let step = data_parallel_step(&member, &mut replica, &batch, &batch_labels, loss, mode)?;
                loss_sum += step.loss * local as f64;
                correct += step.correct as f64;
                seen += local;
                comm.elements_sent += step.comm.elements_sent;
                comm.steps += step.comm.steps;
                comm.padded_len = step.comm.padded_len;
            }
            let mut totals = [loss_sum, correct, seen as f64];
            member.allreduce_mean(&mut totals)?;
            let global_seen = totals[2] * k as f64;
            processed += global_seen as usize;
            if global_seen > 0.0 {
                history.push(EpochStats {
                    epoch,
                    loss: totals[0] / totals[2],
                    accuracy: totals[1] / totals[2],
                });
            }
        }
        replica.model.check_finite()?;
        Ok((replica.model, history, processed, comm))
    })?;
    let elapsed_s = start.elapsed().as_secs_f64();
    let (model, history, processed, comm) = results.into_iter().next().unwrap();
    Ok(DistOutcome {
        model,
        history,
        elapsed_s,
        samples_processed: processed,
        comm,
    })
}

/// One row of a throughput scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub workers: usize,
    pub time_s: f64,
    pub time_per_epoch_s: f64,
    pub samples_per_s: f64,
    pub speedup: f64,
}

pub const SCALING_HEADER: &str = "workers,time_s,time_per_epoch_s,samples_per_s,speedup";

/// Time the same training job for each worker count. Speedup is throughput
/// relative to the first row.
pub fn scaling_report(
    initial: &Model,
    data: &[Window],
    labels: &[usize],
    workers: &[usize],
    base: &DistConfig,
    loss: &FocalLossParams,
) -> Result<Vec<ScalingRow>> {
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(workers.len());
    for &k in workers {
        let cfg = DistConfig { workers: k, ..*base };
        let out = train_distributed(initial, data, labels, &cfg, loss)?;
        let epochs = cfg.train.epochs.max(1) as f64;
        let rate = out.samples_processed as f64 / out.elapsed_s.max(1e-9);
        let speedup = rows.first().map_or(1.0, |r| rate / r.samples_per_s);
        rows.push(ScalingRow {
            workers: k,
            time_s: out.elapsed_s,
            time_per_epoch_s: out.elapsed_s / epochs,
            samples_per_s: rate,
            speedup,
        });
    }
    for w in rows.windows(2) {
        if w[1].samples_per_s < w[0].samples_per_s {
            log::warn!(
                "throughput dropped from {:.1} to {:.1} samples/s going from {} to {} workers",
                w[0].samples_per_s,
                w[1].samples_per_s,
                w[0].workers,
                w[1].workers
            );
        }
    }
    Ok(rows)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut s = format!("{SCALING_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.3},{:.4}\n",
            r.workers, r.time_s, r.time_per_epoch_s, r.samples_per_s, r.speedup
        ));
    }
    s
}
