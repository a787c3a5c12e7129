//! Per-cloud training loop.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Model;
use crate::data::LabeledCloud;
use crate::numeric::{argmax, softmax_cross_entropy, OptimizerState, ParameterCount};
use crate::rng::{stream, Rng, STREAM_SHUFFLE, STREAM_STRIDE};
use crate::{Error, Real, Result};

/// Everything besides the weights that a resumed run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState<T> {
    pub optimizer: OptimizerState<T>,
    /// Completed epochs.
    pub epoch: usize,
    pub shuffle_rng: Rng,
    pub stride_rng: Rng,
}

impl<T: Real> TrainingState<T> {
    pub fn new(model: &Model<T>) -> Self {
        let cfg = model.config();
        TrainingState {
            optimizer: OptimizerState::new(cfg.optimizer, model.parameter_count()),
            epoch: 0,
            shuffle_rng: stream(cfg.seed, STREAM_SHUFFLE),
            stride_rng: stream(cfg.seed, STREAM_STRIDE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_acc: f64,
    pub wall_seconds: f64,
}

/// Trains until `state.epoch` reaches the configured epoch count.
///
/// Each epoch visits the clouds in a freshly shuffled order; every cloud
/// gets a forward pass, cross-entropy loss and backward pass, and the
/// optimizer steps after every `accumulate` clouds with the mean gradient.
pub fn train<T: Real>(
    model: &mut Model<T>,
    state: &mut TrainingState<T>,
    data: &[LabeledCloud<T>],
    mut progress: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    let classes = model.num_classes();
    if let Some(bad) = data.iter().find(|c| c.label >= classes) {
        return Err(Error::Data(format!("label {} outside the model's {classes} classes", bad.label)));
    }
    let accumulate = model.config().accumulate;
    let epochs = model.config().epochs;
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad_sum = vec![T::zero(); model.parameter_count()];
    while state.epoch < epochs {
        let started = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut state.shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut pending = 0usize;
        for &i in &order {
            let item = &data[i];
            let logits = model.forward(&item.cloud, &mut state.stride_rng)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, item.label)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch: state.epoch, cloud: i, loss });
            }
            loss_sum += loss;
            if argmax(&logits) == Some(item.label) {
                correct += 1;
            }
            let grads = model.backward(&dlogits)?;
            for (s, g) in grad_sum.iter_mut().zip(&grads) {
                *s += *g;
            }
            pending += 1;
            if pending == accumulate {
                apply(model, state, &mut grad_sum, pending)?;
                pending = 0;
            }
        }
        if pending > 0 {
            apply(model, state, &mut grad_sum, pending)?;
        }
        state.epoch += 1;
        let record = EpochRecord {
            epoch: state.epoch,
            mean_loss: loss_sum / data.len() as f64,
            train_acc: correct as f64 / data.len() as f64,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        progress(&record);
        log.push(record);
    }
    Ok(log)
}

fn apply<T: Real>(model: &mut Model<T>, state: &mut TrainingState<T>, grad_sum: &mut [T], count: usize) -> Result<()> {
    if count > 1 {
        let scale = T::of(1.0 / count as f64);
        grad_sum.iter_mut().for_each(|g| *g *= scale);
    }
    state.optimizer.step(model.param_slices_mut(), grad_sum)?;
    grad_sum.iter_mut().for_each(|g| *g = T::zero());
    Ok(())
}

/// CSV with columns `epoch,mean_loss,train_acc,wall_seconds`.
pub fn write_epoch_log(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::Data(e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(["epoch", "mean_loss", "train_acc", "wall_seconds"]).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
