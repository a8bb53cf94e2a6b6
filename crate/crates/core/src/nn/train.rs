use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::model::cross_entropy;
use super::{f1_score, Adam, Averaging, MlpModel, NnError, CLIP_NORM};
use crate::rng::{derive_seed, seeded, shuffle};

/// Feature rows with one class index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>) -> Self {
        assert_eq!(x.nrows(), y.len(), "row and label counts differ");
        Dataset { x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn concat(&self, other: &Dataset) -> Dataset {
        Dataset {
            x: ndarray::concatenate![Axis(0), self.x, other.x],
            y: self.y.iter().chain(&other.y).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub patience: usize,
    pub max_epochs: usize,
    /// Seed of the shuffling and dropout streams.
    pub seed: u64,
    pub averaging: Averaging,
    /// Overrides the config's learning rate (used by fine-tuning).
    pub learning_rate: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            patience: 5,
            max_epochs: 100,
            seed: 0,
            averaging: Averaging::Macro,
            learning_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub stopped_early: bool,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub averaging: Averaging,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_f1: Vec<f64>,
    /// Optimizer steps whose gradient norm exceeded the clip threshold.
    pub clipped_steps: usize,
}

/// Mini-batch boundaries; a trailing batch of one row is folded into the
/// previous batch when batch norm needs at least two rows.
fn batches(n: usize, size: usize, merge_singleton: bool) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n).step_by(size).map(|s| (s, (s + size).min(n))).collect();
    if merge_singleton && out.len() > 1 && out.last().is_some_and(|&(s, e)| e - s == 1) {
        let (_, end) = out.pop().unwrap();
        out.last_mut().unwrap().1 = end;
    }
    out
}

/// Train with early stopping on validation F1 and return the best-epoch
/// model. An epoch counts as an improvement only if F1 strictly increases;
/// training stops after `max(patience, 1)` epochs without one.
pub fn train(
    model: &MlpModel,
    train_set: &Dataset,
    val_set: &Dataset,
    options: &TrainOptions,
) -> Result<(MlpModel, TrainReport), NnError> {
    if train_set.is_empty() {
        return Err(NnError::EmptyDataset("training set"));
    }
    if val_set.is_empty() {
        return Err(NnError::EmptyDataset("validation set"));
    }
    let bn = model.config.with_batch_norm;
    if bn && train_set.len() < 2 {
        return Err(NnError::BatchTooSmall(train_set.len()));
    }
    let lr = options.learning_rate.unwrap_or(model.config.learning_rate);
    let mut model = model.clone();
    let mut adam = Adam::new(&mut model);
    let mut best = model.clone();
    let mut report = TrainReport {
        epochs_run: 0,
        stopped_early: false,
        best_epoch: 0,
        best_val_f1: f64::NEG_INFINITY,
        averaging: options.averaging,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        val_f1: Vec::new(),
        clipped_steps: 0,
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stale = 0;
    let mut last_finite = None;
    let mut step = 0usize;
    for epoch in 1..=options.max_epochs {
        let epoch_seed = derive_seed(options.seed, epoch as u64);
        shuffle(&mut seeded(epoch_seed), &mut order);
        let mut loss_sum = 0.0;
        for (b, (start, end)) in batches(order.len(), model.config.batch_size, bn).into_iter().enumerate() {
            let rows = &order[start..end];
            let x = train_set.x.select(Axis(0), rows);
            let y: Vec<usize> = rows.iter().map(|&i| train_set.y[i]).collect();
            let (loss, mut grads, cache) =
                model.step_gradients(x.view(), &y, derive_seed(epoch_seed, b as u64 + 1))?;
            step += 1;
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss { epoch, step, last_finite });
            }
            last_finite = Some(loss);
            loss_sum += loss * rows.len() as f64;
            let norm = grads.global_norm();
            if !norm.is_finite() {
                return Err(NnError::NonFiniteLoss { epoch, step, last_finite });
            }
            if norm > CLIP_NORM {
                grads.scale(CLIP_NORM / norm);
                report.clipped_steps += 1;
            }
            model.update_running_stats(&cache, rows.len());
            adam.step_model(&mut model, &grads, lr)?;
        }
        let logits = model.forward(val_set.x.view(), super::Mode::Eval)?;
        let val_loss = cross_entropy(&logits, &val_set.y);
        let predicted: Vec<usize> = logits
            .rows()
            .into_iter()
            .map(|r| super::model::argmax(r.as_slice().unwrap()))
            .collect();
        let f1 = f1_score(model.num_classes, &val_set.y, &predicted, options.averaging);
        report.epochs_run = epoch;
        report.train_loss.push(loss_sum / train_set.len() as f64);
        report.val_loss.push(val_loss);
        report.val_f1.push(f1);
        if f1 > report.best_val_f1 {
            report.best_val_f1 = f1;
            report.best_epoch = epoch;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= options.patience.max(1) {
                report.stopped_early = epoch < options.max_epochs;
                break;
            }
        }
    }
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_bounds() {
        assert_eq!(batches(10, 4, false), vec![(0, 4), (4, 8), (8, 10)]);
        assert_eq!(batches(9, 4, true), vec![(0, 4), (4, 9)]);
        assert_eq!(batches(9, 4, false), vec![(0, 4), (4, 8), (8, 9)]);
        assert_eq!(batches(3, 64, true), vec![(0, 3)]);
    }
}
