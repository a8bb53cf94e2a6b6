use serde::{Deserialize, Serialize};

use super::{stratified_split, DistillError};
use crate::nn::{build_mlp, train, Dataset, MlpConfig, MlpModel, TrainOptions, TrainReport};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SentimentApproach {
    /// Train on the primary teacher's labels only.
    Direct,
    /// Train on a preliminary teacher's labels, then continue on the primary
    /// teacher's labels at a tenth of the learning rate.
    #[default]
    Transfer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentTrainPlan {
    pub approach: SentimentApproach,
    pub pretrain: Option<Dataset>,
    pub finetune: Dataset,
}

pub const FINETUNE_LR_FACTOR: f64 = 0.1;

fn split_80_20(data: &Dataset, seed: u64) -> (Dataset, Dataset) {
    let items: Vec<(String, usize)> = data.y.iter().enumerate().map(|(i, &c)| (format!("{i:09}"), c)).collect();
    let (a, b) = stratified_split(&items, 0.8, seed);
    let rows = |ids: Vec<String>| -> Vec<usize> { ids.iter().map(|s| s.parse().unwrap()).collect() };
    (data.select(&rows(a)), data.select(&rows(b)))
}

/// Three-class sentiment model. Every phase uses a stratified 80/20 split
/// with early stopping on the 20%.
pub fn train_sentiment(
    plan: &SentimentTrainPlan,
    config: &MlpConfig,
    seed: u64,
    options: &TrainOptions,
) -> Result<(MlpModel, Vec<TrainReport>), DistillError> {
    if plan.finetune.is_empty() {
        return Err(DistillError::MissingData("no sentiment labels".into()));
    }
    let dim = plan.finetune.dim();
    let model = build_mlp(config, dim, 3, derive_seed(seed, 0x5E))?;
    let phase = |data: &Dataset, model: &MlpModel, k: u64, lr: Option<f64>| {
        let (tr, va) = split_80_20(data, derive_seed(seed, k));
        if tr.is_empty() || va.is_empty() {
            return Err(DistillError::MissingData("too few sentiment labels for an 80/20 split".into()));
        }
        let opts = TrainOptions {
            seed: derive_seed(options.seed, k),
            learning_rate: lr,
            ..options.clone()
        };
        Ok(train(model, &tr, &va, &opts)?)
    };
    match plan.approach {
        SentimentApproach::Direct => {
            let (model, report) = phase(&plan.finetune, &model, 1, None)?;
            Ok((model, vec![report]))
        }
        SentimentApproach::Transfer => {
            let pretrain = plan.pretrain.as_ref().ok_or(DistillError::MissingPretrainLabels)?;
            if pretrain.is_empty() {
                return Err(DistillError::MissingPretrainLabels);
            }
            let (pre, r1) = phase(pretrain, &model, 2, None)?;
            let (fine, r2) = phase(&plan.finetune, &pre, 3, Some(config.learning_rate * FINETUNE_LR_FACTOR))?;
            Ok((fine, vec![r1, r2]))
        }
    }
}
