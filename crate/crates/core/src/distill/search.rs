use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::final_split_seed;
use super::{evaluate_f1, stratified_split, DistillError, LabeledData, SplitPlan, SplitRole};
use crate::nn::{build_mlp, train, Averaging, MlpConfig, MlpModel, SearchSpace, TrainOptions, TrainReport};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub trials: usize,
    pub seed: u64,
    pub patience: usize,
    pub max_epochs: usize,
    pub averaging: Averaging,
    /// Run trials on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            trials: 50,
            seed: 0,
            patience: 5,
            max_epochs: 100,
            averaging: Averaging::Macro,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub config: MlpConfig,
    pub seed: u64,
    /// Holdout F1, or −1 when the trial failed.
    pub holdout_f1: f64,
    pub epochs_run: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub seed: u64,
    pub averaging: Averaging,
    pub trials: Vec<TrialResult>,
    pub best_index: usize,
    pub best_config: MlpConfig,
}

impl SearchResult {
    /// Index of the highest holdout F1, first index on ties.
    pub fn argmax(trials: &[TrialResult]) -> usize {
        let mut best = 0;
        for (i, t) in trials.iter().enumerate() {
            if t.holdout_f1 > trials[best].holdout_f1 {
                best = i;
            }
        }
        best
    }
}

fn run_trial(
    index: usize,
    config: MlpConfig,
    seed: u64,
    data: &LabeledData,
    plan: &SplitPlan,
    options: &SearchOptions,
) -> TrialResult {
    let part = |role| data.select(&data.rows_of(&plan.ids(role))).data;
    let outcome = (|| -> Result<(f64, usize), DistillError> {
        let train_set = part(SplitRole::ReducedTrain);
        let val_set = part(SplitRole::ReducedVal);
        let holdout = part(SplitRole::SearchHoldout);
        let model = build_mlp(&config, data.data.dim(), data.classes.len(), seed)?;
        let (model, report) = train(
            &model,
            &train_set,
            &val_set,
            &TrainOptions {
                patience: options.patience,
                max_epochs: options.max_epochs,
                seed: derive_seed(seed, 1),
                averaging: options.averaging,
                learning_rate: None,
            },
        )?;
        Ok((evaluate_f1(&model, &holdout, options.averaging)?, report.epochs_run))
    })();
    match outcome {
        Ok((f1, epochs_run)) => TrialResult {
            index,
            config,
            seed,
            holdout_f1: f1,
            epochs_run,
            error: None,
        },
        Err(e) => {
            log::warn!("trial {index} failed: {e}");
            TrialResult {
                index,
                config,
                seed,
                holdout_f1: -1.0,
                epochs_run: 0,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Sample `options.trials` configurations from `space` and score each on the
/// search holdout. Configurations come from one master stream, so they do not
/// depend on trial outcomes or scheduling.
pub fn random_search(
    space: &SearchSpace,
    data: &LabeledData,
    plan: &SplitPlan,
    options: &SearchOptions,
) -> Result<SearchResult, DistillError> {
    if space.is_empty() || options.trials == 0 {
        return Err(DistillError::EmptySearch);
    }
    let mut rng = seeded(options.seed);
    let jobs: Vec<(usize, MlpConfig, u64)> = (0..options.trials)
        .map(|i| (i, space.sample(&mut rng), derive_seed(options.seed, i as u64 + 1)))
        .collect();
    let trials: Vec<TrialResult> = if options.parallel {
        jobs.into_par_iter()
            .map(|(i, c, s)| run_trial(i, c, s, data, plan, options))
            .collect()
    } else {
        jobs.into_iter()
            .map(|(i, c, s)| run_trial(i, c, s, data, plan, options))
            .collect()
    };
    if trials.iter().all(|t| t.error.is_some()) {
        return Err(DistillError::AllTrialsFailed);
    }
    let best_index = SearchResult::argmax(&trials);
    Ok(SearchResult {
        seed: options.seed,
        averaging: options.averaging,
        best_config: trials[best_index].config.clone(),
        best_index,
        trials,
    })
}

/// Retrain `config` on the complete training data with an 80/20 stratified
/// split (the same split as the plan built from `seed`).
pub fn final_retrain(
    config: &MlpConfig,
    data: &LabeledData,
    seed: u64,
    options: &SearchOptions,
) -> Result<(MlpModel, TrainReport), DistillError> {
    let classes = data.classes.len().max(1);
    if data.len() < 10 * classes {
        return Err(DistillError::TooFewSamples {
            needed: 10 * classes,
            classes,
            got: data.len(),
        });
    }
    let (train_ids, val_ids) = stratified_split(&data.items(), 0.8, final_split_seed(seed));
    let train_set = data.select(&data.rows_of(&train_ids)).data;
    let val_set = data.select(&data.rows_of(&val_ids)).data;
    let model = build_mlp(config, data.data.dim(), data.classes.len(), derive_seed(seed, 0xF1))?;
    let (model, report) = train(
        &model,
        &train_set,
        &val_set,
        &TrainOptions {
            patience: options.patience,
            max_epochs: options.max_epochs,
            seed: derive_seed(seed, 0xF2),
            averaging: options.averaging,
            learning_rate: None,
        },
    )?;
    Ok((model, report))
}
