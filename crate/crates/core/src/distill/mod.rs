//! Training protocols on top of [`crate::nn`]: stratified split plans, the
//! random hyperparameter search, final retraining, F1 evaluation and the two
//! sentiment training approaches.

mod data;
mod search;
mod sentiment;
mod split;

use thiserror::Error;

pub use data::{embedding_matrix, topic_dataset, sentiment_dataset, LabeledData};
pub use search::{final_retrain, random_search, SearchOptions, SearchResult, TrialResult};
pub use sentiment::{train_sentiment, SentimentApproach, SentimentTrainPlan};
pub use split::{make_split_plan, stratified_split, SplitPlan, SplitRole};

use crate::nn::{Averaging, Dataset, MlpModel, NnError};

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("need at least {needed} samples for {classes} classes, got {got}")]
    TooFewSamples { needed: usize, classes: usize, got: usize },
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("transfer training requires pretraining labels")]
    MissingPretrainLabels,
    #[error("no labeled data: {0}")]
    MissingData(String),
    #[error("search space has an empty field or zero trials")]
    EmptySearch,
    #[error("every search trial failed")]
    AllTrialsFailed,
    #[error("embedding error: {0}")]
    Embedding(#[from] crate::embedding::EmbeddingError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// F1 of `model`'s Eval-mode predictions against the gold labels.
pub fn evaluate_f1(model: &MlpModel, data: &Dataset, averaging: Averaging) -> Result<f64, DistillError> {
    if data.is_empty() {
        return Err(DistillError::EmptyEvalSet);
    }
    if let Some(&label) = data.y.iter().find(|&&l| l >= model.num_classes) {
        return Err(NnError::BadLabel {
            label,
            classes: model.num_classes,
        }
        .into());
    }
    let predicted = model.predict(data.x.view())?;
    Ok(crate::nn::f1_score(model.num_classes, &data.y, &predicted, averaging))
}
