//! A small feed-forward classifier head trained from scratch: linear layers
//! with optional batch normalization, ReLU and inverted dropout, a softmax
//! cross-entropy loss and Adam.

mod checkpoint;
mod config;
mod gradcheck;
pub mod metrics;
mod model;
mod optim;
mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{MlpConfig, SearchSpace};
pub use gradcheck::{gradient_check, TensorCheck};
pub use metrics::{f1_score, Averaging, ConfusionMatrix};
pub use model::{build_mlp, softmax_rows, BatchNorm, Gradients, Layer, MlpModel, Mode};
pub use optim::Adam;
pub use train::{train, Dataset, TrainOptions, TrainReport};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
pub const CLIP_NORM: f64 = 5.0;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("hidden layer {layer} would have width {width} (< 2)")]
    DegenerateLayer { layer: usize, width: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("batch of size {0} cannot be batch-normalized in training mode")]
    BatchTooSmall(usize),
    #[error("input has {got} columns, model expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("non-finite loss at epoch {epoch}, step {step} (last finite loss {last_finite:?})")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        last_finite: Option<f64>,
    },
    #[error("optimizer state does not match model parameters")]
    ShapeMismatch,
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
