//! Distilling an LLM teacher's earnings-call topic and sentiment labels into a
//! small trainable classifier, and turning the scored transcripts into
//! quantitative features.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: transcript ingestion, sentence segmentation, seeded sampling.
//! - [`teacher`]: prompt construction, teacher endpoints (HTTP or mock),
//!   response validation and batch labeling with attrition accounting.
//! - [`topics`]: topic statistics, frequency thresholding, k-means reduction
//!   and the expert review sheet.
//! - [`embedding`]: sentence-embedding stores and providers.
//! - [`nn`]: a from-scratch MLP head (batch norm, dropout, Adam, early stopping).
//! - [`distill`]: split plans, random hyperparameter search, F1 evaluation and
//!   the two sentiment training approaches.
//! - [`features`]: topic propensity and per-topic net sentiment per call, and
//!   the company-month panel.
//! - [`analytics`]: sector-neutral returns, Information Coefficients, topic
//!   filters and negativity trends.
//! - [`synthetic`]: deterministic fixture generators used by tests and demos.

pub mod analytics;
pub mod corpus;
pub mod distill;
pub mod embedding;
pub mod features;
pub mod nn;
pub mod rng;
pub mod synthetic;
pub mod teacher;
pub mod topics;
pub mod util;

pub use corpus::{Corpus, Sentence, SentenceSample, Transcript};
pub use teacher::{LabelSource, LabeledSentence, Sentiment};
