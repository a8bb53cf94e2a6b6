//! Sentence and topic-name embeddings: file-backed stores, providers and a
//! cache-first lookup.

mod provider;
mod store;

use thiserror::Error;

#[cfg(feature = "http")]
pub use provider::HttpEmbedder;
pub use provider::{EmbeddingCache, EmbeddingProvider, MockEmbedder, MockMode};
pub use store::{load_embeddings, EmbeddingStore, EmbeddingVector};

pub const DEFAULT_DIM: usize = 768;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch for key {0:?}")]
    DimensionMismatch(String),
    #[error("corrupt entry for key {0:?}")]
    CorruptEntry(String),
    #[error("bad embedding file header: {0}")]
    BadHeader(String),
    #[error("no embedding for {0:?}")]
    MissingEmbedding(String),
    #[error("empty key")]
    EmptyKey,
    #[error("embedding endpoint failed: {0}")]
    Remote(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
