//! Reducing an over-complete discovered topic list to the final label set.

mod kmeans;
mod reduce;
mod review;

use thiserror::Error;

pub use kmeans::{elbow_curve, kmeans, KMeansOptions, TopicClusters};
pub use reduce::{
    reduce_by_clustering, reduce_by_coverage, reduce_by_threshold, topic_stats, ClusterReport,
    TopicStats,
};
pub use review::export_review_sheet;

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("no topic statistics supplied")]
    EmptyStats,
    #[error("no topic survives the threshold")]
    EmptyReduction,
    #[error("vectors have inconsistent dimensions (index {0})")]
    DimensionMismatch(usize),
    #[error("k = {k} exceeds the number of vectors ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("no embedding for topic {0:?}")]
    MissingEmbedding(String),
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
}
