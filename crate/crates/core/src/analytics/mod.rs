//! Sector-neutral returns, Information Coefficients, topic filters and
//! negativity trends.

mod filter;
mod ic;
mod returns;
mod review;
mod trend;

use thiserror::Error;

pub use filter::{filter_corpus, FilterSpec, FilterTarget, Intensity, Thresholds, TopicLikelihoods};
pub use ic::{
    cumulative_ic, information_coefficient, mid_ranks, IcMethod, IcOutcome, IcPoint, IcSeries, SkipReason,
};
pub use returns::{
    cap_weighted_sector_returns, read_returns_csv, sector_neutral_return, write_returns_csv, ReturnsRecord,
};
pub use review::{score_review, validate_filter_sample, AreaAccuracy, ReviewRow, ReviewSample};
pub use trend::{negativity_trend, write_trend_csv, Grouping, TrendInput, TrendPoint};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("invalid returns record for {company_id}: {reason}")]
    InvalidReturn { company_id: String, reason: String },
    #[error("no panel month aligns with the returns at horizon {horizon}")]
    NoOverlap { horizon: u32 },
    #[error("unknown feature column {0:?}")]
    UnknownColumn(String),
    #[error("required topic {0:?} is not among the model classes")]
    MissingTopic(String),
    #[error("horizon must be at least one month")]
    BadHorizon,
    #[error("malformed review file: {0}")]
    MalformedReview(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
