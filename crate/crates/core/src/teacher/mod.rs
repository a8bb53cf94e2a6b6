//! Teacher side of the distillation: prompts, endpoints, response validation
//! and batch labeling.

mod endpoint;
mod label;
mod parse;
mod prompt;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "http")]
pub use endpoint::HttpTeacher;
pub use endpoint::{
    endpoint_from_url, MockConfig, MockTeacher, TeacherEndpoint, TeacherRequest, TransportError,
};
pub use label::{
    discover_topics, label_dataset, read_labels, write_labels, DiscardRecord, DiscoveryRun,
    LabelCursor, LabelRun, RetryPolicy,
};
pub use parse::{
    canonical_topic, classify_line, parse_classification, parse_topic_list, Classification,
    Discard, LineVerdict,
};
pub use prompt::{
    build_classification_prompt, build_llm_reduction_prompt, build_sentiment_augment_prompt,
    build_topic_discovery_prompt, PromptBuilder, PromptKind, PromptTemplate,
    CLASSIFICATION_INSTRUCTION, SENTIMENT_INSTRUCTION, TOPIC_DISCOVERY_FORMAT,
    TOPIC_DISCOVERY_QUESTION,
};

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("batch of {size} sentences exceeds the limit of {limit}")]
    BatchTooLarge { size: usize, limit: usize },
    #[error("empty sentence batch")]
    EmptyBatch,
    #[error("empty topic list")]
    EmptyTopicList,
    #[error("malformed teacher response: {0}")]
    MalformedResponse(String),
    #[error("unresolved placeholder {0} in prompt template")]
    UnresolvedPlaceholder(String),
    #[error("teacher endpoint unreachable after {attempts} attempt(s), resume cursor at batch {cursor}: {message}")]
    EndpointUnreachable {
        cursor: usize,
        attempts: u32,
        message: String,
    },
    #[error("unsupported endpoint {0:?}")]
    UnsupportedEndpoint(String),
    #[error("sentence {0:?} is not in the corpus")]
    UnknownSentence(String),
    #[error("checkpoint does not match this labeling run: {0}")]
    CheckpointMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Three-class sentiment, ordered as the one-hot layout (negative, neutral,
/// positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Sentiment> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "Negative",
            Sentiment::Neutral => "Neutral",
            Sentiment::Positive => "Positive",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = ();

    /// Case-insensitive, tolerating one trailing period.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_suffix('.').unwrap_or(s).trim();
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelSource {
    Teacher,
    PreliminaryTeacher,
    Human,
    Student,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence_id: String,
    pub topic: Option<String>,
    pub sentiment: Option<Sentiment>,
    pub source: LabelSource,
    pub raw_response_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttritionReport {
    pub requested: usize,
    pub well_formed: usize,
    pub discarded_format: usize,
    pub discarded_unknown_topic: usize,
}

impl AttritionReport {
    pub fn is_consistent(&self) -> bool {
        self.requested == self.well_formed + self.discarded_format + self.discarded_unknown_topic
    }

    pub fn record(&mut self, outcome: &Result<Classification, Discard>) {
        self.requested += 1;
        match outcome {
            Ok(_) => self.well_formed += 1,
            Err(Discard::UnknownTopic) => self.discarded_unknown_topic += 1,
            Err(Discard::BadFormat | Discard::BadSentiment) => self.discarded_format += 1,
        }
    }

    pub fn merge(&mut self, other: &AttritionReport) {
        self.requested += other.requested;
        self.well_formed += other.well_formed;
        self.discarded_format += other.discarded_format;
        self.discarded_unknown_topic += other.discarded_unknown_topic;
    }
}

/// A raw teacher reply, kept verbatim for audit whether or not it was used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherResponse {
    pub request_id: String,
    pub raw_text: String,
    pub received_at: DateTime<Utc>,
    pub attempt: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_parsing() {
        assert_eq!("positive.".parse(), Ok(Sentiment::Positive));
        assert_eq!(" NEGATIVE ".parse(), Ok(Sentiment::Negative));
        assert_eq!("Neutral".parse(), Ok(Sentiment::Neutral));
        assert!("Mixed".parse::<Sentiment>().is_err());
        assert!("Positive!!".parse::<Sentiment>().is_err());
    }

    #[test]
    fn attrition_identity() {
        let mut r = AttritionReport::default();
        r.record(&Ok(Classification {
            topic: "A".into(),
            sentiment: None,
        }));
        r.record(&Err(Discard::BadFormat));
        r.record(&Err(Discard::BadSentiment));
        r.record(&Err(Discard::UnknownTopic));
        assert_eq!(r.requested, 4);
        assert_eq!(r.discarded_format, 2);
        assert!(r.is_consistent());
    }
}
