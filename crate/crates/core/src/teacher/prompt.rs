//! Prompt templates. The instruction strings are fixed; only the topic list
//! and the numbered sentence block vary.

use serde::{Deserialize, Serialize};

use super::TeacherError;

pub const TOPIC_DISCOVERY_QUESTION: &str = "Can you provide financial topics that would describe the following sentences using a general classification?";

pub const TOPIC_DISCOVERY_FORMAT: &str =
    "Format your answer by separating all the detected topics with semi-colons.";

/// `{topics}` is replaced by the bracketed, semicolon-separated topic list.
pub const CLASSIFICATION_INSTRUCTION: &str = "Considering the following list of topics: {topics}, could you provide a classification on the following sentences topics? Please format your answer in the following way: Topic: Topic identified.";

pub const SENTIMENT_INSTRUCTION: &str = "Please also share your view on the financial statement's sentiment, categorizing it as either Negative, Neutral, or Positive. Structure your response in the format: Sentiment: [Negative/Neutral/Positive].";

const REDUCTION_INSTRUCTION: &str = "Here is a list of candidate topics for labeling earnings call sentences: {topics}. Merge duplicates and drop any topic that carries no information specific to an earnings call, then return the remaining topics.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptKind {
    TopicDiscovery,
    TopicClassification,
    SentimentAugment,
    TopicReduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub body: String,
}

impl PromptTemplate {
    pub fn topic_discovery() -> Self {
        PromptTemplate {
            kind: PromptKind::TopicDiscovery,
            body: format!("{TOPIC_DISCOVERY_QUESTION}\n{TOPIC_DISCOVERY_FORMAT}\n\n{{sentences}}"),
        }
    }

    pub fn topic_classification(with_sentiment: bool) -> Self {
        let body = if with_sentiment {
            format!("{CLASSIFICATION_INSTRUCTION}\n{SENTIMENT_INSTRUCTION}\n\n{{sentences}}")
        } else {
            format!("{CLASSIFICATION_INSTRUCTION}\n\n{{sentences}}")
        };
        PromptTemplate {
            kind: PromptKind::TopicClassification,
            body,
        }
    }

    pub fn sentiment_augment() -> Self {
        PromptTemplate {
            kind: PromptKind::SentimentAugment,
            body: SENTIMENT_INSTRUCTION.to_string(),
        }
    }

    pub fn topic_reduction() -> Self {
        PromptTemplate {
            kind: PromptKind::TopicReduction,
            body: format!("{REDUCTION_INSTRUCTION}\n{TOPIC_DISCOVERY_FORMAT}"),
        }
    }

    /// Substitute `{topics}` and `{sentences}` in a single left-to-right pass,
    /// so placeholder-like text inside the substituted values is left alone.
    pub fn render(
        &self,
        topics: Option<&[String]>,
        sentences: Option<&[String]>,
    ) -> Result<String, TeacherError> {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut rest = self.body.as_str();
        while let Some(start) = rest.find('{') {
            out.push_str(&rest[..start]);
            let tail = &rest[start..];
            if let Some(after) = tail.strip_prefix("{topics}") {
                let topics = topics.ok_or_else(|| {
                    TeacherError::UnresolvedPlaceholder("{topics}".to_string())
                })?;
                out.push_str(&format_topic_list(topics));
                rest = after;
            } else if let Some(after) = tail.strip_prefix("{sentences}") {
                let sentences = sentences.ok_or_else(|| {
                    TeacherError::UnresolvedPlaceholder("{sentences}".to_string())
                })?;
                out.push_str(&number_sentences(sentences));
                rest = after;
            } else {
                out.push('{');
                rest = &tail[1..];
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

pub fn format_topic_list(topics: &[String]) -> String {
    format!("[{}]", topics.join("; "))
}

fn number_sentences(sentences: &[String]) -> String {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Builds prompts for batches of at most `batch_limit` sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptBuilder {
    pub batch_limit: usize,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        PromptBuilder { batch_limit: 20 }
    }
}

impl PromptBuilder {
    fn check_batch(&self, sentences: &[String]) -> Result<(), TeacherError> {
        if sentences.is_empty() {
            return Err(TeacherError::EmptyBatch);
        }
        if sentences.len() > self.batch_limit {
            return Err(TeacherError::BatchTooLarge {
                size: sentences.len(),
                limit: self.batch_limit,
            });
        }
        Ok(())
    }

    pub fn topic_discovery(&self, sentences: &[String]) -> Result<String, TeacherError> {
        self.check_batch(sentences)?;
        PromptTemplate::topic_discovery().render(None, Some(sentences))
    }

    pub fn classification(
        &self,
        topics: &[String],
        sentences: &[String],
        with_sentiment: bool,
    ) -> Result<String, TeacherError> {
        if topics.is_empty() {
            return Err(TeacherError::EmptyTopicList);
        }
        self.check_batch(sentences)?;
        PromptTemplate::topic_classification(with_sentiment).render(Some(topics), Some(sentences))
    }
}

pub fn build_topic_discovery_prompt(sentences: &[String]) -> Result<String, TeacherError> {
    PromptBuilder::default().topic_discovery(sentences)
}

pub fn build_classification_prompt(
    topics: &[String],
    sentences: &[String],
) -> Result<String, TeacherError> {
    PromptBuilder::default().classification(topics, sentences, false)
}

pub fn build_sentiment_augment_prompt() -> String {
    SENTIMENT_INSTRUCTION.to_string()
}

/// Ask the teacher to prune a discovered topic list. The reply is parsed with
/// [`super::parse_topic_list`]; results are not reproducible across teachers.
pub fn build_llm_reduction_prompt(topics: &[String]) -> Result<String, TeacherError> {
    if topics.is_empty() {
        return Err(TeacherError::EmptyTopicList);
    }
    PromptTemplate::topic_reduction().render(Some(topics), None)
}
