//! Teacher endpoints: a live HTTP client and a deterministic in-process mock.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::{CLASSIFICATION_INSTRUCTION, SENTIMENT_INSTRUCTION, TOPIC_DISCOVERY_QUESTION};
use super::{canonical_topic, Sentiment, TeacherError};
use crate::rng::{mix64, stable_hash, unit_interval};
use crate::synthetic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeacherRequest {
    pub request_id: String,
    pub prompt: String,
    /// Position of the batch's first sentence in the labeling order.
    pub first_ordinal: u64,
    pub attempt: u32,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("undecodable reply: {0}")]
    Decode(String),
}

pub trait TeacherEndpoint: Send + Sync {
    fn complete(&self, request: &TeacherRequest) -> Result<String, TransportError>;

    /// Whether identical requests always get identical replies.
    fn is_deterministic(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

#[cfg(feature = "http")]
pub use http::HttpTeacher;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};

    use super::{TeacherEndpoint, TeacherRequest, TransportError};

    /// POSTs `{model, prompt}` and expects `{text}` back. The bearer token is
    /// read from the named environment variable at request time.
    pub struct HttpTeacher {
        url: String,
        model: String,
        token_env: String,
        agent: ureq::Agent,
    }

    #[derive(Serialize)]
    struct Body<'a> {
        model: &'a str,
        prompt: &'a str,
    }

    #[derive(Deserialize)]
    struct Reply {
        text: String,
    }

    impl HttpTeacher {
        pub fn new(url: &str, model: &str, token_env: &str, timeout: Duration) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .http_status_as_error(false)
                .build()
                .into();
            HttpTeacher {
                url: url.to_string(),
                model: model.to_string(),
                token_env: token_env.to_string(),
                agent,
            }
        }
    }

    impl TeacherEndpoint for HttpTeacher {
        fn complete(&self, request: &TeacherRequest) -> Result<String, TransportError> {
            let mut call = self.agent.post(&self.url);
            if let Ok(token) = std::env::var(&self.token_env) {
                call = call.header("Authorization", &format!("Bearer {token}"));
            }
            let mut response = call
                .send_json(Body {
                    model: &self.model,
                    prompt: &request.prompt,
                })
                .map_err(|e| TransportError::Unreachable(e.to_string()))?;
            let status = response.status().as_u16();
            if !(200..300).contains(&status) {
                return Err(TransportError::Status(status));
            }
            let reply: Reply = response
                .body_mut()
                .read_json()
                .map_err(|e| TransportError::Decode(e.to_string()))?;
            Ok(reply.text)
        }

        fn describe(&self) -> String {
            format!("http teacher {} (model {})", self.url, self.model)
        }
    }
}

/// Behaviour of [`MockTeacher`]. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub seed: u64,
    pub bad_format_rate: f64,
    pub unknown_topic_rate: f64,
    pub bad_sentiment_rate: f64,
    /// Chance that a single attempt fails in transport (retries may succeed).
    pub transport_failure_rate: f64,
    /// Every request whose first ordinal is at or past this value fails.
    pub fail_from_ordinal: Option<u64>,
    /// Every request fails.
    pub unreachable: bool,
    /// Keyword (lower case) to topic rules, applied in order.
    pub topic_rules: Vec<(String, String)>,
    /// Exact sentence text to (topic, sentiment) answers, checked first.
    pub fixture_labels: BTreeMap<String, (String, Sentiment)>,
    /// Name variants appended to discovered topics to emulate a noisy,
    /// over-complete discovery pass.
    pub discovery_variants: Vec<String>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            seed: 0,
            bad_format_rate: 0.0,
            unknown_topic_rate: 0.0,
            bad_sentiment_rate: 0.0,
            transport_failure_rate: 0.0,
            fail_from_ordinal: None,
            unreachable: false,
            topic_rules: synthetic::default_topic_rules(),
            fixture_labels: BTreeMap::new(),
            discovery_variants: synthetic::DISCOVERY_VARIANTS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl MockConfig {
    pub fn noise_rate(&self) -> f64 {
        self.bad_format_rate + self.unknown_topic_rate + self.bad_sentiment_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Noise {
    BadFormat,
    UnknownTopic,
    BadSentiment,
}

/// Deterministic stand-in for the teacher LLM.
///
/// Noise is placed by a low-discrepancy rule over the global sentence
/// ordinal: sentence `o` is corrupted iff `floor((o+1)r + φ) > floor(o r + φ)`
/// with `r` the total noise rate and `φ` a seed-derived phase. Over any `n`
/// consecutive ordinals exactly `floor(n r + φ) - floor(φ)` sentences are
/// corrupted, which makes attrition exact rather than binomial.
#[derive(Debug, Clone)]
pub struct MockTeacher {
    config: MockConfig,
}

static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)\. (.*)$").unwrap());

impl MockTeacher {
    pub fn new(config: MockConfig) -> Self {
        MockTeacher { config }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    fn phase(&self) -> f64 {
        unit_interval(mix64(self.config.seed ^ 0xA5A5_A5A5))
    }

    fn noise_at(&self, ordinal: u64) -> Option<Noise> {
        let rate = self.config.noise_rate();
        if rate <= 0.0 {
            return None;
        }
        let phase = self.phase();
        let o = ordinal as f64;
        let hit = ((o + 1.0) * rate + phase).floor() > (o * rate + phase).floor();
        if !hit {
            return None;
        }
        let u = unit_interval(mix64(self.config.seed.wrapping_add(ordinal))) * rate;
        Some(if u < self.config.bad_format_rate {
            Noise::BadFormat
        } else if u < self.config.bad_format_rate + self.config.unknown_topic_rate {
            Noise::UnknownTopic
        } else {
            Noise::BadSentiment
        })
    }

    /// The mock's answer for one sentence among `allowed` topics.
    pub fn answer(&self, text: &str, allowed: &[String]) -> (String, Sentiment) {
        if let Some((topic, sentiment)) = self.config.fixture_labels.get(text) {
            if let Some(t) = canonical_topic(topic, allowed) {
                return (t.to_string(), *sentiment);
            }
        }
        let sentiment = synthetic::lexicon_sentiment(text);
        let lower = text.to_lowercase();
        for (keyword, topic) in &self.config.topic_rules {
            if lower.contains(keyword.as_str()) {
                if let Some(t) = canonical_topic(topic, allowed) {
                    return (t.to_string(), sentiment);
                }
            }
        }
        let pick = stable_hash(self.config.seed, text) as usize % allowed.len().max(1);
        let topic = allowed.get(pick).cloned().unwrap_or_default();
        (topic, sentiment)
    }

    fn discovery_reply(&self, sentences: &[String]) -> String {
        let mut topics = Vec::new();
        let mut seen = BTreeSet::new();
        for s in sentences {
            let lower = s.to_lowercase();
            let base = self
                .config
                .topic_rules
                .iter()
                .find(|(k, _)| lower.contains(k.as_str()))
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| "Others".to_string());
            let mut found = vec![base.clone()];
            if !self.config.discovery_variants.is_empty() {
                let h = stable_hash(self.config.seed, s) as usize;
                let variant = &self.config.discovery_variants[h % self.config.discovery_variants.len()];
                found.push(format!("{base} {variant}"));
            }
            for t in found {
                if seen.insert(t.to_lowercase()) {
                    topics.push(t);
                }
            }
        }
        topics.join("; ")
    }

    fn classification_reply(
        &self,
        topics: &[String],
        sentences: &[String],
        with_sentiment: bool,
        first_ordinal: u64,
    ) -> String {
        let mut lines = Vec::with_capacity(sentences.len() * 2);
        for (k, text) in sentences.iter().enumerate() {
            let n = k + 1;
            let (topic, sentiment) = self.answer(text, topics);
            let noise = self.noise_at(first_ordinal + k as u64);
            match noise {
                Some(Noise::BadFormat) => lines.push(format!("{n}. {topic}")),
                Some(Noise::UnknownTopic) => {
                    let h = stable_hash(self.config.seed, text) % 1000;
                    lines.push(format!("{n}. Topic: Unlisted Theme {h}"));
                }
                _ => lines.push(format!("{n}. Topic: {topic}")),
            }
            if with_sentiment {
                if noise == Some(Noise::BadSentiment) {
                    lines.push("Sentiment: Mixed".to_string());
                } else {
                    lines.push(format!("Sentiment: {sentiment}"));
                }
            }
        }
        lines.join("\n")
    }

    fn reduction_reply(&self, topics: &[String]) -> String {
        let keep: BTreeSet<String> = self
            .config
            .topic_rules
            .iter()
            .map(|(_, t)| t.to_lowercase())
            .collect();
        let kept: Vec<&str> = topics
            .iter()
            .filter(|t| keep.contains(&t.to_lowercase()))
            .map(String::as_str)
            .collect();
        kept.join("; ")
    }
}

fn numbered_sentences(prompt: &str) -> Vec<String> {
    let body = prompt.split_once("\n\n").map_or("", |(_, b)| b);
    body.lines()
        .filter_map(|l| NUMBERED.captures(l).map(|c| c[2].to_string()))
        .collect()
}

fn bracketed_topics(prompt: &str) -> Vec<String> {
    let Some(start) = prompt.find(": [") else {
        return Vec::new();
    };
    let rest = &prompt[start + 3..];
    let end = rest.find("], ").or_else(|| rest.find("]. ")).unwrap_or(rest.len());
    rest[..end]
        .split("; ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl TeacherEndpoint for MockTeacher {
    fn complete(&self, request: &TeacherRequest) -> Result<String, TransportError> {
        if self.config.unreachable {
            return Err(TransportError::Unreachable("mock endpoint disabled".into()));
        }
        if let Some(limit) = self.config.fail_from_ordinal {
            if request.first_ordinal >= limit {
                return Err(TransportError::Unreachable(format!(
                    "mock endpoint down from ordinal {limit}"
                )));
            }
        }
        if self.config.transport_failure_rate > 0.0 {
            let key = format!("{}#{}", request.request_id, request.attempt);
            if unit_interval(stable_hash(self.config.seed, &key)) < self.config.transport_failure_rate {
                return Err(TransportError::Status(503));
            }
        }
        let prompt = &request.prompt;
        let sentences = numbered_sentences(prompt);
        if prompt.starts_with(TOPIC_DISCOVERY_QUESTION) {
            return Ok(self.discovery_reply(&sentences));
        }
        let class_head = CLASSIFICATION_INSTRUCTION
            .split("{topics}")
            .next()
            .unwrap_or_default();
        if prompt.starts_with(class_head) {
            let topics = bracketed_topics(prompt);
            let with_sentiment = prompt.contains(SENTIMENT_INSTRUCTION);
            return Ok(self.classification_reply(
                &topics,
                &sentences,
                with_sentiment,
                request.first_ordinal,
            ));
        }
        if prompt.contains("Merge duplicates") {
            return Ok(self.reduction_reply(&bracketed_topics(prompt)));
        }
        Ok("I am not sure how to help with that.".to_string())
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("mock teacher (seed {})", self.config.seed)
    }
}

/// Resolve an endpoint URL. `mock:` selects the in-process mock configured by
/// `mock`; `http://` and `https://` select the live client.
pub fn endpoint_from_url(
    url: &str,
    model: &str,
    token_env: &str,
    timeout_secs: u64,
    mock: &MockConfig,
) -> Result<Box<dyn TeacherEndpoint>, TeacherError> {
    if url.starts_with("mock:") {
        return Ok(Box::new(MockTeacher::new(mock.clone())));
    }
    if url.starts_with("http://") || url.starts_with("https://") {
        #[cfg(feature = "http")]
        {
            return Ok(Box::new(HttpTeacher::new(
                url,
                model,
                token_env,
                std::time::Duration::from_secs(timeout_secs),
            )));
        }
    }
    let _ = (model, token_env, timeout_secs);
    Err(TeacherError::UnsupportedEndpoint(url.to_string()))
}
