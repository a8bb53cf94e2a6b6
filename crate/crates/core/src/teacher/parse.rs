//! Validation of teacher replies.
//!
//! Classification replies are read line by line. A line is a topic line
//! (`Topic: <name>`), a sentiment line (`Sentiment: <label>`), or anything
//! else, which counts as a malformed answer for the sentence slot it occupies.
//! Lines may carry a `N.` / `N)` prefix naming their slot explicitly;
//! otherwise slots are filled in order. Every slot ends up either accepted or
//! discarded with a typed reason, so the accounting never loses a sentence.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Sentiment, TeacherError};

static NUMBERING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\d{1,6})\s*[.):\-]\s*(.*)$").unwrap());
static TOPIC_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^Topic:\s*(.+)$").unwrap());
static SENTIMENT_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i:sentiment):\s*(.*)$").unwrap());
static SENTIMENT_VALUE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i)(negative|neutral|positive)\.?$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discard {
    BadFormat,
    UnknownTopic,
    BadSentiment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub topic: String,
    pub sentiment: Option<Sentiment>,
}

/// Verdict on one reply line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineVerdict {
    Topic {
        slot: Option<usize>,
        topic: Result<String, Discard>,
    },
    Sentiment {
        slot: Option<usize>,
        sentiment: Result<Sentiment, Discard>,
    },
    Other {
        slot: Option<usize>,
    },
}

/// Split a discovery reply on semicolons, trimming and de-duplicating
/// case-insensitively (first spelling wins).
pub fn parse_topic_list(raw: &str) -> Result<Vec<String>, TeacherError> {
    let mut seen = HashSet::new();
    let topics: Vec<String> = raw
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .filter(|t| seen.insert(t.to_lowercase()))
        .map(str::to_string)
        .collect();
    if topics.is_empty() {
        return Err(TeacherError::MalformedResponse(
            "no topics in discovery reply".to_string(),
        ));
    }
    Ok(topics)
}

/// Match a reported topic against the allowed list, case-insensitively,
/// returning the canonical spelling. A single trailing period is tolerated.
pub fn canonical_topic<'a>(value: &str, allowed: &'a [String]) -> Option<&'a str> {
    let value = value.trim();
    let find = |v: &str| {
        allowed
            .iter()
            .find(|a| a.to_lowercase() == v.to_lowercase())
            .map(String::as_str)
    };
    find(value).or_else(|| value.strip_suffix('.').and_then(|v| find(v.trim())))
}

/// Classify a single line. Total: never fails, whatever the input.
pub fn classify_line(line: &str, allowed: &[String]) -> LineVerdict {
    let (slot, body) = match NUMBERING.captures(line) {
        Some(c) => {
            let n: usize = c[1].parse().unwrap_or(0);
            (n.checked_sub(1), c.get(2).map_or("", |m| m.as_str()))
        }
        None => (None, line.trim()),
    };
    let body = body.trim();
    if let Some(c) = TOPIC_LINE.captures(body) {
        let topic = canonical_topic(&c[1], allowed)
            .map(str::to_string)
            .ok_or(Discard::UnknownTopic);
        return LineVerdict::Topic { slot, topic };
    }
    if let Some(c) = SENTIMENT_LINE.captures(body) {
        let value = c[1].trim();
        let sentiment = if SENTIMENT_VALUE.is_match(value) {
            value.parse().map_err(|_| Discard::BadSentiment)
        } else {
            Err(Discard::BadSentiment)
        };
        return LineVerdict::Sentiment { slot, sentiment };
    }
    LineVerdict::Other { slot }
}

#[derive(Debug, Default, Clone)]
struct Slot {
    topic: Option<Result<String, Discard>>,
    sentiment: Option<Result<Sentiment, Discard>>,
}

/// Parse a classification reply for a batch of `expected` sentences.
///
/// Discard precedence per slot: a malformed sentiment label, then a missing or
/// malformed topic line, then an unknown topic, then (when sentiment is
/// required) a missing sentiment line.
pub fn parse_classification(
    raw: &str,
    allowed_topics: &[String],
    expected: usize,
    with_sentiment: bool,
) -> Vec<Result<Classification, Discard>> {
    let mut slots = vec![Slot::default(); expected];
    let mut next = 0usize;
    let mut current: Option<usize> = None;
    for line in raw.lines().filter(|l| !l.trim().is_empty()) {
        match classify_line(line, allowed_topics) {
            LineVerdict::Topic { slot, topic } => {
                let idx = slot.unwrap_or(next);
                next = idx + 1;
                current = Some(idx);
                if let Some(s) = slots.get_mut(idx) {
                    s.topic = Some(match s.topic {
                        None => topic,
                        Some(_) => Err(Discard::BadFormat),
                    });
                }
            }
            LineVerdict::Sentiment { slot, sentiment } => {
                let idx = match slot.or(current) {
                    Some(i) => i,
                    None => {
                        next += 1;
                        next - 1
                    }
                };
                current = Some(idx);
                if let Some(s) = slots.get_mut(idx) {
                    s.sentiment = Some(match s.sentiment {
                        None => sentiment,
                        Some(_) => Err(Discard::BadSentiment),
                    });
                }
            }
            LineVerdict::Other { slot } => {
                let idx = slot.unwrap_or(next);
                next = idx + 1;
                current = Some(idx);
                if let Some(s) = slots.get_mut(idx) {
                    s.topic = Some(Err(Discard::BadFormat));
                }
            }
        }
    }
    slots
        .into_iter()
        .map(|s| {
            if let Some(Err(e)) = s.sentiment {
                return Err(e);
            }
            let topic = match s.topic {
                None => return Err(Discard::BadFormat),
                Some(t) => t?,
            };
            let sentiment = match s.sentiment {
                Some(Ok(v)) => Some(v),
                _ if with_sentiment => return Err(Discard::BadFormat),
                _ => None,
            };
            Ok(Classification { topic, sentiment })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn allowed() -> Vec<String> {
        ["Dividend & Buyback", "Revenue", "Guidance"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn topic_list_semicolons() {
        assert_eq!(
            parse_topic_list("Revenue Growth; Margins; Guidance").unwrap(),
            vec!["Revenue Growth", "Margins", "Guidance"]
        );
        assert_eq!(parse_topic_list("Margins").unwrap(), vec!["Margins"]);
        assert!(matches!(
            parse_topic_list(";;;"),
            Err(TeacherError::MalformedResponse(_))
        ));
    }

    #[test]
    fn topic_list_dedup_keeps_first_casing() {
        assert_eq!(
            parse_topic_list(" margins ;Margins; MARGINS;Costs").unwrap(),
            vec!["margins", "Costs"]
        );
    }

    #[test]
    fn accepted_topic() {
        let out = parse_classification("Topic: Dividend & Buyback", &allowed(), 1, false);
        assert_eq!(
            out,
            vec![Ok(Classification {
                topic: "Dividend & Buyback".into(),
                sentiment: None
            })]
        );
    }

    #[test]
    fn missing_prefix_is_bad_format() {
        let out = parse_classification("Dividend & Buyback", &allowed(), 1, false);
        assert_eq!(out, vec![Err(Discard::BadFormat)]);
    }

    #[test]
    fn unlisted_topic() {
        let out = parse_classification("Topic: Quantum Farming", &allowed(), 1, false);
        assert_eq!(out, vec![Err(Discard::UnknownTopic)]);
    }

    #[test]
    fn bad_sentiment_label() {
        let out = parse_classification("Sentiment: Mixed", &allowed(), 1, true);
        assert_eq!(out, vec![Err(Discard::BadSentiment)]);
    }

    #[test]
    fn case_insensitive_topic_and_trailing_period() {
        let out = parse_classification(
            "Topic: revenue.\nSentiment: positive.",
            &allowed(),
            1,
            true,
        );
        assert_eq!(
            out,
            vec![Ok(Classification {
                topic: "Revenue".into(),
                sentiment: Some(Sentiment::Positive)
            })]
        );
    }

    #[test]
    fn numbered_multi_slot_reply() {
        let raw = "1. Topic: Revenue\nSentiment: Positive\n2. Revenue\nSentiment: Negative\n3. Topic: Guidance\nSentiment: Neutral";
        let out = parse_classification(raw, &allowed(), 4, true);
        assert!(out[0].is_ok());
        assert_eq!(out[1], Err(Discard::BadFormat));
        assert_eq!(
            out[2].as_ref().unwrap().sentiment,
            Some(Sentiment::Neutral)
        );
        assert_eq!(out[3], Err(Discard::BadFormat));
    }

    #[test]
    fn out_of_order_numbering() {
        let raw = "2. Topic: Guidance\n1. Topic: Revenue";
        let out = parse_classification(raw, &allowed(), 2, false);
        assert_eq!(out[0].as_ref().unwrap().topic, "Revenue");
        assert_eq!(out[1].as_ref().unwrap().topic, "Guidance");
    }

    #[test]
    fn missing_sentiment_when_required() {
        let out = parse_classification("Topic: Revenue", &allowed(), 1, true);
        assert_eq!(out, vec![Err(Discard::BadFormat)]);
    }

    proptest! {
        #[test]
        fn parser_is_total(raw in "\\PC{0,300}", expected in 0usize..30, sentiment: bool) {
            let out = parse_classification(&raw, &allowed(), expected, sentiment);
            prop_assert_eq!(out.len(), expected);
            for line in raw.lines() {
                let _ = classify_line(line, &allowed());
            }
        }
    }
}
