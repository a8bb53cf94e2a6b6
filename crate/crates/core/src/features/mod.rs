//! Per-call topic propensities and per-topic net sentiment, and their
//! company-month aggregation.

mod month;
mod panel;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::teacher::Sentiment;

pub use month::YearMonth;
pub use panel::{monthly_aggregate, read_panel_csv, write_panel_csv, MonthlyFeaturePanel, PanelRow};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("document {0:?} has no scored sentences")]
    EmptyDocument(String),
    #[error("distribution for {id} is invalid: {reason}")]
    InvalidDistribution { id: String, reason: String },
    #[error("topic index {0} out of range")]
    UnknownTopic(usize),
    #[error("malformed panel: {0}")]
    MalformedPanel(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Model output for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub sentence_id: String,
    pub topic_distribution: Vec<f64>,
    pub predicted_topic: usize,
    /// Negative, Neutral, Positive.
    pub sentiment_distribution: [f64; 3],
    pub predicted_sentiment: Sentiment,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_distribution(id: &str, d: &[f64]) -> Result<(), FeatureError> {
    let bad = |reason: &str| {
        Err(FeatureError::InvalidDistribution {
            id: id.to_string(),
            reason: reason.to_string(),
        })
    };
    if d.is_empty() {
        return bad("empty");
    }
    if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return bad("negative or non-finite entry");
    }
    if (d.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return bad("does not sum to 1");
    }
    Ok(())
}

impl SentenceScore {
    /// Validate both distributions and derive the argmax predictions (ties go
    /// to the lowest index).
    pub fn new(
        sentence_id: &str,
        topic_distribution: Vec<f64>,
        sentiment_distribution: [f64; 3],
    ) -> Result<Self, FeatureError> {
        check_distribution(sentence_id, &topic_distribution)?;
        check_distribution(sentence_id, &sentiment_distribution)?;
        Ok(SentenceScore {
            sentence_id: sentence_id.to_string(),
            predicted_topic: argmax(&topic_distribution),
            predicted_sentiment: Sentiment::from_index(argmax(&sentiment_distribution)).unwrap(),
            topic_distribution,
            sentiment_distribution,
        })
    }

    /// One-hot score for a known topic and sentiment.
    pub fn hard(sentence_id: &str, topic: usize, num_topics: usize, sentiment: Sentiment) -> Self {
        assert!(topic < num_topics, "topic index out of range");
        let mut t = vec![0.0; num_topics];
        t[topic] = 1.0;
        let mut s = [0.0; 3];
        s[sentiment.index()] = 1.0;
        SentenceScore {
            sentence_id: sentence_id.to_string(),
            topic_distribution: t,
            predicted_topic: topic,
            sentiment_distribution: s,
            predicted_sentiment: sentiment,
        }
    }

    /// Positivity minus negativity: one-hot of the predicted sentiment when
    /// `hard`, otherwise from the distribution.
    pub fn net_sentiment(&self, hard: bool) -> f64 {
        if hard {
            match self.predicted_sentiment {
                Sentiment::Positive => 1.0,
                Sentiment::Neutral => 0.0,
                Sentiment::Negative => -1.0,
            }
        } else {
            self.sentiment_distribution[2] - self.sentiment_distribution[0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PropensityMode {
    /// Share of sentences predicted as the topic.
    #[default]
    Hard,
    /// Mean topic likelihood.
    Likelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SentimentMode {
    /// Mean net sentiment over the sentences predicted as the topic.
    #[default]
    TopicRestricted,
    /// Net sentiment summed over every sentence, divided by the sentence
    /// count, for any topic with non-zero propensity.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub propensity: PropensityMode,
    pub sentiment: SentimentMode,
    /// Use the predicted sentiment class rather than the distribution.
    pub hard_sentiment: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            propensity: PropensityMode::Hard,
            sentiment: SentimentMode::TopicRestricted,
            hard_sentiment: true,
        }
    }
}

fn check_doc(doc_id: &str, scores: &[SentenceScore]) -> Result<usize, FeatureError> {
    let first = scores
        .first()
        .ok_or_else(|| FeatureError::EmptyDocument(doc_id.to_string()))?;
    let k = first.topic_distribution.len();
    if let Some(s) = scores.iter().find(|s| s.topic_distribution.len() != k) {
        return Err(FeatureError::InvalidDistribution {
            id: s.sentence_id.clone(),
            reason: "topic count differs within document".into(),
        });
    }
    Ok(k)
}

/// `p_k` for every topic index.
pub fn topic_propensity(scores: &[SentenceScore], mode: PropensityMode) -> Result<Vec<f64>, FeatureError> {
    let k = check_doc("", scores)?;
    let j = scores.len() as f64;
    let mut p = vec![0.0; k];
    match mode {
        PropensityMode::Hard => {
            let mut counts = vec![0usize; k];
            for s in scores {
                counts[s.predicted_topic] += 1;
            }
            for (pk, c) in p.iter_mut().zip(counts) {
                *pk = c as f64 / j;
            }
        }
        PropensityMode::Likelihood => {
            for s in scores {
                for (pk, v) in p.iter_mut().zip(&s.topic_distribution) {
                    *pk += v;
                }
            }
            p.iter_mut().for_each(|v| *v /= j);
        }
    }
    Ok(p)
}

/// Net sentiment towards topic `k`, or `None` where it is undefined.
pub fn topic_sentiment(
    scores: &[SentenceScore],
    k: usize,
    options: &FeatureOptions,
) -> Result<Option<f64>, FeatureError> {
    let topics = check_doc("", scores)?;
    if k >= topics {
        return Err(FeatureError::UnknownTopic(k));
    }
    let p = topic_propensity(scores, options.propensity)?;
    if p[k] <= 0.0 {
        return Ok(None);
    }
    Ok(match options.sentiment {
        SentimentMode::Literal => {
            let total: f64 = scores.iter().map(|s| s.net_sentiment(options.hard_sentiment)).sum();
            Some(total / scores.len() as f64)
        }
        SentimentMode::TopicRestricted => {
            let on_topic: Vec<f64> = scores
                .iter()
                .filter(|s| s.predicted_topic == k)
                .map(|s| s.net_sentiment(options.hard_sentiment))
                .collect();
            if on_topic.is_empty() {
                None
            } else {
                Some(on_topic.iter().sum::<f64>() / on_topic.len() as f64)
            }
        }
    })
}

/// Features of one call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentFeatures {
    pub doc_id: String,
    pub company_id: String,
    pub month: YearMonth,
    pub propensity: BTreeMap<String, f64>,
    pub sentiment: BTreeMap<String, f64>,
    pub mode: PropensityMode,
}

pub fn document_features(
    doc_id: &str,
    company_id: &str,
    month: YearMonth,
    scores: &[SentenceScore],
    topics: &[String],
    options: &FeatureOptions,
) -> Result<DocumentFeatures, FeatureError> {
    let k = check_doc(doc_id, scores)?;
    if k != topics.len() {
        return Err(FeatureError::InvalidDistribution {
            id: doc_id.to_string(),
            reason: format!("{k} topic likelihoods for {} topic names", topics.len()),
        });
    }
    let p = topic_propensity(scores, options.propensity)?;
    let mut sentiment = BTreeMap::new();
    for (i, name) in topics.iter().enumerate() {
        if let Some(s) = topic_sentiment(scores, i, options)? {
            sentiment.insert(name.clone(), s);
        }
    }
    Ok(DocumentFeatures {
        doc_id: doc_id.to_string(),
        company_id: company_id.to_string(),
        month,
        propensity: topics.iter().cloned().zip(p).collect(),
        sentiment,
        mode: options.propensity,
    })
}

/// Mean sentiment per topic over a set of scores, for the topic distribution
/// report.
pub fn topic_distribution_summary(scores: &[SentenceScore], topics: &[String]) -> Vec<(String, usize, f64)> {
    let mut counts = vec![0usize; topics.len()];
    let mut sums = vec![0.0; topics.len()];
    for s in scores {
        if s.predicted_topic < topics.len() {
            counts[s.predicted_topic] += 1;
            sums[s.predicted_topic] += s.net_sentiment(true);
        }
    }
    topics
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mean = if counts[i] > 0 { sums[i] / counts[i] as f64 } else { 0.0 };
            (t.clone(), counts[i], mean)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(topics: &[usize], sentiments: &[Sentiment], k: usize) -> Vec<SentenceScore> {
        topics
            .iter()
            .zip(sentiments)
            .enumerate()
            .map(|(i, (&t, &s))| SentenceScore::hard(&format!("d#{i:06}"), t, k, s))
            .collect()
    }

    #[test]
    fn hard_propensity() {
        use Sentiment::*;
        let d = doc(&[0, 0, 1, 2], &[Positive, Neutral, Neutral, Negative], 3);
        assert_eq!(topic_propensity(&d, PropensityMode::Hard).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(topic_propensity(&d, PropensityMode::Likelihood).unwrap(), vec![0.5, 0.25, 0.25]);
        let one = doc(&[1], &[Positive], 3);
        assert_eq!(topic_propensity(&one, PropensityMode::Hard).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(matches!(topic_propensity(&[], PropensityMode::Hard), Err(FeatureError::EmptyDocument(_))));
    }

    #[test]
    fn sentiment_rules() {
        use Sentiment::*;
        let opts = FeatureOptions::default();
        let d = doc(&[0, 0, 1], &[Positive, Negative, Positive], 3);
        assert_eq!(topic_sentiment(&d, 0, &opts).unwrap(), Some(0.0));
        assert_eq!(topic_sentiment(&d, 1, &opts).unwrap(), Some(1.0));
        assert_eq!(topic_sentiment(&d, 2, &opts).unwrap(), None);
        let literal = FeatureOptions { sentiment: SentimentMode::Literal, ..opts };
        assert!((topic_sentiment(&d, 1, &literal).unwrap().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(topic_sentiment(&d, 2, &literal).unwrap(), None);
    }

    #[test]
    fn score_validation() {
        assert!(SentenceScore::new("a", vec![0.5, 0.6], [0.2, 0.3, 0.5]).is_err());
        assert!(SentenceScore::new("a", vec![0.5, -0.1, 0.6], [0.2, 0.3, 0.5]).is_err());
        let s = SentenceScore::new("a", vec![0.4, 0.4, 0.2], [0.5, 0.0, 0.5]).unwrap();
        assert_eq!(s.predicted_topic, 0);
        assert_eq!(s.predicted_sentiment, Sentiment::Negative);
    }

    fn soft_doc() -> impl Strategy<Value = Vec<SentenceScore>> {
        prop::collection::vec(
            (prop::collection::vec(0.01f64..1.0, 4), prop::array::uniform3(0.01f64..1.0)),
            1..30,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (t, s))| {
                    let ts: f64 = t.iter().sum();
                    let ss: f64 = s.iter().sum();
                    SentenceScore::new(
                        &format!("d#{i:06}"),
                        t.iter().map(|v| v / ts).collect(),
                        [s[0] / ss, s[1] / ss, s[2] / ss],
                    )
                    .unwrap()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn sentiment_bounded(d in soft_doc(), hard in any::<bool>(), literal in any::<bool>()) {
            let opts = FeatureOptions {
                propensity: PropensityMode::Hard,
                sentiment: if literal { SentimentMode::Literal } else { SentimentMode::TopicRestricted },
                hard_sentiment: hard,
            };
            let p = topic_propensity(&d, PropensityMode::Hard).unwrap();
            for (k, pk) in p.iter().enumerate() {
                let s = topic_sentiment(&d, k, &opts).unwrap();
                prop_assert_eq!(s.is_none(), *pk == 0.0);
                if let Some(v) = s {
                    prop_assert!((-1.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn likelihood_is_lipschitz(d in soft_doc(), eps in 0.0f64..0.05, target in 0usize..4) {
            let base = topic_propensity(&d, PropensityMode::Likelihood).unwrap();
            prop_assert!((base.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            let mut moved = d.clone();
            let t = &mut moved[0].topic_distribution;
            let take = eps.min(t[(target + 1) % 4]);
            t[target] += take;
            t[(target + 1) % 4] -= take;
            let after = topic_propensity(&moved, PropensityMode::Likelihood).unwrap();
            let j = d.len() as f64;
            for k in 0..4 {
                prop_assert!((after[k] - base[k]).abs() <= take / j + 1e-12);
            }
        }
    }
}
