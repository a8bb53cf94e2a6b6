use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::features::SentenceScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterTarget {
    EarningsOutlook,
    EarningsTrailing,
    RevenueOutlook,
    RevenueTrailing,
}

impl FilterTarget {
    pub const ALL: [FilterTarget; 4] = [
        FilterTarget::EarningsOutlook,
        FilterTarget::EarningsTrailing,
        FilterTarget::RevenueOutlook,
        FilterTarget::RevenueTrailing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterTarget::EarningsOutlook => "earnings_outlook",
            FilterTarget::EarningsTrailing => "earnings_trailing",
            FilterTarget::RevenueOutlook => "revenue_outlook",
            FilterTarget::RevenueTrailing => "revenue_trailing",
        }
    }
}

impl std::fmt::Display for FilterTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FilterTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FilterTarget::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown filter target {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    High,
    Medium,
    Low,
}

/// Likelihood bands: High ⇒ ≥ `high`, Medium ⇒ ≥ `medium`, Low ⇒ ≤ `low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            high: 0.5,
            medium: 0.2,
            low: 0.2,
        }
    }
}

impl Thresholds {
    fn admits(&self, intensity: Intensity, likelihood: f64) -> bool {
        match intensity {
            Intensity::High => likelihood >= self.high,
            Intensity::Medium => likelihood >= self.medium,
            Intensity::Low => likelihood <= self.low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub target: FilterTarget,
    pub intensities: BTreeMap<String, Intensity>,
    pub thresholds: Thresholds,
}

impl FilterSpec {
    /// The intensity column for `target`.
    pub fn for_target(target: FilterTarget, thresholds: Thresholds) -> Self {
        use Intensity::*;
        let (earnings, revenue, guidance) = match target {
            FilterTarget::EarningsOutlook => (High, Medium, High),
            FilterTarget::EarningsTrailing => (High, Medium, Low),
            FilterTarget::RevenueOutlook => (Medium, High, High),
            FilterTarget::RevenueTrailing => (Medium, High, Low),
        };
        let intensities = [
            ("Earnings", earnings),
            ("Revenue", revenue),
            ("Guidance", guidance),
            ("Others", Low),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        FilterSpec {
            target,
            intensities,
            thresholds,
        }
    }
}

/// Per-topic likelihoods of one sentence. They need not sum to one (a
/// multi-label scorer may be plugged in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLikelihoods {
    pub sentence_id: String,
    pub likelihoods: BTreeMap<String, f64>,
}

impl TopicLikelihoods {
    pub fn from_score(score: &SentenceScore, topics: &[String]) -> Self {
        TopicLikelihoods {
            sentence_id: score.sentence_id.clone(),
            likelihoods: topics
                .iter()
                .cloned()
                .zip(score.topic_distribution.iter().copied())
                .collect(),
        }
    }
}

/// Sentences whose likelihood for every constrained topic lies in its band.
pub fn filter_corpus(
    items: &[TopicLikelihoods],
    spec: &FilterSpec,
    classes: &[String],
) -> Result<BTreeSet<String>, AnalyticsError> {
    if let Some(missing) = spec.intensities.keys().find(|t| !classes.contains(t)) {
        return Err(AnalyticsError::MissingTopic(missing.clone()));
    }
    Ok(items
        .iter()
        .filter(|item| {
            spec.intensities.iter().all(|(topic, &intensity)| {
                let p = item.likelihoods.get(topic).copied().unwrap_or(0.0);
                spec.thresholds.admits(intensity, p)
            })
        })
        .map(|item| item.sentence_id.clone())
        .collect())
}
