use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::features::YearMonth;
use crate::teacher::Sentiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    Market,
    Sector,
}

pub const MARKET_GROUP: &str = "Market";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendInput {
    pub sentence_id: String,
    pub month: YearMonth,
    pub sector: String,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub period: YearMonth,
    pub group: String,
    /// Share of filtered sentences predicted Negative.
    pub negativity: f64,
    pub n_sentences: usize,
}

/// Negative share per month and group over the sentences in `filtered`.
/// Groups with no filtered sentence in a month emit no row.
pub fn negativity_trend(filtered: &BTreeSet<String>, inputs: &[TrendInput], grouping: Grouping) -> Vec<TrendPoint> {
    let mut counts: BTreeMap<(YearMonth, String), (usize, usize)> = BTreeMap::new();
    for s in inputs.iter().filter(|s| filtered.contains(&s.sentence_id)) {
        let group = match grouping {
            Grouping::Market => MARKET_GROUP.to_string(),
            Grouping::Sector => s.sector.clone(),
        };
        let c = counts.entry((s.month, group)).or_default();
        c.1 += 1;
        if s.sentiment == Sentiment::Negative {
            c.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|((period, group), (neg, total))| TrendPoint {
            period,
            group,
            negativity: neg as f64 / total as f64,
            n_sentences: total,
        })
        .collect()
}

pub fn write_trend_csv<W: Write>(points: &[TrendPoint], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["period", "group", "negativity", "n_sentences"])?;
    for p in points {
        w.write_record([
            p.period.to_string(),
            p.group.clone(),
            p.negativity.to_string(),
            p.n_sentences.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
