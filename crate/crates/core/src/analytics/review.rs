use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, FilterTarget};
use crate::rng::{derive_seed, sample_indices, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRow {
    pub target_area: String,
    pub sentence_id: String,
    pub text: String,
    /// Filled in by the reviewer: `1`/`0`, `yes`/`no` or `true`/`false`.
    pub relevant: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewSample {
    pub rows: Vec<ReviewRow>,
    /// Areas with fewer filtered sentences than requested: (area, available).
    pub shortfalls: Vec<(String, usize)>,
}

impl ReviewSample {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalyticsError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["target_area", "sentence_id", "text", "relevant"])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw up to `size` sentences per target area for expert review. Each area
/// uses its own seed stream so adding an area does not change the others.
pub fn validate_filter_sample(
    filtered: &BTreeMap<FilterTarget, Vec<(String, String)>>,
    size: usize,
    seed: u64,
) -> ReviewSample {
    let mut rows = Vec::new();
    let mut shortfalls = Vec::new();
    for (&target, sentences) in filtered {
        let mut pool: Vec<&(String, String)> = sentences.iter().collect();
        pool.sort();
        let take = size.min(pool.len());
        if take < size {
            log::warn!("{target}: only {} filtered sentences for a sample of {size}", pool.len());
            shortfalls.push((target.to_string(), pool.len()));
        }
        let mut rng = seeded(derive_seed(seed, target as u64));
        let mut picked = sample_indices(&mut rng, pool.len(), take);
        picked.sort_unstable();
        rows.extend(picked.into_iter().map(|i| ReviewRow {
            target_area: target.to_string(),
            sentence_id: pool[i].0.clone(),
            text: pool[i].1.clone(),
            relevant: String::new(),
        }));
    }
    ReviewSample { rows, shortfalls }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaAccuracy {
    pub reviewed: usize,
    pub relevant: usize,
    pub accuracy: f64,
}

fn parse_flag(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "y" | "yes" | "true" => Some(true),
        "0" | "n" | "no" | "false" => Some(false),
        _ => None,
    }
}

/// Accuracy per area from a filled-in review file. Rows left blank are not
/// counted.
pub fn score_review<R: Read>(input: R) -> Result<BTreeMap<String, AreaAccuracy>, AnalyticsError> {
    let mut out: BTreeMap<String, AreaAccuracy> = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(input).deserialize::<ReviewRow>().enumerate() {
        let row = row?;
        if row.relevant.trim().is_empty() {
            continue;
        }
        let flag = parse_flag(&row.relevant).ok_or_else(|| {
            AnalyticsError::MalformedReview(format!("row {}: relevant = {:?}", i + 2, row.relevant))
        })?;
        let e = out.entry(row.target_area).or_insert(AreaAccuracy {
            reviewed: 0,
            relevant: 0,
            accuracy: 0.0,
        });
        e.reviewed += 1;
        e.relevant += flag as usize;
    }
    for a in out.values_mut() {
        a.accuracy = a.relevant as f64 / a.reviewed as f64;
    }
    Ok(out)
}
