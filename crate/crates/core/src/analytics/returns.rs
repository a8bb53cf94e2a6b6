use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Total (dividend-inclusive) return of one company over `[period_start,
/// period_end]` next to its sector's cap-weighted return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsRecord {
    pub company_id: String,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub total_return: f64,
    pub sector: String,
    pub sector_return: f64,
    pub market_cap_weight: Option<f64>,
}

impl ReturnsRecord {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |reason: &str| {
            Err(AnalyticsError::InvalidReturn {
                company_id: self.company_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.period_end <= self.period_start {
            return bad("period_end must be after period_start");
        }
        if !(self.total_return.is_finite() && self.total_return > -1.0) {
            return bad("total_return must be finite and > -1");
        }
        if !(self.sector_return.is_finite() && self.sector_return > -1.0) {
            return bad("sector_return must be finite and > -1");
        }
        if let Some(w) = self.market_cap_weight {
            if !(w.is_finite() && w >= 0.0) {
                return bad("market_cap_weight must be non-negative");
            }
        }
        Ok(())
    }
}

pub fn sector_neutral_return(record: &ReturnsRecord) -> f64 {
    record.total_return - record.sector_return
}

/// Replace each record's sector return with the cap-weighted mean of its
/// sector peers over the same period. Groups where any member lacks a weight
/// keep their supplied value.
pub fn cap_weighted_sector_returns(records: &mut [ReturnsRecord]) {
    let mut groups: BTreeMap<(String, NaiveDate, NaiveDate), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups
            .entry((r.sector.clone(), r.period_start, r.period_end))
            .or_default()
            .push(i);
    }
    for members in groups.values() {
        let weights: Option<Vec<f64>> = members.iter().map(|&i| records[i].market_cap_weight).collect();
        let Some(weights) = weights else { continue };
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let rs = members
            .iter()
            .zip(&weights)
            .map(|(&i, w)| records[i].total_return * w)
            .sum::<f64>()
            / total;
        for &i in members {
            records[i].sector_return = rs;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    company_id: String,
    period_start: NaiveDate,
    period_end: NaiveDate,
    total_return: f64,
    sector: String,
    sector_return: f64,
    market_cap_weight: Option<f64>,
}

pub fn read_returns_csv<R: Read>(input: R) -> Result<Vec<ReturnsRecord>, AnalyticsError> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize::<Row>() {
        let r = row?;
        let rec = ReturnsRecord {
            company_id: r.company_id,
            period_start: r.period_start,
            period_end: r.period_end,
            total_return: r.total_return,
            sector: r.sector,
            sector_return: r.sector_return,
            market_cap_weight: r.market_cap_weight,
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_returns_csv<W: Write>(records: &[ReturnsRecord], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row {
            company_id: r.company_id.clone(),
            period_start: r.period_start,
            period_end: r.period_end,
            total_return: r.total_return,
            sector: r.sector.clone(),
            sector_return: r.sector_return,
            market_cap_weight: r.market_cap_weight,
        })?;
    }
    w.flush()?;
    Ok(())
}
