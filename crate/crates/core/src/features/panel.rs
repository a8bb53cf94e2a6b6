use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DocumentFeatures, FeatureError, YearMonth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub company_id: String,
    pub month: YearMonth,
    pub n_calls: usize,
    pub propensity: BTreeMap<String, f64>,
    pub sentiment: BTreeMap<String, f64>,
}

/// One row per (company, month) that had at least one call.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MonthlyFeaturePanel {
    pub topics: Vec<String>,
    pub rows: BTreeMap<(String, YearMonth), PanelRow>,
}

impl MonthlyFeaturePanel {
    pub fn months(&self) -> Vec<YearMonth> {
        self.rows.keys().map(|(_, m)| *m).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Value of column `p_<topic>` or `s_<topic>` for every company in `month`.
    pub fn column(&self, column: &str, month: YearMonth) -> Vec<(String, f64)> {
        let (kind, topic) = column.split_at(column.find('_').map_or(0, |i| i + 1));
        self.rows
            .values()
            .filter(|r| r.month == month)
            .filter_map(|r| {
                let v = match kind {
                    "p_" => r.propensity.get(topic),
                    "s_" => r.sentiment.get(topic),
                    _ => None,
                }?;
                Some((r.company_id.clone(), *v))
            })
            .collect()
    }

    pub fn has_column(&self, column: &str) -> bool {
        ["p_", "s_"]
            .iter()
            .any(|p| column.strip_prefix(p).is_some_and(|t| self.topics.iter().any(|x| x == t)))
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Equal-weight mean over the calls of each company-month. Sentiment is
/// averaged over the calls where it is defined. Calls are combined in
/// `doc_id` order so the result does not depend on input order.
pub fn monthly_aggregate(features: &[DocumentFeatures]) -> MonthlyFeaturePanel {
    let mut groups: BTreeMap<(String, YearMonth), Vec<&DocumentFeatures>> = BTreeMap::new();
    let mut topics = BTreeSet::new();
    for f in features {
        topics.extend(f.propensity.keys().cloned());
        groups.entry((f.company_id.clone(), f.month)).or_default().push(f);
    }
    let mut rows = BTreeMap::new();
    for (key, mut calls) in groups {
        calls.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut propensity = BTreeMap::new();
        let mut sentiment = BTreeMap::new();
        for topic in &topics {
            let p: Vec<f64> = calls.iter().map(|c| c.propensity.get(topic).copied().unwrap_or(0.0)).collect();
            propensity.insert(topic.clone(), mean(&p));
            let s: Vec<f64> = calls.iter().filter_map(|c| c.sentiment.get(topic).copied()).collect();
            if !s.is_empty() {
                sentiment.insert(topic.clone(), mean(&s));
            }
        }
        rows.insert(
            key.clone(),
            PanelRow {
                company_id: key.0,
                month: key.1,
                n_calls: calls.len(),
                propensity,
                sentiment,
            },
        );
    }
    MonthlyFeaturePanel {
        topics: topics.into_iter().collect(),
        rows,
    }
}

/// `company_id, month, p_<topic>..., s_<topic>...`; undefined sentiment is an
/// empty cell.
pub fn write_panel_csv<W: Write>(panel: &MonthlyFeaturePanel, out: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["company_id".to_string(), "month".to_string()];
    header.extend(panel.topics.iter().map(|t| format!("p_{t}")));
    header.extend(panel.topics.iter().map(|t| format!("s_{t}")));
    w.write_record(&header)?;
    for row in panel.rows.values() {
        let mut rec = vec![row.company_id.clone(), row.month.to_string()];
        rec.extend(panel.topics.iter().map(|t| format!("{}", row.propensity.get(t).copied().unwrap_or(0.0))));
        rec.extend(
            panel
                .topics
                .iter()
                .map(|t| row.sentiment.get(t).map(|v| format!("{v}")).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel_csv<R: Read>(input: R) -> Result<MonthlyFeaturePanel, FeatureError> {
    let bad = |m: String| FeatureError::MalformedPanel(m);
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "company_id" || header[1] != "month" {
        return Err(bad("header must start with company_id,month".into()));
    }
    let topics: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("p_").map(str::to_string))
        .collect();
    let mut panel = MonthlyFeaturePanel {
        topics: topics.clone(),
        rows: BTreeMap::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let month: YearMonth = rec[1].parse().map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
        let mut row = PanelRow {
            company_id: rec[0].to_string(),
            month,
            n_calls: 1,
            propensity: BTreeMap::new(),
            sentiment: BTreeMap::new(),
        };
        for (h, cell) in header.iter().zip(rec.iter()).skip(2) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| bad(format!("row {}: bad number {cell:?}", i + 2)))?;
            if let Some(t) = h.strip_prefix("p_") {
                row.propensity.insert(t.to_string(), v);
            } else if let Some(t) = h.strip_prefix("s_") {
                row.sentiment.insert(t.to_string(), v);
            }
        }
        let key = (row.company_id.clone(), month);
        if panel.rows.insert(key, row).is_some() {
            return Err(bad(format!("row {}: duplicate company-month", i + 2)));
        }
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PropensityMode;
    use proptest::prelude::*;

    fn call(doc: &str, company: &str, month: YearMonth, p: &[(&str, f64)], s: &[(&str, f64)]) -> DocumentFeatures {
        DocumentFeatures {
            doc_id: doc.into(),
            company_id: company.into(),
            month,
            propensity: p.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            sentiment: s.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            mode: PropensityMode::Hard,
        }
    }

    #[test]
    fn equal_weight_calls() {
        let m = YearMonth::new(2020, 1).unwrap();
        let a = call("x1", "X", m, &[("A", 1.0), ("B", 0.0)], &[("A", 0.5)]);
        let b = call("x2", "X", m, &[("A", 0.5), ("B", 0.5)], &[("A", -0.5), ("B", 0.2)]);
        let panel = monthly_aggregate(&[a.clone(), b]);
        let row = &panel.rows[&("X".to_string(), m)];
        assert_eq!(row.propensity["A"], 0.75);
        assert_eq!(row.propensity["B"], 0.25);
        assert_eq!(row.sentiment["A"], 0.0);
        assert_eq!(row.sentiment["B"], 0.2);
        assert_eq!(row.n_calls, 2);

        let single = monthly_aggregate(std::slice::from_ref(&a));
        let row = &single.rows[&("X".to_string(), m)];
        assert_eq!(row.propensity, a.propensity);
        assert_eq!(row.sentiment, a.sentiment);
    }

    #[test]
    fn csv_round_trip_keeps_empty_cells() {
        let m = YearMonth::new(2020, 1).unwrap();
        let panel = monthly_aggregate(&[call("x1", "X", m, &[("A", 1.0), ("B", 0.0)], &[("A", 0.5)])]);
        let mut buf = Vec::new();
        write_panel_csv(&panel, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "company_id,month,p_A,p_B,s_A,s_B\nX,2020-01,1,0,0.5,\n");
        let back = read_panel_csv(&buf[..]).unwrap();
        assert_eq!(back.rows[&("X".to_string(), m)].sentiment.get("B"), None);
        assert_eq!(back.column("p_A", m), vec![("X".to_string(), 1.0)]);
    }

    proptest! {
        #[test]
        fn order_free(vals in prop::collection::vec((0usize..3, 0usize..3, 0.0f64..1.0, -1.0f64..1.0), 1..20), seed in any::<u64>()) {
            let feats: Vec<DocumentFeatures> = vals
                .iter()
                .enumerate()
                .map(|(i, &(c, m, p, s))| call(
                    &format!("d{i:03}"),
                    &format!("C{c}"),
                    YearMonth::new(2020, m as u32 + 1).unwrap(),
                    &[("A", p), ("B", 1.0 - p)],
                    &[("A", s)],
                ))
                .collect();
            let mut shuffled = feats.clone();
            crate::rng::shuffle(&mut crate::rng::seeded(seed), &mut shuffled);
            prop_assert_eq!(monthly_aggregate(&feats), monthly_aggregate(&shuffled));
        }
    }
}
