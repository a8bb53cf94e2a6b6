use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;

use earnings_distill::analytics::{
    cumulative_ic, filter_corpus, negativity_trend, read_returns_csv, score_review, validate_filter_sample,
    write_trend_csv, FilterSpec, FilterTarget, Grouping, Thresholds, TopicLikelihoods, TrendInput,
};
use earnings_distill::features::{read_panel_csv, YearMonth};
use earnings_distill::Sentiment;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::common::*;
use crate::config::{tag, RunConfig};
use crate::error::CliError;
use crate::workspace::Workspace;

/// Contents of `filter/filtered.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterOutput {
    pub thresholds: Thresholds,
    pub targets: BTreeMap<FilterTarget, Vec<String>>,
}

fn open(ws: &mut Workspace, path: &std::path::Path) -> Result<File, CliError> {
    ws.input(path)?;
    File::open(path).map_err(CliError::io(path))
}

/// Topic names may hold spaces and punctuation; keep file names plain.
pub fn file_slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '-' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

pub fn ic(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let panel_path = ws.path(PANEL);
    let panel = read_panel_csv(open(ws, &panel_path)?)?;
    let returns_path = config
        .paths
        .returns
        .clone()
        .ok_or_else(|| CliError::Config("paths.returns is required for ic".into()))?;
    let returns = read_returns_csv(open(ws, &returns_path)?)?;
    let c = &config.ic;
    let columns: Vec<String> = if c.columns.is_empty() {
        let p = panel.topics.iter().map(|t| format!("p_{t}"));
        let s = panel.topics.iter().map(|t| format!("s_{t}"));
        p.chain(s).collect()
    } else {
        c.columns.clone()
    };
    let mut summary = BTreeMap::new();
    let mut computed = 0;
    let mut files = BTreeSet::new();
    for col in &columns {
        match cumulative_ic(&panel, col, &returns, c.horizon, c.method, c.min_obs) {
            Ok(series) => {
                let file = format!("{IC_DIR}/{}.csv", file_slug(col));
                if !files.insert(file.clone()) {
                    return Err(CliError::Runtime(format!("column {col:?} collides with another at {file}")));
                }
                ws.write_with(&file, |buf| Ok(series.write_csv(buf)?))?;
                let values = series.ic_values();
                let mean = if values.is_empty() { None } else { Some(values.iter().sum::<f64>() / values.len() as f64) };
                summary.insert(
                    col.clone(),
                    json!({
                        "file": file,
                        "months": series.points.len(),
                        "months_with_ic": values.len(),
                        "mean_ic": mean,
                        "cumulative_ic": series.last_cumulative(),
                    }),
                );
                computed += 1;
            }
            Err(e) => {
                log::warn!("{col}: {e}");
                summary.insert(col.clone(), json!({ "error": e.to_string() }));
            }
        }
    }
    let out = json!({
        "method": c.method,
        "horizon": c.horizon,
        "min_obs": c.min_obs,
        "columns": summary,
    });
    ws.write_json(IC_SUMMARY, &out)?;
    if computed == 0 {
        return Err(CliError::Runtime("no panel column overlaps the returns".into()));
    }
    Ok(out)
}

pub fn filter(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let topics = load_topics(ws)?;
    let rows = load_scores(ws)?;
    let items: Vec<TopicLikelihoods> = rows
        .iter()
        .map(|r| Ok(TopicLikelihoods::from_score(&r.to_score()?, &topics)))
        .collect::<Result<_, CliError>>()?;
    let thresholds = config.filter.thresholds();
    let mut targets = BTreeMap::new();
    for &target in &config.filter.targets {
        let spec = FilterSpec::for_target(target, thresholds);
        let kept = filter_corpus(&items, &spec, &topics)?;
        targets.insert(target, kept.into_iter().collect::<Vec<_>>());
    }
    let counts: BTreeMap<String, usize> = targets.iter().map(|(t, v)| (t.to_string(), v.len())).collect();
    ws.write_json(FILTERED, &FilterOutput { thresholds, targets })?;
    Ok(json!({ "scored": rows.len(), "thresholds": thresholds, "selected": counts }))
}

fn load_filtered(ws: &mut Workspace) -> Result<FilterOutput, CliError> {
    let path = ws.path(FILTERED);
    ws.input(&path)?;
    read_json(&path)
}

pub fn trends(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let rows = load_scores(ws)?;
    let filtered = load_filtered(ws)?;
    let inputs: Vec<TrendInput> = rows
        .iter()
        .map(|r| {
            let t = corpus
                .transcript(&r.doc_id)
                .ok_or_else(|| CliError::Runtime(format!("score for unknown document {}", r.doc_id)))?;
            let sentiment: Sentiment = r
                .sentiment
                .parse()
                .map_err(|_| CliError::Runtime(format!("{}: bad sentiment {:?}", r.sentence_id, r.sentiment)))?;
            Ok(TrendInput {
                sentence_id: r.sentence_id.clone(),
                month: YearMonth::of(t.call_date),
                sector: t.sector.clone(),
                sentiment,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let mut summary = BTreeMap::new();
    for (target, ids) in &filtered.targets {
        let set: BTreeSet<String> = ids.iter().cloned().collect();
        for &grouping in &config.trends.groupings {
            let points = negativity_trend(&set, &inputs, grouping);
            let name = match grouping {
                Grouping::Market => "market",
                Grouping::Sector => "sector",
            };
            ws.write_with(format!("{TRENDS_DIR}/{target}_{name}.csv"), |buf| Ok(write_trend_csv(&points, buf)?))?;
            summary.insert(format!("{target}_{name}"), points.len());
        }
    }
    Ok(json!({ "series_rows": summary }))
}

pub fn validate_sample(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let filtered = load_filtered(ws)?;
    let texts = sentence_texts(&corpus);
    let with_text: BTreeMap<FilterTarget, Vec<(String, String)>> = filtered
        .targets
        .iter()
        .map(|(&t, ids)| {
            let rows = ids
                .iter()
                .filter_map(|id| texts.get(id).map(|(_, text)| (id.clone(), text.clone())))
                .collect();
            (t, rows)
        })
        .collect();
    let v = &config.validate;
    let sample = validate_filter_sample(&with_text, v.size, config.seed_for(v.seed, tag::VALIDATE));
    ws.write_with(REVIEW_SAMPLE, |buf| Ok(sample.write_csv(buf)?))?;
    let mut out = json!({
        "rows": sample.rows.len(),
        "shortfalls": sample.shortfalls,
    });
    if let Some(review) = &config.paths.review {
        let accuracy = score_review(open(ws, review)?)?;
        ws.write_json(REVIEW_ACCURACY, &accuracy)?;
        out["accuracy"] = serde_json::to_value(&accuracy)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::file_slug;

    #[test]
    fn slugs() {
        assert_eq!(file_slug("p_Costs & Margins"), "p_Costs_Margins");
        assert_eq!(file_slug("s_Revenue"), "s_Revenue");
        assert_eq!(file_slug("p_Products & Services."), "p_Products_Services");
    }
}
