use std::collections::BTreeMap;

use earnings_distill::distill::embedding_matrix;
use earnings_distill::features::{
    document_features, monthly_aggregate, topic_distribution_summary, write_panel_csv, DocumentFeatures,
    SentenceScore, YearMonth,
};
use earnings_distill::nn::{load_checkpoint, Checkpoint};
use serde_json::{json, Value};

use super::common::*;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::workspace::Workspace;

/// Sentences embedded and scored per batch.
const SCORE_CHUNK: usize = 4096;

fn load_model(ws: &mut Workspace, rel: &str) -> Result<Checkpoint, CliError> {
    let path = ws.path(rel);
    ws.input(&path)?;
    Ok(load_checkpoint(&path)?)
}

pub fn score(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let topic = load_model(ws, TOPIC_MODEL)?;
    let sentiment = load_model(ws, SENTIMENT_MODEL)?;
    if sentiment.class_names.len() != 3 {
        return Err(CliError::Runtime(format!(
            "sentiment checkpoint has {} classes, expected 3",
            sentiment.class_names.len()
        )));
    }
    let cache = embedding_cache(config, ws)?;
    for (name, c) in [("topic", &topic), ("sentiment", &sentiment)] {
        if c.model.input_dim != cache.dim() {
            return Err(CliError::Runtime(format!(
                "{name} model expects {}-dimensional embeddings, provider gives {}",
                c.model.input_dim,
                cache.dim()
            )));
        }
    }
    let sentences: Vec<_> = corpus.sentences().collect();
    let mut rows = Vec::with_capacity(sentences.len());
    for chunk in sentences.chunks(SCORE_CHUNK) {
        let texts: Vec<String> = chunk.iter().map(|s| s.text.clone()).collect();
        let x = embedding_matrix(&cache, &texts)?;
        let pt = topic.model.predict_proba(x.view())?;
        let ps = sentiment.model.predict_proba(x.view())?;
        for (i, s) in chunk.iter().enumerate() {
            let sd = [ps[[i, 0]], ps[[i, 1]], ps[[i, 2]]];
            let score = SentenceScore::new(&s.sentence_id, pt.row(i).to_vec(), sd)?;
            rows.push(ScoreRow {
                sentence_id: s.sentence_id.clone(),
                doc_id: s.doc_id.clone(),
                topic: topic.class_names[score.predicted_topic].clone(),
                sentiment: score.predicted_sentiment.to_string(),
                topic_distribution: score.topic_distribution,
                sentiment_distribution: score.sentiment_distribution,
            });
        }
        log::debug!("scored {} of {} sentences", rows.len(), sentences.len());
    }
    ws.write(SCORES, &jsonl_bytes(&rows)?)?;
    let mut topic_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut sentiment_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        *topic_counts.entry(&r.topic).or_default() += 1;
        *sentiment_counts.entry(&r.sentiment).or_default() += 1;
    }
    Ok(json!({
        "sentences": rows.len(),
        "topic_counts": topic_counts,
        "sentiment_counts": sentiment_counts,
    }))
}

pub fn features(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let topics = load_topics(ws)?;
    let rows = load_scores(ws)?;
    let options = config.features.options();
    let mut by_doc: BTreeMap<&str, Vec<SentenceScore>> = BTreeMap::new();
    let mut all = Vec::with_capacity(rows.len());
    for r in &rows {
        let s = r.to_score()?;
        if s.topic_distribution.len() != topics.len() {
            return Err(CliError::Runtime(format!(
                "{} has {} topic likelihoods for {} topics",
                r.sentence_id,
                s.topic_distribution.len(),
                topics.len()
            )));
        }
        by_doc.entry(&r.doc_id).or_default().push(s.clone());
        all.push(s);
    }
    let mut docs: Vec<DocumentFeatures> = Vec::with_capacity(by_doc.len());
    let mut unscored = 0;
    for t in corpus.transcripts() {
        let Some(scores) = by_doc.get(t.doc_id.as_str()) else {
            unscored += 1;
            continue;
        };
        let month = YearMonth::of(t.call_date);
        docs.push(document_features(&t.doc_id, &t.company_id, month, scores, &topics, &options)?);
    }
    if unscored > 0 {
        log::warn!("{unscored} transcripts have no scored sentences");
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let panel = monthly_aggregate(&docs);
    ws.write(DOC_FEATURES, &jsonl_bytes(&docs)?)?;
    ws.write_with(PANEL, |buf| Ok(write_panel_csv(&panel, buf)?))?;
    let summary = topic_distribution_summary(&all, &topics);
    ws.write_with(TOPIC_DISTRIBUTION, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["topic", "sentences", "share", "mean_net_sentiment"])?;
        for (topic, n, mean) in &summary {
            let share = if all.is_empty() { 0.0 } else { *n as f64 / all.len() as f64 };
            w.write_record([topic.clone(), n.to_string(), share.to_string(), mean.to_string()])?;
        }
        w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(())
    })?;
    Ok(json!({
        "documents": docs.len(),
        "unscored_documents": unscored,
        "panel_rows": panel.rows.len(),
        "months": panel.months().len(),
        "options": options,
    }))
}
