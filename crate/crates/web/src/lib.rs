//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns plain values (numbers, slices, strings)
//! and reports results as JSON text, so the same functions run natively in
//! tests. Errors become JavaScript exceptions.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use earnings_distill::analytics::{cumulative_ic, IcMethod};
use earnings_distill::corpus::split_sentences;
use earnings_distill::features::{
    document_features, monthly_aggregate, FeatureOptions, PropensityMode, SentenceScore, SentimentMode, YearMonth,
};
use earnings_distill::rng::{derive_seed, seeded};
use earnings_distill::synthetic::{self, CorpusSpec, BASE_TOPICS};
use earnings_distill::teacher::{MockConfig, MockTeacher};
use earnings_distill::topics::{elbow_curve, kmeans, KMeansOptions};
use earnings_distill::Corpus;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

pub type DemoResult = Result<String, String>;

fn js(r: DemoResult) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn to_json<T: Serialize>(v: &T) -> DemoResult {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn rows(points: &[f64], dim: usize) -> Result<Vec<Vec<f64>>, String> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(format!("{} values do not form {dim}-dimensional points", points.len()));
    }
    Ok(points.chunks(dim).map(<[f64]>::to_vec).collect())
}

/// `k` Gaussian blobs of `per_blob` 2-D points, flattened as x0, y0, x1, ...
pub fn blob_points(per_blob: usize, k: usize, spread: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let mut out = Vec::with_capacity(per_blob * k * 2);
    let centers: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)))
        .collect();
    for &(cx, cy) in &centers {
        for _ in 0..per_blob {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            out.push(cx + spread * dx);
            out.push(cy + spread * dy);
        }
    }
    out
}

pub fn kmeans_json(points: &[f64], dim: usize, k: usize, seed: u64) -> DemoResult {
    let vectors = rows(points, dim)?;
    let c = kmeans(&vectors, k, seed, KMeansOptions::default()).map_err(|e| e.to_string())?;
    to_json(&c)
}

pub fn elbow_json(points: &[f64], dim: usize, k_max: usize, seed: u64) -> DemoResult {
    let vectors = rows(points, dim)?;
    let curve = elbow_curve(&vectors, 1..=k_max.min(vectors.len()), seed).map_err(|e| e.to_string())?;
    to_json(&curve)
}

/// Rule-based stand-in for the trained classifiers: the mock teacher's
/// keyword topics and the lexicon sentiment, as one-hot scores.
fn hard_scores(texts: &[(String, String)], topics: &[String]) -> Vec<SentenceScore> {
    let teacher = MockTeacher::new(MockConfig::default());
    texts
        .iter()
        .map(|(id, text)| {
            let (topic, sentiment) = teacher.answer(text, topics);
            let k = topics.iter().position(|t| *t == topic).unwrap_or(topics.len() - 1);
            SentenceScore::hard(id, k, topics.len(), sentiment)
        })
        .collect()
}

fn base_topics() -> Vec<String> {
    BASE_TOPICS.iter().map(|s| s.to_string()).collect()
}

fn feature_options(literal: bool) -> FeatureOptions {
    FeatureOptions {
        propensity: PropensityMode::Hard,
        sentiment: if literal { SentimentMode::Literal } else { SentimentMode::TopicRestricted },
        hard_sentiment: true,
    }
}

/// Split a transcript, label each sentence and compute the call's topic
/// propensity and topic sentiment.
pub fn analyze_json(text: &str, literal_sentiment: bool) -> DemoResult {
    let topics = base_topics();
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return Err("no sentences found".into());
    }
    let ids: Vec<(String, String)> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("s{i:04}"), s.clone()))
        .collect();
    let scores = hard_scores(&ids, &topics);
    let month = YearMonth::of(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap());
    let doc = document_features("call", "demo", month, &scores, &topics, &feature_options(literal_sentiment))
        .map_err(|e| e.to_string())?;
    let labeled: Vec<_> = sentences
        .iter()
        .zip(&scores)
        .map(|(s, sc)| json!({ "text": s, "topic": topics[sc.predicted_topic], "sentiment": sc.predicted_sentiment }))
        .collect();
    to_json(&json!({
        "sentences": labeled,
        "propensity": doc.propensity,
        "sentiment": doc.sentiment,
    }))
}

/// Cumulative IC of one feature column of a synthetic panel against forward
/// sector-neutral returns. `column` is `p_<topic>` or `s_<topic>`; an empty
/// column returns only the list of available columns.
pub fn ic_curve_json(
    companies: usize,
    months: usize,
    signal: f64,
    seed: u64,
    column: &str,
    spearman: bool,
    min_obs: usize,
) -> DemoResult {
    let topics = base_topics();
    let columns: Vec<String> = topics
        .iter()
        .map(|t| format!("s_{t}"))
        .chain(topics.iter().map(|t| format!("p_{t}")))
        .collect();
    if column.is_empty() {
        return to_json(&json!({ "columns": columns }));
    }
    let spec = CorpusSpec {
        companies,
        months,
        sentences_per_call: 30,
        seed: derive_seed(seed, 1),
        ..CorpusSpec::default()
    };
    let corpus = Corpus::new(synthetic::transcripts(&spec)).map_err(|e| e.to_string())?;
    let options = feature_options(false);
    let mut docs = Vec::new();
    for t in corpus.transcripts() {
        let ids: Vec<(String, String)> = t.sentences.iter().map(|s| (s.sentence_id.clone(), s.text.clone())).collect();
        let scores = hard_scores(&ids, &topics);
        docs.push(
            document_features(&t.doc_id, &t.company_id, YearMonth::of(t.call_date), &scores, &topics, &options)
                .map_err(|e| e.to_string())?,
        );
    }
    let panel = monthly_aggregate(&docs);
    let returns = synthetic::returns(&spec, signal);
    let method = if spearman { IcMethod::Spearman } else { IcMethod::Pearson };
    let series = cumulative_ic(&panel, column, &returns, 1, method, min_obs).map_err(|e| e.to_string())?;
    let points: Vec<BTreeMap<&str, serde_json::Value>> = series
        .points
        .iter()
        .map(|p| {
            BTreeMap::from([
                ("month", json!(p.month.to_string())),
                ("ic", json!(p.ic)),
                ("cumulative", json!(p.cumulative)),
                ("n_obs", json!(p.n_obs)),
            ])
        })
        .collect();
    to_json(&json!({ "columns": columns, "column": column, "points": points }))
}

#[wasm_bindgen(js_name = blobPoints)]
pub fn blob_points_js(per_blob: usize, k: usize, spread: f64, seed: u32) -> Vec<f64> {
    blob_points(per_blob, k, spread, seed as u64)
}

#[wasm_bindgen(js_name = kmeans)]
pub fn kmeans_js(points: &[f64], dim: usize, k: usize, seed: u32) -> Result<String, JsValue> {
    js(kmeans_json(points, dim, k, seed as u64))
}

#[wasm_bindgen(js_name = elbow)]
pub fn elbow_js(points: &[f64], dim: usize, k_max: usize, seed: u32) -> Result<String, JsValue> {
    js(elbow_json(points, dim, k_max, seed as u64))
}

#[wasm_bindgen(js_name = analyzeTranscript)]
pub fn analyze_js(text: &str, literal_sentiment: bool) -> Result<String, JsValue> {
    js(analyze_json(text, literal_sentiment))
}

#[wasm_bindgen(js_name = icCurve)]
pub fn ic_curve_js(
    companies: usize,
    months: usize,
    signal: f64,
    seed: u32,
    column: &str,
    spearman: bool,
    min_obs: usize,
) -> Result<String, JsValue> {
    js(ic_curve_json(companies, months, signal, seed as u64, column, spearman, min_obs))
}
