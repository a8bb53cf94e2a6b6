use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use earnings_distill::corpus::{ingest_transcripts, Corpus, SentenceSample};
use earnings_distill::embedding::{load_embeddings, EmbeddingCache, EmbeddingStore, MockEmbedder};
use earnings_distill::features::SentenceScore;
use earnings_distill::teacher::{endpoint_from_url, MockConfig, TeacherEndpoint};
use serde::{Deserialize, Serialize};

use crate::config::{tag, ProviderKind, RunConfig};
use crate::error::CliError;
use crate::workspace::Workspace;

pub const CORPUS: &str = "corpus.jsonl";
pub const CORPUS_COUNTS: &str = "corpus_counts.json";
pub const SAMPLE_DISCOVERY: &str = "samples/discovery.json";
pub const SAMPLE_LABEL: &str = "samples/label.json";
pub const DISCOVERED: &str = "topics/discovered.json";
pub const DISCOVERY_RESPONSES: &str = "topics/discovery_responses.jsonl";
pub const REDUCTION_LABELS: &str = "topics/reduction_labels.jsonl";
pub const TOPIC_STATS: &str = "topics/topic_stats.csv";
pub const TOPICS: &str = "topics/topics.json";
pub const REVIEW_SHEET: &str = "topics/review_sheet.csv";
pub const CLUSTER_REPORT: &str = "topics/cluster_report.json";
pub const LABEL_CHECKPOINT: &str = "labels/checkpoint";
pub const LABELS: &str = "labels/labels.jsonl";
pub const ATTRITION: &str = "labels/attrition.json";
pub const PRELIM_CHECKPOINT: &str = "labels/preliminary_checkpoint";
pub const PRELIM_SAMPLE: &str = "labels/preliminary_sample.json";
pub const PRELIM_LABELS: &str = "labels/preliminary_labels.jsonl";
pub const TOPIC_MODEL: &str = "models/topic.ckpt";
pub const TOPIC_SPLIT: &str = "models/topic_split_plan.json";
pub const TOPIC_SEARCH: &str = "models/topic_search.json";
pub const TOPIC_REPORT: &str = "models/topic_train_report.json";
pub const TOPIC_EVAL: &str = "models/topic_eval.json";
pub const SENTIMENT_MODEL: &str = "models/sentiment.ckpt";
pub const SENTIMENT_REPORT: &str = "models/sentiment_train_reports.json";
pub const SENTIMENT_EVAL: &str = "models/sentiment_eval.json";
pub const SCORES: &str = "scores/scores.jsonl";
pub const DOC_FEATURES: &str = "features/documents.jsonl";
pub const PANEL: &str = "features/panel.csv";
pub const TOPIC_DISTRIBUTION: &str = "features/topic_distribution.csv";
pub const IC_DIR: &str = "ic";
pub const IC_SUMMARY: &str = "ic/summary.json";
pub const FILTERED: &str = "filter/filtered.json";
pub const TRENDS_DIR: &str = "trends";
pub const REVIEW_SAMPLE: &str = "review/sample.csv";
pub const REVIEW_ACCURACY: &str = "review/accuracy.json";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicList {
    pub topics: Vec<String>,
}

/// One scored sentence as stored in `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sentence_id: String,
    pub doc_id: String,
    pub topic: String,
    pub sentiment: String,
    pub topic_distribution: Vec<f64>,
    pub sentiment_distribution: [f64; 3],
}

impl ScoreRow {
    pub fn to_score(&self) -> Result<SentenceScore, CliError> {
        Ok(SentenceScore::new(
            &self.sentence_id,
            self.topic_distribution.clone(),
            self.sentiment_distribution,
        )?)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

pub fn load_corpus(ws: &mut Workspace) -> Result<Corpus, CliError> {
    let path = ws.path(CORPUS);
    ws.input(&path)?;
    Ok(ingest_transcripts(&path)?)
}

pub fn load_sample(ws: &mut Workspace, rel: &str) -> Result<SentenceSample, CliError> {
    let path = ws.path(rel);
    ws.input(&path)?;
    read_json(&path)
}

pub fn load_topics(ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    let path = ws.path(TOPICS);
    ws.input(&path)?;
    Ok(read_json::<TopicList>(&path)?.topics)
}

pub fn load_scores(ws: &mut Workspace) -> Result<Vec<ScoreRow>, CliError> {
    let path = ws.path(SCORES);
    ws.input(&path)?;
    read_jsonl(&path)
}

pub fn teacher(config: &RunConfig, url: &str, mock: &MockConfig) -> Result<Box<dyn TeacherEndpoint>, CliError> {
    let t = &config.teacher;
    Ok(endpoint_from_url(url, &t.model, &t.token_env, t.timeout_secs, mock)?)
}

pub fn embedding_cache(config: &RunConfig, ws: &mut Workspace) -> Result<EmbeddingCache, CliError> {
    let e = &config.embedding;
    let seed = config.seed_for(e.seed, tag::EMBEDDING);
    let cache = match e.provider {
        ProviderKind::Mock => {
            let mock = MockEmbedder::new(e.dim, seed, e.mock_mode);
            EmbeddingCache::new(EmbeddingStore::new(e.dim, "mock"), Some(Box::new(mock)))
        }
        ProviderKind::File => {
            let path = config
                .paths
                .embeddings
                .as_ref()
                .ok_or_else(|| CliError::Config("paths.embeddings is required for the file provider".into()))?;
            ws.input(path)?;
            EmbeddingCache::offline(load_embeddings(path)?)
        }
        ProviderKind::Http => http_cache(config)?,
    };
    Ok(cache.with_concurrency(e.batch_size, e.max_in_flight))
}

#[cfg(feature = "http")]
fn http_cache(config: &RunConfig) -> Result<EmbeddingCache, CliError> {
    let e = &config.embedding;
    let url = e.url.as_deref().unwrap_or_default();
    let provider = earnings_distill::embedding::HttpEmbedder::new(url, e.dim, Duration::from_secs(e.timeout_secs));
    Ok(EmbeddingCache::new(EmbeddingStore::new(e.dim, url), Some(Box::new(provider))))
}

#[cfg(not(feature = "http"))]
fn http_cache(_config: &RunConfig) -> Result<EmbeddingCache, CliError> {
    let _ = Duration::ZERO;
    Err(CliError::Config("built without http support".into()))
}

/// Sentence id to (doc_id, text).
pub fn sentence_texts(corpus: &Corpus) -> BTreeMap<String, (String, String)> {
    corpus
        .sentences()
        .map(|s| (s.sentence_id.clone(), (s.doc_id.clone(), s.text.clone())))
        .collect()
}
