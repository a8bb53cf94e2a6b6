use std::collections::BTreeMap;
use std::path::Path;

use earnings_distill::corpus::sample_sentences_excluding;
use earnings_distill::distill::{
    evaluate_f1, final_retrain, make_split_plan, random_search, sentiment_dataset, stratified_split, topic_dataset,
    train_sentiment as fit_sentiment, LabeledData, SearchOptions, SentimentApproach, SentimentTrainPlan,
};
use earnings_distill::embedding::EmbeddingCache;
use earnings_distill::nn::{save_checkpoint, Averaging, Checkpoint, MlpModel, TrainOptions};
use earnings_distill::rng::derive_seed;
use earnings_distill::teacher::{label_dataset, read_labels, write_labels, LabelSource, LabeledSentence};
use earnings_distill::Corpus;
use serde::Serialize;
use serde_json::{json, Value};

use super::common::*;
use crate::config::{tag, RunConfig};
use crate::error::CliError;
use crate::workspace::Workspace;

#[derive(Debug, Serialize)]
struct Evaluation {
    set: String,
    n: usize,
    macro_f1: f64,
    micro_f1: f64,
    weighted_f1: f64,
}

fn evaluate(model: &MlpModel, set: &str, data: &LabeledData) -> Result<Option<Evaluation>, CliError> {
    if data.is_empty() {
        return Ok(None);
    }
    let f = |a| evaluate_f1(model, &data.data, a);
    Ok(Some(Evaluation {
        set: set.to_string(),
        n: data.len(),
        macro_f1: f(Averaging::Macro)?,
        micro_f1: f(Averaging::Micro)?,
        weighted_f1: f(Averaging::Weighted)?,
    }))
}

fn load_labels(ws: &mut Workspace, path: &Path) -> Result<Vec<LabeledSentence>, CliError> {
    ws.input(path)?;
    Ok(read_labels(path)?)
}

/// Split off the teacher holdout before any search or training.
fn holdout_split(config: &RunConfig, data: &LabeledData, seed: u64) -> (LabeledData, LabeledData) {
    let (train_ids, held_ids) = stratified_split(&data.items(), 1.0 - config.search.holdout_fraction, seed);
    (data.select(&data.rows_of(&train_ids)), data.select(&data.rows_of(&held_ids)))
}

fn save_model(ws: &mut Workspace, rel: &str, model: MlpModel, classes: &[String]) -> Result<String, CliError> {
    let checkpoint = Checkpoint {
        model,
        class_names: classes.to_vec(),
    };
    let path = ws.path(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    save_checkpoint(&checkpoint, &path)?;
    ws.record(rel);
    Ok(checkpoint.checksum())
}

fn benchmark_eval<F>(
    config: &RunConfig,
    ws: &mut Workspace,
    model: &MlpModel,
    build: F,
) -> Result<Option<Evaluation>, CliError>
where
    F: FnOnce(&[LabeledSentence]) -> Result<LabeledData, CliError>,
{
    let Some(path) = &config.paths.benchmark else {
        return Ok(None);
    };
    let labels = load_labels(ws, path)?;
    let data = build(&labels)?;
    evaluate(model, "benchmark", &data)
}

pub fn train_topic(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let topics = load_topics(ws)?;
    let labels = load_labels(ws, &ws.path(LABELS))?;
    let cache = embedding_cache(config, ws)?;
    let data = topic_dataset(&labels, &topics, &corpus, &cache)?;
    let s = &config.search;
    let split_seed = config.seed_for(s.split_seed, tag::SPLIT);
    let (pool, holdout) = holdout_split(config, &data, split_seed);
    let plan = make_split_plan(&pool.items(), derive_seed(split_seed, 1))?;
    let options = SearchOptions {
        trials: s.trials,
        seed: config.seed_for(s.search_seed, tag::SEARCH),
        patience: s.patience,
        max_epochs: s.max_epochs,
        averaging: s.averaging,
        parallel: s.parallel,
    };
    log::info!("searching {} configurations over {} labeled sentences", s.trials, pool.len());
    let search = random_search(&s.space, &pool, &plan, &options)?;
    let (model, report) = final_retrain(&search.best_config, &pool, derive_seed(split_seed, 2), &options)?;

    let mut evals = Vec::new();
    evals.extend(evaluate(&model, "teacher_holdout", &holdout)?);
    evals.extend(benchmark_eval(config, ws, &model, |b| Ok(topic_dataset(b, &topics, &corpus, &cache)?))?);
    let checksum = save_model(ws, TOPIC_MODEL, model, &topics)?;
    ws.write_json(TOPIC_SPLIT, &plan)?;
    ws.write_json(TOPIC_SEARCH, &search)?;
    ws.write_json(TOPIC_REPORT, &report)?;
    ws.write_json(TOPIC_EVAL, &evals)?;
    Ok(json!({
        "labeled": data.len(),
        "dropped": data.dropped,
        "holdout": holdout.len(),
        "best_trial": search.best_index,
        "best_config": search.best_config,
        "evaluations": evals,
        "model_checksum": checksum,
    }))
}

/// Preliminary-teacher labels on sentences outside the primary sample.
fn preliminary_labels(config: &RunConfig, ws: &mut Workspace, corpus: &Corpus) -> Result<Vec<LabeledSentence>, CliError> {
    let primary = load_sample(ws, SAMPLE_LABEL)?;
    let topics = if ws.path(TOPICS).exists() { load_topics(ws)? } else { vec!["Others".to_string()] };
    let s = &config.sentiment;
    let sample = sample_sentences_excluding(
        corpus,
        s.preliminary_fraction,
        config.seed_for(None, tag::PRELIMINARY_SAMPLE),
        Some(&primary),
    )?;
    let endpoint = teacher(config, &s.preliminary_endpoint, &s.preliminary_mock)?;
    let checkpoint = ws.path(PRELIM_CHECKPOINT);
    let run = label_dataset(corpus, &sample, &topics, endpoint.as_ref(), &config.teacher.policy, Some(&checkpoint))?;
    let labels: Vec<LabeledSentence> = run
        .labels
        .into_iter()
        .map(|l| LabeledSentence {
            source: LabelSource::PreliminaryTeacher,
            ..l
        })
        .collect();
    ws.write_json(PRELIM_SAMPLE, &sample)?;
    write_labels(&ws.path(PRELIM_LABELS), &labels)?;
    ws.record(PRELIM_LABELS);
    ws.record_dir(PRELIM_CHECKPOINT)?;
    Ok(labels)
}

pub fn train_sentiment(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let labels = load_labels(ws, &ws.path(LABELS))?;
    let cache: EmbeddingCache = embedding_cache(config, ws)?;
    let data = sentiment_dataset(&labels, &corpus, &cache)?;
    let s = &config.sentiment;
    let seed = config.seed_for(s.seed, tag::SENTIMENT);
    let (train_part, holdout) = holdout_split(config, &data, derive_seed(seed, 1));
    let pretrain = match s.approach {
        SentimentApproach::Direct => None,
        SentimentApproach::Transfer => {
            let prelim = preliminary_labels(config, ws, &corpus)?;
            Some(sentiment_dataset(&prelim, &corpus, &cache)?.data)
        }
    };
    let pretrain_size = pretrain.as_ref().map_or(0, |d| d.len());
    let plan = SentimentTrainPlan {
        approach: s.approach,
        pretrain,
        finetune: train_part.data.clone(),
    };
    let options = TrainOptions {
        patience: config.search.patience,
        max_epochs: config.search.max_epochs,
        seed: derive_seed(seed, 2),
        averaging: config.search.averaging,
        learning_rate: None,
    };
    let (model, reports) = fit_sentiment(&plan, &s.model, derive_seed(seed, 3), &options)?;
    let mut evals = Vec::new();
    evals.extend(evaluate(&model, "teacher_holdout", &holdout)?);
    evals.extend(benchmark_eval(config, ws, &model, |b| Ok(sentiment_dataset(b, &corpus, &cache)?))?);
    let class_counts: BTreeMap<&str, usize> = data.classes.iter().enumerate().fold(BTreeMap::new(), |mut m, (i, c)| {
        m.insert(c.as_str(), data.data.y.iter().filter(|&&y| y == i).count());
        m
    });
    let checksum = save_model(ws, SENTIMENT_MODEL, model, &data.classes)?;
    ws.write_json(SENTIMENT_REPORT, &reports)?;
    ws.write_json(SENTIMENT_EVAL, &evals)?;
    Ok(json!({
        "approach": s.approach,
        "labeled": data.len(),
        "class_counts": class_counts,
        "pretrain": pretrain_size,
        "holdout": holdout.len(),
        "evaluations": evals,
        "model_checksum": checksum,
    }))
}
