use earnings_distill::corpus::{ingest_transcripts, sample_sentences, sample_sentences_excluding};
use serde_json::{json, Value};

use super::common::*;
use crate::config::{tag, RunConfig};
use crate::error::CliError;
use crate::workspace::Workspace;

pub fn ingest(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    ws.input(&config.paths.corpus)?;
    let corpus = ingest_transcripts(&config.paths.corpus)?;
    let counts = corpus.counts();
    ws.write(CORPUS, corpus.to_jsonl()?.as_bytes())?;
    ws.write_json(CORPUS_COUNTS, &counts)?;
    log::info!("ingested {} documents, {} sentences", counts.documents, counts.sentences);
    Ok(json!({ "documents": counts.documents, "sentences": counts.sentences }))
}

/// The labeling sample is drawn from sentences outside the discovery sample.
pub fn sample(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let s = &config.sample;
    let discovery = sample_sentences(&corpus, s.discovery_fraction, config.seed_for(s.discovery_seed, tag::DISCOVERY_SAMPLE))?;
    let label = sample_sentences_excluding(
        &corpus,
        s.label_fraction,
        config.seed_for(s.label_seed, tag::LABEL_SAMPLE),
        Some(&discovery),
    )?;
    ws.write_json(SAMPLE_DISCOVERY, &discovery)?;
    ws.write_json(SAMPLE_LABEL, &label)?;
    Ok(json!({ "discovery": discovery.len(), "label": label.len() }))
}
