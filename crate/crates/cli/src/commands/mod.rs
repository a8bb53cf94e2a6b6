mod analytics;
pub mod common;
mod corpus;
mod label;
mod report;
mod score;
mod topics;
mod train;

use std::path::PathBuf;
use std::time::Instant;

use clap::Subcommand;
use serde_json::Value;

use crate::config::{ProviderKind, RunConfig};
use crate::error::CliError;
use crate::workspace::{OutputLock, Workspace};
use common::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Read transcript records and write the normalized corpus.
    Ingest,
    /// Draw the discovery and labeling sentence samples.
    Sample,
    /// Ask the teacher for candidate topics over the discovery sample.
    DiscoverTopics,
    /// Reduce the discovered topics to the final label set.
    ReduceTopics,
    /// Label the training sample with topics and sentiment.
    Label,
    /// Random search and final retrain of the topic classifier.
    TrainTopic,
    /// Train the sentiment classifier.
    TrainSentiment,
    /// Score every corpus sentence with both classifiers.
    Score,
    /// Per-call propensity and sentiment, aggregated by company and month.
    Features,
    /// Cumulative information coefficient of panel columns.
    Ic,
    /// Select sentences per earnings/revenue outlook/trailing target.
    Filter,
    /// Monthly negativity of filtered sentences.
    Trends,
    /// Draw a review sample of filtered sentences; score a completed sheet.
    ValidateSample,
    /// Bundle topic distribution, IC, trends and model evaluations.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Sample => "sample",
            Command::DiscoverTopics => "discover-topics",
            Command::ReduceTopics => "reduce-topics",
            Command::Label => "label",
            Command::TrainTopic => "train-topic",
            Command::TrainSentiment => "train-sentiment",
            Command::Score => "score",
            Command::Features => "features",
            Command::Ic => "ic",
            Command::Filter => "filter",
            Command::Trends => "trends",
            Command::ValidateSample => "validate-sample",
            Command::Report => "report",
        }
    }

    /// Files that must exist before the subcommand may touch the output
    /// directory.
    fn requirements(self, config: &RunConfig) -> Vec<(String, PathBuf)> {
        let out = |rel: &str| (format!("artifact {rel}"), config.paths.out.join(rel));
        let mut req = match self {
            Command::Ingest => vec![("paths.corpus".to_string(), config.paths.corpus.clone())],
            Command::Sample => vec![out(CORPUS)],
            Command::DiscoverTopics => vec![out(CORPUS), out(SAMPLE_DISCOVERY)],
            Command::ReduceTopics => vec![out(CORPUS), out(SAMPLE_DISCOVERY), out(DISCOVERED)],
            Command::Label => vec![out(CORPUS), out(SAMPLE_LABEL), out(TOPICS)],
            Command::TrainTopic => vec![out(CORPUS), out(TOPICS), out(LABELS)],
            Command::TrainSentiment => vec![out(CORPUS), out(LABELS), out(SAMPLE_LABEL)],
            Command::Score => vec![out(CORPUS), out(TOPIC_MODEL), out(SENTIMENT_MODEL)],
            Command::Features => vec![out(CORPUS), out(TOPICS), out(SCORES)],
            Command::Ic => vec![out(PANEL)],
            Command::Filter => vec![out(TOPICS), out(SCORES)],
            Command::Trends => vec![out(CORPUS), out(SCORES), out(FILTERED)],
            Command::ValidateSample => vec![out(CORPUS), out(FILTERED)],
            Command::Report => Vec::new(),
        };
        let needs_embeddings = matches!(self, Command::TrainTopic | Command::TrainSentiment | Command::Score)
            || (self == Command::ReduceTopics && config.reduction.method == crate::config::ReductionMethod::Clustering);
        if needs_embeddings && config.embedding.provider == ProviderKind::File {
            if let Some(p) = &config.paths.embeddings {
                req.push(("paths.embeddings".into(), p.clone()));
            }
        }
        if self == Command::Ic {
            if let Some(p) = &config.paths.returns {
                req.push(("paths.returns".into(), p.clone()));
            }
        }
        if self == Command::ValidateSample {
            if let Some(p) = &config.paths.review {
                req.push(("paths.review".into(), p.clone()));
            }
        }
        if self == Command::TrainTopic || self == Command::TrainSentiment {
            if let Some(p) = &config.paths.benchmark {
                req.push(("paths.benchmark".into(), p.clone()));
            }
        }
        req
    }

    fn validate(self, config: &RunConfig) -> Result<(), CliError> {
        config.validate()?;
        if self == Command::Ic && config.paths.returns.is_none() {
            return Err(CliError::Config("paths.returns is required for ic".into()));
        }
        let needs_embeddings = matches!(self, Command::TrainTopic | Command::TrainSentiment | Command::Score);
        if needs_embeddings && config.embedding.provider == ProviderKind::File && config.paths.embeddings.is_none() {
            return Err(CliError::Config("paths.embeddings is required for the file provider".into()));
        }
        for (what, path) in self.requirements(config) {
            if !path.exists() {
                return Err(CliError::MissingInput { what, path });
            }
        }
        if self == Command::Report {
            report::check_inputs(&config.paths.out)?;
        }
        Ok(())
    }

    /// Validate, lock the output directory, run, and write the manifest.
    pub fn run(self, config: &RunConfig) -> Result<Value, CliError> {
        self.validate(config)?;
        let started_at = chrono::Utc::now();
        let clock = Instant::now();
        let _lock = OutputLock::acquire(&config.paths.out)?;
        let mut ws = Workspace::new(&config.paths.out);
        let summary = match self {
            Command::Ingest => corpus::ingest(config, &mut ws)?,
            Command::Sample => corpus::sample(config, &mut ws)?,
            Command::DiscoverTopics => topics::discover(config, &mut ws)?,
            Command::ReduceTopics => topics::reduce(config, &mut ws)?,
            Command::Label => label::label(config, &mut ws)?,
            Command::TrainTopic => train::train_topic(config, &mut ws)?,
            Command::TrainSentiment => train::train_sentiment(config, &mut ws)?,
            Command::Score => score::score(config, &mut ws)?,
            Command::Features => score::features(config, &mut ws)?,
            Command::Ic => analytics::ic(config, &mut ws)?,
            Command::Filter => analytics::filter(config, &mut ws)?,
            Command::Trends => analytics::trends(config, &mut ws)?,
            Command::ValidateSample => analytics::validate_sample(config, &mut ws)?,
            Command::Report => report::report(config, &mut ws)?,
        };
        ws.finish(self.name(), config, started_at, clock, summary.clone())?;
        Ok(summary)
    }
}
