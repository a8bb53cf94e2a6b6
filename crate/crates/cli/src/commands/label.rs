use std::fs;

use earnings_distill::teacher::{label_dataset, write_labels};
use serde_json::{json, Value};

use super::common::*;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::workspace::Workspace;

/// Progress is checkpointed below `labels/checkpoint`, so a failed run can be
/// resumed by running the subcommand again with the same configuration.
pub fn label(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let sample = load_sample(ws, SAMPLE_LABEL)?;
    let topics = load_topics(ws)?;
    let endpoint = teacher(config, &config.teacher.endpoint, &config.teacher.mock)?;
    let checkpoint = ws.path(LABEL_CHECKPOINT);
    let run = label_dataset(&corpus, &sample, &topics, endpoint.as_ref(), &config.teacher.policy, Some(&checkpoint));
    let run = match run {
        Ok(run) => run,
        Err(e) => {
            log::error!("labeling stopped; progress kept in {}", checkpoint.display());
            return Err(e.into());
        }
    };
    let labels_path = ws.path(LABELS);
    if let Some(parent) = labels_path.parent() {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    write_labels(&labels_path, &run.labels)?;
    ws.record(LABELS);
    ws.record_dir(LABEL_CHECKPOINT)?;
    ws.write_json(ATTRITION, &run.report)?;
    let r = &run.report;
    log::info!(
        "requested {}, retained {}, discarded {} (format) + {} (unknown topic)",
        r.requested,
        r.well_formed,
        r.discarded_format,
        r.discarded_unknown_topic
    );
    Ok(json!({ "attrition": run.report, "consistent": run.report.is_consistent() }))
}
