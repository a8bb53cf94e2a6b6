use earnings_distill::teacher::{discover_topics, label_dataset, RetryPolicy};
use earnings_distill::topics::{
    export_review_sheet, reduce_by_clustering, reduce_by_coverage, reduce_by_threshold, topic_stats,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::common::*;
use crate::config::{tag, ReductionMethod, RunConfig};
use crate::error::CliError;
use crate::workspace::Workspace;

#[derive(Debug, Serialize, Deserialize)]
struct Discovered {
    topics: Vec<String>,
    malformed_responses: usize,
}

pub fn discover(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let sample = load_sample(ws, SAMPLE_DISCOVERY)?;
    let endpoint = teacher(config, &config.teacher.endpoint, &config.teacher.mock)?;
    let run = discover_topics(&corpus, &sample, endpoint.as_ref(), &config.teacher.policy)?;
    ws.write(DISCOVERY_RESPONSES, &jsonl_bytes(&run.responses)?)?;
    ws.write_json(
        DISCOVERED,
        &Discovered {
            topics: run.topics.clone(),
            malformed_responses: run.malformed_responses,
        },
    )?;
    log::info!("teacher proposed {} topics", run.topics.len());
    Ok(json!({ "topics": run.topics.len(), "malformed_responses": run.malformed_responses }))
}

/// Topic counts come from classifying the discovery sample against the full
/// discovered list; the reduction then works on those counts.
pub fn reduce(config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let corpus = load_corpus(ws)?;
    let sample = load_sample(ws, SAMPLE_DISCOVERY)?;
    let discovered_path = ws.path(DISCOVERED);
    ws.input(&discovered_path)?;
    let discovered: Discovered = read_json(&discovered_path)?;
    if discovered.topics.is_empty() {
        return Err(CliError::Runtime("the teacher proposed no topics".into()));
    }
    let endpoint = teacher(config, &config.teacher.endpoint, &config.teacher.mock)?;
    let policy = RetryPolicy {
        with_sentiment: false,
        ..config.teacher.policy.clone()
    };
    let run = label_dataset(&corpus, &sample, &discovered.topics, endpoint.as_ref(), &policy, None)?;
    ws.write(REDUCTION_LABELS, &jsonl_bytes(&run.labels)?)?;
    let stats = topic_stats(&run.labels, &discovered.topics);
    ws.write_with(TOPIC_STATS, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        for s in &stats {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(())
    })?;

    let r = &config.reduction;
    let seed = config.seed_for(r.seed, tag::REDUCTION);
    let kept = match r.method {
        ReductionMethod::Threshold => reduce_by_threshold(&stats, r.threshold)?,
        ReductionMethod::Coverage => reduce_by_coverage(&stats, r.coverage)?,
        ReductionMethod::Clustering => {
            let cache = embedding_cache(config, ws)?;
            let lookup = |t: &str| cache.get_embedding(t).ok().map(|v| v.to_f64());
            let (kept, report) = reduce_by_clustering(&stats, lookup, r.k.min(stats.len()), seed)?;
            ws.write_json(CLUSTER_REPORT, &report)?;
            kept
        }
    };
    ws.write_with(REVIEW_SHEET, |buf| {
        export_review_sheet(buf, &stats, &run.labels, &corpus, r.review_per_topic, seed)?;
        Ok(())
    })?;
    ws.write_json(TOPICS, &TopicList { topics: kept.clone() })?;
    log::info!("kept {} of {} topics", kept.len(), discovered.topics.len());
    Ok(json!({
        "method": r.method,
        "discovered": discovered.topics.len(),
        "kept": kept,
        "attrition": run.report,
    }))
}
