//! A bundle of the analysis outputs that is a pure function of the files it
//! reads: no timings, no timestamps.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::common::*;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::workspace::{sha256_file, Workspace};

const MODEL_EVALS: [(&str, &str, &str); 2] = [
    ("topic", TOPIC_EVAL, TOPIC_MODEL),
    ("sentiment", SENTIMENT_EVAL, SENTIMENT_MODEL),
];

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

pub fn check_inputs(out: &Path) -> Result<(), CliError> {
    let any = out.join(TOPIC_DISTRIBUTION).exists()
        || !csv_files(&out.join(IC_DIR)).is_empty()
        || !csv_files(&out.join(TRENDS_DIR)).is_empty()
        || MODEL_EVALS.iter().any(|(_, e, _)| out.join(e).exists());
    if any {
        Ok(())
    } else {
        Err(CliError::NothingToReport(out.to_path_buf()))
    }
}

/// Concatenate CSV files with identical headers, prefixing every row with
/// the file stem under `key`.
fn long_format(ws: &mut Workspace, files: &[PathBuf], key: &str) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Option<csv::StringRecord> = None;
    for path in files {
        ws.input(path)?;
        let mut r = csv::Reader::from_path(path)?;
        let h = r.headers()?.clone();
        match &header {
            None => {
                let mut full = csv::StringRecord::from(vec![key]);
                full.extend(h.iter());
                w.write_record(&full)?;
                header = Some(h);
            }
            Some(first) if *first != h => {
                return Err(CliError::Runtime(format!("{}: unexpected header", path.display())));
            }
            Some(_) => {}
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        for rec in r.records() {
            let rec = rec?;
            let mut full = csv::StringRecord::from(vec![stem.as_str()]);
            full.extend(rec.iter());
            w.write_record(&full)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn report(_config: &RunConfig, ws: &mut Workspace) -> Result<Value, CliError> {
    let mut sections = Map::new();
    let src = |ws: &Workspace, rel: &str| -> Result<Value, CliError> {
        let (sha256, bytes) = sha256_file(&ws.path(rel))?;
        Ok(json!({ "source": rel, "sha256": sha256, "bytes": bytes }))
    };

    if ws.path(TOPIC_DISTRIBUTION).exists() {
        let path = ws.path(TOPIC_DISTRIBUTION);
        ws.input(&path)?;
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        ws.write(format!("{REPORT_DIR}/topic_distribution.csv"), &bytes)?;
        sections.insert("topic_distribution".into(), src(ws, TOPIC_DISTRIBUTION)?);
    }

    let ic_files = csv_files(&ws.path(IC_DIR));
    if !ic_files.is_empty() {
        let bytes = long_format(ws, &ic_files, "column")?;
        ws.write(format!("{REPORT_DIR}/ic.csv"), &bytes)?;
        let mut ic = json!({ "columns": ic_files.len() });
        if ws.path(IC_SUMMARY).exists() {
            let path = ws.path(IC_SUMMARY);
            ws.input(&path)?;
            ic["summary"] = read_json(&path)?;
        }
        sections.insert("ic".into(), ic);
    }

    let trend_files = csv_files(&ws.path(TRENDS_DIR));
    if !trend_files.is_empty() {
        let bytes = long_format(ws, &trend_files, "series")?;
        ws.write(format!("{REPORT_DIR}/trends.csv"), &bytes)?;
        sections.insert("trends".into(), json!({ "series": trend_files.len() }));
    }

    let mut evals = csv::Writer::from_writer(Vec::new());
    evals.write_record(["model", "set", "n", "macro_f1", "micro_f1", "weighted_f1", "checkpoint_sha256"])?;
    let mut models = Map::new();
    for (name, eval_rel, ckpt_rel) in MODEL_EVALS {
        let eval_path = ws.path(eval_rel);
        if !eval_path.exists() {
            continue;
        }
        ws.input(&eval_path)?;
        let rows: Vec<Value> = read_json(&eval_path)?;
        let ckpt = ws.path(ckpt_rel);
        let checksum = if ckpt.exists() { sha256_file(&ckpt)?.0 } else { String::new() };
        for r in &rows {
            let field = |k: &str| r.get(k).map(|v| v.to_string().trim_matches('"').to_string()).unwrap_or_default();
            evals.write_record([
                name.to_string(),
                field("set"),
                field("n"),
                field("macro_f1"),
                field("micro_f1"),
                field("weighted_f1"),
                checksum.clone(),
            ])?;
        }
        models.insert(name.into(), json!({ "evaluations": rows, "checkpoint_sha256": checksum }));
    }
    if !models.is_empty() {
        let bytes = evals.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        ws.write(format!("{REPORT_DIR}/model_evals.csv"), &bytes)?;
        sections.insert("models".into(), Value::Object(models));
    }

    let report = json!({ "tool_version": env!("CARGO_PKG_VERSION"), "sections": sections });
    ws.write_json(format!("{REPORT_DIR}/report.json"), &report)?;
    Ok(json!({ "sections": sections.keys().collect::<Vec<_>>() }))
}
