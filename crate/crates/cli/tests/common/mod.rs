#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use earnings_distill::analytics::write_returns_csv;
use earnings_distill::synthetic::{returns, transcripts, CorpusSpec};
use earnings_distill::Corpus;
use sha2::{Digest, Sha256};

pub const BIN: &str = env!("CARGO_BIN_EXE_edistill");
pub const BASE_TOML: &str = include_str!("../../examples/synth_run.toml");

pub const PIPELINE: [&str; 14] = [
    "ingest",
    "sample",
    "discover-topics",
    "reduce-topics",
    "label",
    "train-topic",
    "train-sentiment",
    "score",
    "features",
    "ic",
    "filter",
    "trends",
    "validate-sample",
    "report",
];

/// Synthetic transcripts and returns plus `run.toml` (the example config
/// followed by `extra`, which may override whole tables).
pub fn setup(dir: &Path, extra: &str) -> PathBuf {
    let spec = CorpusSpec {
        companies: 12,
        months: 8,
        sentences_per_call: 20,
        seed: 5,
        ..CorpusSpec::default()
    };
    let corpus = Corpus::new(transcripts(&spec)).unwrap();
    std::fs::write(dir.join("transcripts.jsonl"), corpus.to_jsonl().unwrap()).unwrap();
    let f = std::fs::File::create(dir.join("returns.csv")).unwrap();
    write_returns_csv(&returns(&spec, 0.02), f).unwrap();
    let config = dir.join("run.toml");
    std::fs::write(&config, patch_toml(BASE_TOML, extra)).unwrap();
    config
}

/// Merge `extra` into `base` key by key.
pub fn patch_toml(base: &str, extra: &str) -> String {
    let mut doc: toml::Table = base.parse().unwrap();
    let extra: toml::Table = extra.parse().unwrap();
    merge(&mut doc, extra);
    toml::to_string(&doc).unwrap()
}

fn merge(dst: &mut toml::Table, src: toml::Table) {
    for (k, v) in src {
        match (dst.get_mut(&k), v) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s),
            (_, v) => {
                dst.insert(k, v);
            }
        }
    }
}

pub fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--config")
        .arg(config)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn run_ok(config: &Path, args: &[&str]) -> serde_json::Value {
    let o = run(config, args);
    assert_eq!(code(&o), 0, "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

/// sha256 of every file below `dir`, excluding run manifests and the lock.
pub fn tree_checksums(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        if rel == "manifests" || rel == ".lock" {
            continue;
        }
        if p.is_dir() {
            walk(root, &p, out);
        } else {
            let digest = Sha256::digest(std::fs::read(&p).unwrap());
            out.insert(rel, digest.iter().map(|b| format!("{b:02x}")).collect());
        }
    }
}
