mod common;

use common::*;
use earnings_distill_cli::workspace::RunManifest;

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    assert_eq!(code(&run(&config, &["no-such-stage"])), 64);
    assert_eq!(code(&run(&config, &[])), 64);
    assert_eq!(code(&run(&config, &["--help"])), 0);
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "[sample]\nlabel_fraction = 2.0\n");
    assert_eq!(code(&run(&config, &["ingest"])), 1);
    std::fs::write(&config, "version = 1\nnot_a_key = 3\n").unwrap();
    assert_eq!(code(&run(&config, &["ingest"])), 1);
    assert_eq!(code(&run(&dir.path().join("missing.toml"), &["ingest"])), 1);
}

#[test]
fn missing_inputs_fail_before_touching_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(
        dir.path(),
        "[embedding]\nprovider = \"file\"\n[paths]\nembeddings = \"nowhere.emb\"\n",
    );
    let o = run(&config, &["train-topic"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("out").exists());
    run_ok(&config, &["ingest"]);
    let o = run(&config, &["train-topic"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing input"));
}

#[test]
fn report_with_nothing_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    run_ok(&config, &["ingest"]);
    let o = run(&config, &["report"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nothing to report"));
}

#[test]
fn locked_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    run_ok(&config, &["ingest"]);
    std::fs::write(dir.path().join("out/.lock"), "1").unwrap();
    assert_eq!(code(&run(&config, &["sample"])), 2);
    std::fs::remove_file(dir.path().join("out/.lock")).unwrap();
    run_ok(&config, &["sample"]);
    assert!(!dir.path().join("out/.lock").exists());
}

#[test]
fn interrupted_labeling_resumes_to_the_same_labels() {
    let fast = "[teacher.policy]\nbase_delay_ms = 1\nmax_delay_ms = 2\nmax_retries = 1\n";
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), fast);
    for c in ["ingest", "sample", "discover-topics", "reduce-topics"] {
        run_ok(&config, &[c]);
    }
    let reference = run_ok(&config, &["label"]);
    let labels = std::fs::read(dir.path().join("out/labels/labels.jsonl")).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    let broken = setup(dir2.path(), &format!("{fast}[teacher.mock]\nfail_from_ordinal = 200\n"));
    for c in ["ingest", "sample", "discover-topics", "reduce-topics"] {
        run_ok(&broken, &[c]);
    }
    let o = run(&broken, &["label"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let cursor: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir2.path().join("out/labels/checkpoint/cursor.json")).unwrap())
            .unwrap();
    assert!(cursor["next_batch"].as_u64().unwrap() > 0);
    assert!(!dir2.path().join("out/labels/labels.jsonl").exists());
    assert!(!dir2.path().join("out/.lock").exists());

    let healed = setup(dir2.path(), fast);
    let resumed = run_ok(&healed, &["label"]);
    assert_eq!(resumed["attrition"], reference["attrition"]);
    assert_eq!(std::fs::read(dir2.path().join("out/labels/labels.jsonl")).unwrap(), labels);
}

#[test]
fn unreachable_teacher_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(
        dir.path(),
        "[teacher.policy]\nbase_delay_ms = 1\nmax_retries = 0\n[teacher.mock]\nunreachable = true\n",
    );
    run_ok(&config, &["ingest"]);
    run_ok(&config, &["sample"]);
    assert_eq!(code(&run(&config, &["discover-topics"])), 2);
}

#[test]
fn full_pipeline_writes_manifests_and_ic() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    let out = dir.path().join("out");
    for c in PIPELINE {
        run_ok(&config, &[c]);
    }
    let sums = tree_checksums(&out);
    for c in PIPELINE {
        let m: RunManifest =
            serde_json::from_slice(&std::fs::read(out.join(format!("manifests/{c}.json"))).unwrap()).unwrap();
        assert_eq!(m.subcommand, c);
        assert!(!m.artifacts.is_empty(), "{c} recorded no artifacts");
        for a in &m.artifacts {
            // Later stages may not rewrite earlier artifacts.
            assert_eq!(sums.get(&a.path), Some(&a.sha256), "{c}: {}", a.path);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("ic/summary.json")).unwrap()).unwrap();
    let columns = summary["columns"].as_object().unwrap();
    assert_eq!(columns.len(), 22);
    // Every call month has a forward return; sentiment columns may fall
    // short of the minimum company count in some months.
    assert!(columns.values().all(|c| c["months"].as_u64() == Some(8)));
    assert!(columns
        .iter()
        .filter(|(k, _)| k.starts_with("p_"))
        .all(|(_, c)| c["months_with_ic"].as_u64() == Some(8)));
    assert!(out.join("ic/p_Costs_Margins.csv").exists());
    let report = std::fs::read_to_string(out.join("report/report.json")).unwrap();
    for k in ["ic", "models", "topic_distribution", "trends"] {
        assert!(report.contains(&format!("\"{k}\"")));
    }
}

#[test]
fn seed_override_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    run_ok(&config, &["ingest"]);
    run_ok(&config, &["sample"]);
    let a = std::fs::read(dir.path().join("out/samples/label.json")).unwrap();
    run_ok(&config, &["--seed", "99", "sample"]);
    let b = std::fs::read(dir.path().join("out/samples/label.json")).unwrap();
    assert_ne!(a, b);
    run_ok(&config, &["sample"]);
    assert_eq!(std::fs::read(dir.path().join("out/samples/label.json")).unwrap(), a);
}
