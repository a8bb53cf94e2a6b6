//! Two complete mock-backed pipeline runs from the same configuration must
//! produce byte-identical artifacts. Prints one PASS/FAIL line.

mod common;

use std::time::Instant;

use common::*;

fn main() {
    let clock = Instant::now();
    let base = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    let mut failure = None;
    for name in ["a", "b"] {
        let dir = base.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        let config = setup(&dir, "");
        for c in PIPELINE {
            let o = run(&config, &[c]);
            if code(&o) != 0 {
                failure.get_or_insert(format!("run {name}: {c} exited {}", code(&o)));
            }
        }
        trees.push(tree_checksums(&dir.join("out")));
    }
    let (a, b) = (&trees[0], &trees[1]);
    let differing: Vec<&String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .collect();
    let ok = failure.is_none() && differing.is_empty() && a.len() > 40;
    let detail = match (&failure, differing.first()) {
        (Some(f), _) => f.clone(),
        (None, Some(d)) => format!("{} files differ, first {d}", differing.len()),
        (None, None) => format!("{} artifacts identical, {:.1}s", a.len(), clock.elapsed().as_secs_f64()),
    };
    println!("{} [9] end-to-end determinism: {detail}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        std::process::exit(1);
    }
}
