//! Command-line contract tests: exit codes, output files, and stable
//! summaries on stdout.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cirs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cirs"))
        .args(args)
        .output()
        .expect("spawn cirs")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus_200.jsonl")
}

#[test]
fn score_succeeds_on_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scored.jsonl");
    let result = cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("scored\t200"), "stdout: {stdout}");
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 200);
    assert!(dir.path().join("scored.jsonl.stats.json").exists());
    assert!(dir.path().join("scored.jsonl.rejects.jsonl").exists());
}

#[test]
fn score_empty_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    std::fs::write(&input, "").unwrap();
    let result = cirs(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("out.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn score_missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let result = cirs(&[
        "score",
        "--input",
        dir.path().join("missing.jsonl").to_str().unwrap(),
        "--output",
        dir.path().join("out.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(!result.stderr.is_empty(), "expected a diagnostic on stderr");
}

#[test]
fn score_rejects_malformed_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.jsonl");
    std::fs::write(&input, "{\"id\": \"a\", \"code\": \"x = 1\"}\nnot json\n").unwrap();
    let result = cirs(&[
        "score",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("out.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(
        stderr.contains("line 2"),
        "stderr should name the line: {stderr}"
    );
}

#[test]
fn stratify_reports_per_stratum_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let result = cirs(&[
        "stratify",
        "--input",
        scored.to_str().unwrap(),
        "--output",
        dir.path().join("assign.jsonl").to_str().unwrap(),
        "--k",
        "3",
        "--seed",
        "7",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8(result.stdout).unwrap();
    for name in ["low", "medium", "high"] {
        assert!(
            stdout.contains(&format!("{name}\t")),
            "missing {name}: {stdout}"
        );
    }
    assert!(dir.path().join("assign.jsonl.manifest.json").exists());
}

#[test]
fn filter_by_interval_needs_no_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let result = cirs(&[
        "filter",
        "--input",
        scored.to_str().unwrap(),
        "--output",
        dir.path().join("kept.jsonl").to_str().unwrap(),
        "--keep",
        "0.0:1.0",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("kept\t200"), "stdout: {stdout}");
}

#[test]
fn filter_stratum_without_assignments_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let result = cirs(&[
        "filter",
        "--input",
        scored.to_str().unwrap(),
        "--output",
        dir.path().join("kept.jsonl").to_str().unwrap(),
        "--keep",
        "medium",
    ]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn filter_empty_interval_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let result = cirs(&[
        "filter",
        "--input",
        scored.to_str().unwrap(),
        "--output",
        dir.path().join("kept.jsonl").to_str().unwrap(),
        "--keep",
        "0.999:1.0",
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn synth_with_builtin_client_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.jsonl");
    let lines: Vec<String> = (0..5)
        .map(|i| {
            serde_json::json!({
                "id": format!("s{i}"),
                "dataset": "demo",
                "question": format!("Add {i} and {}.", i + 1),
                "code": format!("print({i} + {})", i + 1),
            })
            .to_string()
        })
        .collect();
    std::fs::write(&seeds, lines.join("\n") + "\n").unwrap();

    let run = |out: &Path| {
        let result = cirs(&[
            "synth",
            "--seeds",
            seeds.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--target",
            "8",
            "--budget",
            "20",
            "--seed",
            "3",
        ]);
        assert_eq!(result.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.jsonl"));
    let b = run(&dir.path().join("b.jsonl"));
    assert_eq!(a, b, "synth output differs between identical runs");
    assert_eq!(
        a.split(|&c| c == b'\n').filter(|l| !l.is_empty()).count(),
        8
    );
}

#[test]
fn rules_prints_the_frozen_tables() {
    let result = cirs(&["rules"]);
    assert_eq!(result.status.code(), Some(0));
    let tables: serde_json::Value =
        serde_json::from_slice(&result.stdout).expect("rules output is JSON");
    for key in [
        "grammar",
        "ast_kinds",
        "halstead_classification",
        "decision_points",
    ] {
        assert!(tables.get(key).is_some(), "missing table {key}");
    }
}

#[test]
fn report_prints_quantiles() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let result = cirs(&["report", "--input", scored.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0));
    let stdout = String::from_utf8(result.stdout).unwrap();
    for q in ["p10\t", "p50\t", "p90\t"] {
        assert!(stdout.contains(q), "missing {q} in: {stdout}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let scored = dir.path().join("scored.jsonl");
    cirs(&[
        "score",
        "--input",
        fixture().to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    let config = dir.path().join("cirs.toml");
    std::fs::write(&config, "k = 3\nseed = 99\n").unwrap();
    let assign = dir.path().join("assign.jsonl");
    let result = cirs(&[
        "stratify",
        "--config",
        config.to_str().unwrap(),
        "--input",
        scored.to_str().unwrap(),
        "--output",
        assign.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("assign.jsonl.manifest.json")).unwrap(),
    )
    .unwrap();
    // k comes from the file, seed from the flag.
    assert_eq!(manifest["config"]["k"], 3);
    assert_eq!(manifest["config"]["seed"], 7);
}
