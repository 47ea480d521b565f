//! End-to-end tests of the `breakage` binary: pipeline composition, exit
//! codes, and byte-determinism of outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_breakage"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, n: usize, broken_fraction: f64, signal: f64, seed: u64) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        format!(
            r#"{{"seed":{seed},"n_examples":{n},"broken_fraction":{broken_fraction},"signal_strength":{signal},"size_range":[40,120]}}"#
        ),
    )
    .unwrap();
    path
}

fn simulate_dataset(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let config = write_config(dir, n, 0.5, 1.0, seed);
    let dataset = dir.join("dataset");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dataset.to_str().unwrap(),
    ]);
    assert_ok(&out);
    dataset
}

#[test]
fn version_reports_library_and_schema() {
    let out = run(&["--version"]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("feature schema v"), "got: {text}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["simulate", "--bogus"]);
    assert_exit(&out, 2);
}

#[test]
fn pipeline_composes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate_dataset(dir.path(), 24, 7);
    assert!(dataset.join("manifest.jsonl").is_file());

    let csv = dir.path().join("features.csv");
    let schema = dir.path().join("schema.jsonl");
    let out = run(&[
        "featurize",
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--schema-out",
        schema.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(schema.is_file());
    let header = fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("example_id,label,"));

    let model = dir.path().join("model.json");
    let out = run(&[
        "train",
        "--features",
        csv.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_ok(&out);
    let model_text = fs::read_to_string(&model).unwrap();
    assert!(model_text.contains("\"format_version\""));

    let report = dir.path().join("eval.json");
    let out = run(&[
        "evaluate",
        "--features",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--outer",
        "3",
        "--inner",
        "2",
        "--budget",
        "2",
    ]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean AUC"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"command\":\"evaluate\""));
    let report_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(report_json["mean_auc"].as_f64().unwrap() > 0.5);

    let loco_report = dir.path().join("loco.json");
    let out = run(&[
        "loco",
        "--features",
        csv.to_str().unwrap(),
        "--report",
        loco_report.to_str().unwrap(),
        "--folds",
        "3",
        "--targets",
        "network,page",
    ]);
    assert_ok(&out);
    let loco_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&loco_report).unwrap()).unwrap();
    assert_eq!(loco_json["entries"].as_array().unwrap().len(), 2);

    let curve_report = dir.path().join("curve.json");
    let out = run(&[
        "curve",
        "--features",
        csv.to_str().unwrap(),
        "--report",
        curve_report.to_str().unwrap(),
        "--folds",
        "3",
    ]);
    assert_ok(&out);
    let curve_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&curve_report).unwrap()).unwrap();
    let points = curve_json["points"].as_array().unwrap();
    assert_eq!(points.len(), 5);
    // 1% of a 12-row class in a 24-example set is zero training rows.
    assert_eq!(points[0]["available"], serde_json::Value::Bool(false));
    assert_eq!(points[4]["available"], serde_json::Value::Bool(true));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 16, 0.5, 1.0, 11);

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_ok(&out);
    }
    assert_eq!(
        fs::read(a.join("manifest.jsonl")).unwrap(),
        fs::read(b.join("manifest.jsonl")).unwrap()
    );

    let csv = dir.path().join("features.csv");
    let out = run(&[
        "featurize",
        "--dataset",
        a.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_ok(&out);

    // Same seed, different thread counts: identical models and reports.
    let (m1, m2) = (dir.path().join("m1.json"), dir.path().join("m2.json"));
    for (model, jobs) in [(&m1, "1"), (&m2, "2")] {
        let out = run(&[
            "--jobs",
            jobs,
            "train",
            "--features",
            csv.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert_ok(&out);
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let (r1, r2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    for (report, jobs) in [(&r1, "1"), (&r2, "2")] {
        let out = run(&[
            "--jobs",
            jobs,
            "evaluate",
            "--features",
            csv.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--outer",
            "3",
            "--inner",
            "2",
            "--budget",
            "2",
        ]);
        assert_ok(&out);
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
}

#[test]
fn mine_extracts_labeled_examples() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("commits.jsonl");
    let fix = serde_json::json!({
        "id": "c1",
        "timestamp": "2020-03-01T10:00:00Z",
        "message": "P: https://news.example/ broken by list (Fixes https://forum.example/t/1)",
        "files": [{"path": "filters.txt", "removed": ["||ads.news.example^"]}]
    });
    let coverage = serde_json::json!({
        "id": "c2",
        "timestamp": "2020-04-01T10:00:00Z",
        "message": "A: block tracker on https://shop.example/",
        "files": [{"path": "filters.txt", "added": ["||tracker.shop.example^"]}]
    });
    let too_old = serde_json::json!({
        "id": "c3",
        "timestamp": "2012-01-01T10:00:00Z",
        "message": "P: https://old.example/",
        "files": [{"path": "filters.txt", "removed": ["||ads.old.example^"]}]
    });
    let lines: Vec<String> = [&fix, &coverage, &too_old]
        .iter()
        .map(|v| v.to_string())
        .collect();
    fs::write(&log, lines.join("\n")).unwrap();

    let out_path = dir.path().join("examples.jsonl");
    let out = run(&[
        "mine",
        "--commits",
        log.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = fs::read_to_string(&out_path).unwrap();
    let examples: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(examples.len(), 2);
    assert_eq!(examples[0]["label"], "broken");
    assert_eq!(examples[0]["page_url"], "https://news.example/");
    // A fix's diff is inverted: re-adding the removed rule reproduces the
    // breakage.
    assert_eq!(examples[0]["diff"]["added"][0], "||ads.news.example^");
    assert_eq!(examples[1]["label"], "working");

    // Same input, later cutoff: the 2020 commits fall away too.
    let out = run(&[
        "mine",
        "--commits",
        log.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--since",
        "2021-01-01",
    ]);
    assert_ok(&out);
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "");
}

#[test]
fn mine_rejects_malformed_logs_and_bad_dates() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("commits.jsonl");
    fs::write(&log, "this is not json\n").unwrap();
    let out_path = dir.path().join("examples.jsonl");
    let out = run(&[
        "mine",
        "--commits",
        log.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 2);

    fs::write(&log, "").unwrap();
    let out = run(&[
        "mine",
        "--commits",
        log.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--since",
        "not-a-date",
    ]);
    assert_exit(&out, 2);
}

#[test]
fn simulate_rejects_invalid_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 4, 1.5, 1.0, 0); // fraction out of range
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("ds").to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn diff_produces_a_loadable_graph_and_warns_when_effectless() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate_dataset(dir.path(), 4, 2);
    let manifest = fs::read_to_string(dataset.join("manifest.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(manifest.lines().next().unwrap()).unwrap();
    let pre = dataset.join(first["pre"].as_str().unwrap());
    let post = dataset.join(first["post"].as_str().unwrap());

    let out_file = dir.path().join("intv.graphml");
    let out = run(&[
        "diff",
        "--pre",
        pre.to_str().unwrap(),
        "--post",
        post.to_str().unwrap(),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = fs::read_to_string(&out_file).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("<graphml"));

    // A recording diffed against itself has no flips.
    let out = run(&[
        "diff",
        "--pre",
        pre.to_str().unwrap(),
        "--post",
        pre.to_str().unwrap(),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let out = run(&[
        "diff",
        "--pre",
        pre.to_str().unwrap(),
        "--post",
        dir.path().join("missing.graphml").to_str().unwrap(),
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn match_reports_block_exception_and_miss() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.txt");
    fs::write(
        &rules,
        "! demo list\n||ads.example.com^$script\n@@||ads.example.com/allowed.js\n",
    )
    .unwrap();

    let out = run(&[
        "match",
        "--rules",
        rules.to_str().unwrap(),
        "--url",
        "https://ads.example.com/track.js",
        "--type",
        "script",
        "--frame",
        "news.example.org",
    ]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("blocked rule=0"), "got: {text}");

    let out = run(&[
        "match",
        "--rules",
        rules.to_str().unwrap(),
        "--url",
        "https://ads.example.com/allowed.js",
        "--type",
        "script",
        "--frame",
        "news.example.org",
    ]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("allowed exception=1"), "got: {text}");

    let out = run(&[
        "match",
        "--rules",
        rules.to_str().unwrap(),
        "--url",
        "https://cdn.example.com/app.js",
        "--type",
        "script",
        "--frame",
        "news.example.org",
    ]);
    assert_ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "allowed");

    let out = run(&[
        "match",
        "--rules",
        rules.to_str().unwrap(),
        "--url",
        "https://x.example/",
        "--type",
        "not-a-type",
        "--frame",
        "x.example",
    ]);
    assert_exit(&out, 2);
}

#[test]
fn train_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate_dataset(dir.path(), 12, 4);
    let csv = dir.path().join("features.csv");
    assert_ok(&run(&[
        "featurize",
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]));

    let (m1, m2) = (dir.path().join("m1.json"), dir.path().join("m2.json"));
    for model in [&m1, &m2] {
        assert_ok(&run(&[
            "train",
            "--features",
            csv.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--seed",
            "42",
        ]));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
}
