mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{snapshot, write_prices};

const BIN: &str = env!("CARGO_BIN_EXE_infoflow");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest_sha256="));
    let body: Vec<&str> = lines.collect();
    let header: Vec<&str> = body[0].split(',').collect();
    body[1..]
        .iter()
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_owned)).collect())
        .collect()
}

#[test]
fn analyze_with_defaults_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    write_prices(&input, &["AAA", "BBB", "CCC"], 300, &[]);
    let out = dir.path().join("out");
    let o = run(&["analyze", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = snapshot(&out).into_keys().collect();
    assert_eq!(
        files,
        ["apen.csv", "apen.json", "fr_curves.csv", "fr_curves.json", "manifest.json", "pairs.csv", "pairs.json"]
    );
    let fr = csv_rows(&out.join("fr_curves.csv"));
    assert_eq!(fr.len(), 25);
    let cols: Vec<&String> = fr[0].keys().collect();
    for c in ["k", "l", "fr_mutual", "fr_oneway", "fr_none", "fr_eff_forward", "fr_eff_backward", "n_tied", "n_unclassifiable"] {
        assert!(cols.iter().any(|k| k.as_str() == c), "missing column {c}");
    }
    assert_eq!(csv_rows(&out.join("pairs.csv")).len(), 75);
    assert_eq!(csv_rows(&out.join("apen.csv")).len(), 3);

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["manifest_sha256"].as_str().unwrap();
    let fr_json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("fr_curves.json")).unwrap()).unwrap();
    assert_eq!(fr_json["manifest_sha256"], hash);
    assert_eq!(fr_json["rows"].as_array().unwrap().len(), 25);
    assert!(std::fs::read_to_string(out.join("pairs.csv")).unwrap().starts_with(&format!("# manifest_sha256={hash}\n")));
    assert_eq!(manifest["manifest"]["alpha"], 0.05);
}

#[test]
fn shuffled_runs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    write_prices(&input, &["A", "B", "C", "D"], 200, &[]);
    let mut outputs = Vec::new();
    for (name, threads) in [("one", "1"), ("two", "1"), ("four", "4")] {
        let out = dir.path().join(name);
        let o = run(&[
            "analyze", "--input", input.to_str().unwrap(), "--shuffle", "--seed", "42", "--threads", threads,
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(snapshot(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let unshuffled = dir.path().join("plain");
    run(&["analyze", "--input", input.to_str().unwrap(), "--out", unshuffled.to_str().unwrap()]);
    assert_ne!(snapshot(&unshuffled)["pairs.csv"], outputs[0]["pairs.csv"]);
}

#[test]
fn bad_alpha_is_a_config_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    write_prices(&input, &["A", "B", "C"], 200, &[]);
    let out = dir.path().join("out");
    let o = run(&["analyze", "--input", input.to_str().unwrap(), "--alpha", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(snapshot(&out).is_empty());
}

#[test]
fn malformed_prices_are_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    std::fs::write(&input, "date,A,B\n2020-01-02,1,2\n2020-01-01,1,2\n2020-01-03,1,2\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["analyze", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(snapshot(&out).is_empty());
}

#[test]
fn mostly_degenerate_pairs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    write_prices(&input, &["A", "B", "C", "D"], 200, &[1, 2]);
    let out = dir.path().join("out");
    let o = run(&["analyze", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(snapshot(&out).is_empty());
}

#[test]
fn null_spec_is_calibrated_in_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["synth", "--spec", fixture("null50.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("fr_curves.csv"));
    assert_eq!(rows.len(), 25);
    for r in &rows {
        let v: f64 = r["fr_oneway"].parse().unwrap();
        assert!((v - 0.095).abs() <= 0.03, "k={} l={}: {v}", r["k"], r["l"]);
    }
    assert!(csv_rows(&out.join("truth.csv")).is_empty());
}

#[test]
fn chain_spec_shows_both_links() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let spec = fixture("chain.toml");
    let o = run(&["synth", "--spec", spec.to_str().unwrap(), "--scales", "1", "--lags", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pairs = csv_rows(&out.join("pairs.csv"));
    let class = |a: &str, b: &str| {
        pairs.iter().find(|r| r["ticker_i"] == a && r["ticker_j"] == b).unwrap()["class"].clone()
    };
    assert_eq!(class("S000", "S001"), "oneway_xy");
    assert_eq!(class("S001", "S002"), "oneway_xy");
    assert_eq!(csv_rows(&out.join("truth.csv")).len(), 2);

    let again = dir.path().join("again");
    let o = run(&["synth", "--spec", spec.to_str().unwrap(), "--scales", "1", "--lags", "1", "--threads", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(snapshot(&out), snapshot(&again));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "spec = {:?}\nscales = \"1:2\"\nlags = [1]\nalpha = 0.01\nformat = \"json\"\nout = \"from_file\"\n",
            fixture("chain.toml").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = dir.path().join("flags");
    let o = run(&["synth", "--config", cfg.to_str().unwrap(), "--alpha", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = snapshot(&out).into_keys().collect();
    assert_eq!(files, ["apen.json", "fr_curves.json", "manifest.json", "pairs.json", "truth.json"]);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["manifest"]["alpha"], 0.1);
    assert_eq!(m["manifest"]["scales"], serde_json::json!([1, 2]));
    assert!(!dir.path().join("from_file").exists());
}

#[test]
fn shuffle_test_writes_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "shuffle-test", "--spec", fixture("chain.toml").to_str().unwrap(), "--scales", "1", "--lags", "1",
        "--format", "csv", "--seed", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files = snapshot(&out);
    for sub in ["original", "shuffled"] {
        for f in ["fr_curves.csv", "pairs.csv", "apen.csv", "truth.csv", "manifest.json"] {
            assert!(files.contains_key(&format!("{sub}/{f}")), "{sub}/{f}");
        }
    }
    assert_ne!(files["original/pairs.csv"], files["shuffled/pairs.csv"]);
    let m: serde_json::Value = serde_json::from_slice(&files["shuffled/manifest.json"]).unwrap();
    assert_eq!(m["manifest"]["master_seed"], 5);
}
