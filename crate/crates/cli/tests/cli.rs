use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hypergene"));
    c.env_remove("HYPERGENE_SEED");
    c
}

/// Two communities of 8 nodes, 12 hyperedges each, labeled by community.
fn write_dataset(dir: &Path) -> PathBuf {
    let features: Vec<Vec<f64>> = (0..16)
        .map(|v| vec![if v < 8 { 1.0 } else { 0.0 }, if v < 8 { 0.0 } else { 1.0 }, (v % 3) as f64])
        .collect();
    let mut hyperedges = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2 {
        for i in 0..12 {
            let base = c * 8;
            let k = 2 + i % 3;
            hyperedges.push((0..k).map(|j| base + (i + 3 * j) % 8).collect::<Vec<_>>());
            labels.push(c);
        }
    }
    let path = dir.join("data.json");
    let doc = json!({"num_nodes": 16, "features": features, "hyperedges": hyperedges, "labels": labels});
    fs::write(&path, doc.to_string()).unwrap();
    path
}

fn write_config(dir: &Path, extra: Value) -> PathBuf {
    write_dataset(dir);
    let mut doc = json!({
        "dataset": {"kind": "hypergraph_json", "path": "data.json"},
        "repeats": 2,
        "train": {
            "epochs_node": 2,
            "epochs_hyperedge": 2,
            "epochs_finetune": 10,
            "batch_size": 8,
            "lr": 0.01,
            "seed": 4,
            "gnn": {"hidden_dim": 8}
        }
    });
    if let (Some(d), Some(e)) = (doc.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            d.insert(k.clone(), v.clone());
        }
    }
    let path = dir.join("config.json");
    fs::write(&path, doc.to_string()).unwrap();
    path
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "report.json", "log.csv", "timing.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("checkpoints/repeat0/finetune.json").is_file());
    let r = report(&out);
    assert_eq!(r["seeds"], json!([4, 5]));
    assert_eq!(r["config"]["train"]["clusters"], json!(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("adaptation_aware"));
}

#[test]
fn seed_variable_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"repeats": 1}));
    let out = dir.path().join("out");
    let o = bin()
        .env("HYPERGENE_SEED", "77")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["seeds"], json!([77]));

    let o = bin().env("HYPERGENE_SEED", "x").args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn repeated_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({"output_dir": "out"}));
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(code(&o), 0);
        texts.push(fs::read(dir.path().join("out/report.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin().args(["run", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(code(&missing), 2);

    let cfg = write_config(dir.path(), json!({"unknown_key": 1}));
    assert_eq!(code(&bin().args(["run", "--config"]).arg(&cfg).output().unwrap()), 2);

    let cfg = write_config(dir.path(), json!({"repeats": 0}));
    assert_eq!(code(&bin().args(["run", "--config"]).arg(&cfg).output().unwrap()), 2);

    let cfg = write_config(dir.path(), json!({"dataset": {"kind": "hypergraph_json", "path": "absent.json"}}));
    assert_eq!(code(&bin().args(["run", "--config"]).arg(&cfg).output().unwrap()), 2);

    let cfg = write_config(dir.path(), json!({}));
    let o = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "lr", "--values", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    fs::write(
        dir.path().join("data.json"),
        r#"{"num_nodes": 2, "features": [[1.0], [0.0]], "hyperedges": [[0, 5]], "labels": [0]}"#,
    )
    .unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_prints_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    let csv = dir.path().join("sweep.csv");
    let o = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "adapt-steps", "--values", "0,1,2", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,mean,std");
    assert_eq!(lines.len(), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("span"));
}

#[test]
fn time_reports_both_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    let o = bin().args(["time", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["traditional_ms"].as_f64().unwrap() > 0.0);
    assert!(v["reduction_pct"].is_number());
}

#[test]
fn convert_builds_ego_hypergraphs() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("nodes.tsv");
    let edges = dir.path().join("edges.tsv");
    fs::write(&nodes, "a\t0\t1\t0\nb\t0\t0\t1\nc\t0\t1\t1\nd\t1\t0\t0\ne\t1\t1\t0\n").unwrap();
    fs::write(&edges, "a\tb\na\tc\nb\tc\nc\td\nd\te\n").unwrap();
    let out = dir.path().join("hg.json");
    for (mode, keep) in [("noisy", false), ("clean", false), ("noisy", true)] {
        let mut cmd = bin();
        cmd.args(["convert", "--citation"]).arg(&edges).arg(&nodes).args(["--mode", mode, "--out"]).arg(&out);
        if keep {
            cmd.arg("--keep-duplicates");
        }
        let o = cmd.output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["num_nodes"], json!(5));
        let m = v["hyperedges"].as_array().unwrap().len();
        assert_eq!(v["labels"].as_array().unwrap().len(), m);
        if mode == "clean" {
            assert!(m < 5);
        }
    }
    let o = bin()
        .args(["convert", "--citation"])
        .arg(&edges)
        .arg(&nodes)
        .args(["--mode", "fuzzy", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
