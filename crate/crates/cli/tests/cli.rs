use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hoe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoe")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hoe(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = "[train]\nhidden = [16]\nepochs = 2\n";

/// A small dataset and a checkpoint trained on it.
fn fixture() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    ok(&["gen-data", "--n", "300", "--mix", "full:0.5,lower:0.5", "--seed", "7", "--out", p(&data)]);
    let run = dir.path().join("run");
    ok(&["train", "--config", p(&cfg), "--data", p(&data), "--out", p(&run)]);
    (dir, data, run.join("checkpoint.json"))
}

#[test]
fn gen_data_is_counted_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        ok(&["gen-data", "--n", "1000", "--mix", "full:0.5,lower:0.5", "--seed", "7", "--out", p(out)]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1000);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(dir.path().join("a.config.json").exists());
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    assert_eq!(hoe(&["gen-data", "--n", "0", "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(hoe(&["gen-data", "--mix", "sideways", "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(hoe(&["frobnicate"]).status.code(), Some(2));
    ok(&["gen-data", "--n", "10", "--out", p(&out)]);
    let r = hoe(&["train", "--data", p(&out), "--epochs", "0", "--out", p(dir.path())]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let r = hoe(&["eval", "--estimator", "gt-echo", "--data", p(&missing), "--out", p(dir.path())]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nope.jsonl"));
}

#[test]
fn train_writes_metrics_and_is_reproducible() {
    let (dir, data, ckpt) = fixture();
    let metrics = std::fs::read_to_string(ckpt.with_file_name("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    let cfg = dir.path().join("small.toml");
    let again = dir.path().join("again");
    ok(&["train", "--config", p(&cfg), "--data", p(&data), "--out", p(&again)]);
    assert_eq!(std::fs::read(&ckpt).unwrap(), std::fs::read(again.join("checkpoint.json")).unwrap());

    // The resolved config alone reproduces the run.
    let resolved = ckpt.with_file_name("config.json");
    let third = dir.path().join("third");
    ok(&["train", "--config", p(&resolved), "--out", p(&third)]);
    assert_eq!(std::fs::read(&ckpt).unwrap(), std::fs::read(third.join("checkpoint.json")).unwrap());
}

#[test]
fn eval_reports_per_mode_rows() {
    let (dir, data, ckpt) = fixture();
    let echo = dir.path().join("echo");
    ok(&["eval", "--estimator", "gt-echo", "--data", p(&data), "--out", p(&echo)]);
    let csv = std::fs::read_to_string(echo.join("eval.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "mode,n,acc5,acc15,acc30,mae");
    for mode in ["full", "lower", "all"] {
        let row = rows.iter().find(|r| r.starts_with(&format!("{mode},"))).unwrap();
        assert!(row.ends_with(",1,1,1,0"), "{row}");
    }
    let model = dir.path().join("model");
    let table = ok(&["eval", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&model)]);
    assert!(table.contains("Acc(30)"));
    assert!(model.join("eval.txt").exists() && model.join("config.json").exists());
}

#[test]
fn eval_confidence_writes_both_score_kinds() {
    let (dir, data, ckpt) = fixture();
    let out = dir.path().join("pr");
    ok(&["eval-confidence", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&out)]);
    for kind in ["confidence", "max_prob"] {
        let csv = std::fs::read_to_string(out.join(format!("pr_{kind}.csv"))).unwrap();
        assert!(csv.starts_with("threshold,precision,recall\n"));
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("summary_{kind}.json"))).unwrap()).unwrap();
        assert_eq!(summary["score_kind"], kind);
        assert_eq!(summary["n"], 300);
    }
}

const ZERO_NOISE_WALK: &str = r#"{
    "name": "walk", "duration_s": 8,
    "segments": [{"kind": "walk", "speed_mps": 1.0, "heading_deg": 0, "duration_s": 8}],
    "occlusion_mode": "full", "noise": {"position_m": 0, "skeleton": 0}, "seed": 1
}"#;

#[test]
fn simulate_ground_truth_follows_closely() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("walk.json");
    std::fs::write(&scenario, ZERO_NOISE_WALK).unwrap();
    let out = dir.path().join("sim");
    ok(&[
        "simulate", "--scenario", p(&scenario), "--estimator", "ground_truth,cv_baseline", "--task", "forward",
        "--out", p(&out),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let runs = summary.as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0]["estimator"], "ground_truth");
    assert!(runs[0]["ate_m"].as_f64().unwrap() < 0.05);
    let traj = std::fs::read_to_string(out.join("trajectory_ground_truth_forward.csv")).unwrap();
    assert!(traj.starts_with("t,px,py,ptheta,"));
}

#[test]
fn simulate_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("walk.json");
    std::fs::write(&scenario, ZERO_NOISE_WALK).unwrap();
    let r = hoe(&["simulate", "--scenario", p(&scenario), "--estimator", "oracle", "--out", p(dir.path())]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    for name in ["cv_baseline", "model", "ground_truth"] {
        assert!(err.contains(name), "{err}");
    }

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, ZERO_NOISE_WALK.replace("speed_mps", "speed")).unwrap();
    let r = hoe(&["simulate", "--scenario", p(&bad), "--estimator", "ground_truth", "--out", p(dir.path())]);
    assert_ne!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stderr).contains("speed"));

    let r = hoe(&["simulate", "--scenario", p(&scenario), "--estimator", "model", "--out", p(dir.path())]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("--checkpoint"));
}
