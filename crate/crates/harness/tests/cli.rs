use std::path::Path;
use std::process::{Command, Output};

use alloom_harness::io::load_feature_csv;
use alloom_harness::results::load_results;
use serde_json::{json, Value};

fn alloom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alloom"))
        .args(args)
        .env("AL_LOOM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_json(path: &Path, v: &Value) -> String {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_featurize_baseline_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_json(
        &dir.path().join("synth.json"),
        &json!({"generator": "sine_mix", "counts": [6, 6, 6], "channels": 4}),
    );
    let raw = dir.path().join("raw.csv");
    let feats = dir.path().join("feats.csv");
    let o = alloom(&["synth", "--generator", "sine_mix", "--spec", &synth, "--out", raw.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = alloom(&[
        "featurize",
        "--input",
        raw.to_str().unwrap(),
        "--output",
        feats.to_str().unwrap(),
        "--window-s",
        "6",
        "--overlap",
        "0.5",
        "--feature-set",
        "fiber12",
        "--rate",
        "50",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ds = load_feature_csv(&feats).unwrap();
    assert_eq!(ds.n_features(), 48);
    assert_eq!(ds.len(), 18 * 3);
    assert_eq!(ds.feature_names[0], "ch0_mean");

    let o = alloom(&["baseline", "--features", feats.to_str().unwrap(), "--folds", "3", "--repeats", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["mean"].as_f64().unwrap() > 0.5, "{report}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let o = alloom(&["run", "--spec", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let bad = write_json(&dir.path().join("bad.json"), &json!({"version": 1, "colour": "red"}));
    let o = alloom(&["run", "--spec", &bad]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let over = write_json(
        &dir.path().join("over.json"),
        &json!({
            "version": 1,
            "dataset": {"kind": "synthetic", "generator": "blobs", "counts": [20, 20]},
            "experiments": [{"strategy": "uncertainty", "model": "dt", "budget": 1000, "step": 5}],
            "seed_count": 1,
            "output_dir": dir.path().join("out"),
        }),
    );
    let o = alloom(&["run", "--spec", &over]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds pool"));

    let o = Command::new(env!("CARGO_BIN_EXE_alloom"))
        .args(["summarize", "--results", "x.csv"])
        .env("AL_LOOM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn grid_dry_run_lists_skipped_cell() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_json(
        &dir.path().join("grid.json"),
        &json!({
            "version": 1,
            "dataset": {"kind": "synthetic", "generator": "sine_mix", "counts": [3, 3]},
            "experiments": [{"strategy": "random", "model": "dt", "budget_fraction": 0.5, "step": 5}],
            "seed_count": 1,
            "output_dir": dir.path().join("out"),
        }),
    );
    let o = alloom(&["grid", "--spec", &spec, "--dry-run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cells: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cells.len(), 12);
    let skipped: Vec<&Value> = cells.iter().filter(|c| c["instances"].is_null()).collect();
    assert_eq!(skipped.len(), 1);
    assert_eq!((skipped[0]["window_s"].as_f64(), skipped[0]["overlap"].as_f64()), (Some(9.0), Some(0.25)));
    assert!(String::from_utf8_lossy(&o.stderr).contains("11 executed, 1 skipped"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn run_summarize_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let spec = write_json(
        &dir.path().join("spec.json"),
        &json!({
            "version": 1,
            "dataset": {"kind": "synthetic", "generator": "blobs", "counts": [40, 15, 25], "noise_sigma": 1.5},
            "experiments": [
                {"strategy": "uncertainty", "model": "dt", "balanced": true, "budget": 40, "step": 10},
                {"strategy": "uncertainty", "model": "dt", "balanced": false, "budget": 40, "step": 10},
            ],
            "seed_count": 6,
            "output_dir": out,
        }),
    );
    let o = alloom(&["run", "--spec", &spec]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results = out.join("results.csv");
    let rows = load_results(&results).unwrap();
    assert_eq!(rows.len(), 2 * 6 * 4);
    assert!(rows.iter().all(|r| r.elapsed_ms == 0));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["seeds"][0], 1415);

    let o = alloom(&["summarize", "--results", results.to_str().unwrap(), "--group-by", "balanced"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[balanced=false]") && text.contains("[balanced=true]"), "{text}");

    let o = alloom(&[
        "stats",
        "--results",
        results.to_str().unwrap(),
        "--a",
        "balanced=true",
        "--b",
        "balanced=false",
        "--pair-by",
        "seed",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["n_effective"].as_u64().unwrap() <= 6, "{r}");
    let p = r["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p), "{r}");

    let o = alloom(&["summarize", "--results", results.to_str().unwrap(), "--group-by", "colour"]);
    assert_eq!(code(&o), 1);
}
