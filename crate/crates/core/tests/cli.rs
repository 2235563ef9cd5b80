//! The command-line tool end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abcrf-cli")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = cli(&["simulate", "--n", "300", "--seed", "5", "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&cli(&["--threads", "3", "simulate", "--n", "300", "--seed", "5", "--out", p(&b)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("model,param_theta1,param_theta2,stat_ac1,"));
    assert_eq!(text.lines().count(), 301);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 5);

    let c = dir.path().join("c.csv");
    assert_eq!(code(&cli(&["simulate", "--n", "300", "--seed", "6", "--out", p(&c)])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let d = dir.path().join("d.csv");
    assert_eq!(code(&cli(&["simulate", "--n", "20", "--summary", "acov", "--lags", "3", "--out", p(&d)])), 0);
    assert!(fs::read_to_string(&d).unwrap().starts_with("model,param_theta1,param_theta2,stat_acov1,stat_acov2,stat_acov3\n"));
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    assert_eq!(code(&cli(&["simulate", "--n", "0", "--out", p(&out)])), 2);
    assert_eq!(code(&cli(&["simulate", "--out", p(&out)])), 2);
    assert_eq!(code(&cli(&["simulate", "--n", "5", "--summary", "mean", "--out", p(&out)])), 2);
    assert_eq!(code(&cli(&["--threads", "0", "simulate", "--n", "5", "--out", p(&out)])), 2);
    assert_eq!(code(&cli(&["frobnicate"])), 2);
    assert_eq!(code(&cli(&["--help"])), 0);

    let missing = dir.path().join("missing.csv");
    let model = dir.path().join("m.model");
    assert_eq!(code(&cli(&["train", "--table", p(&missing), "--out", p(&model)])), 3);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "model,stat_a\n1,0.5\n2,oops\n").unwrap();
    let o = cli(&["train", "--table", p(&bad), "--out", p(&model)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
    let one_model = dir.path().join("one.csv");
    fs::write(&one_model, "model,stat_a\n1,0.5\n1,0.7\n").unwrap();
    assert_eq!(code(&cli(&["train", "--table", p(&one_model), "--out", p(&model)])), 3);
    assert_eq!(code(&cli(&["train", "--table", p(&bad), "--ntry", "many", "--out", p(&model)])), 2);
}

#[test]
fn train_predict_diagnose_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let model = dir.path().join("m.model");
    assert_eq!(code(&cli(&["simulate", "--n", "400", "--seed", "2", "--out", p(&table)])), 0);
    let o = cli(&["train", "--table", p(&table), "--trees", "30", "--seed", "4", "--out", p(&model)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("oob_error "));
    assert!(dir.path().join("m.model.manifest.json").exists());

    let obs = "0.1,-0.3,0.05,0,0.02,-0.01,0.03";
    let pred = dir.path().join("pred.csv");
    let args = ["predict", "--model", p(&model), "--table", p(&table), "--observed", obs, "--reg-trees", "30"];
    let o = cli(&[&args[..], &["--out", p(&pred)]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("selected_model "));
    let post: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("posterior_probability "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&post));
    assert_eq!(stdout(&cli(&args)), text, "predict is deterministic");

    let obs_file = dir.path().join("obs.csv");
    fs::write(&obs_file, format!("stat_ac1,stat_ac2,stat_ac3,stat_ac4,stat_ac5,stat_ac6,stat_ac7\n{obs}\n")).unwrap();
    let o = cli(&["predict", "--model", p(&model), "--table", p(&table), "--observed", p(&obs_file), "--reg-trees", "30"]);
    assert_eq!(stdout(&o), text);
    assert_eq!(code(&cli(&["predict", "--model", p(&model), "--table", p(&table), "--observed", "0.1,0.2"])), 2);

    let diag = dir.path().join("diag");
    let o = cli(&[
        "diagnose", "--model", p(&model), "--table", p(&table), "--observed", obs, "--out", p(&diag),
        "--series", "20", "--pool", "2000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "error_vs_trees.csv", "error_vs_trees.svg", "subset_stability.csv", "importance.csv", "importance.svg",
        "projection.csv", "projection.svg", "discrepancy.csv", "discrepancy.svg", "manifest.json",
    ] {
        assert!(diag.join(f).exists(), "{f} missing");
    }
    let scatter = fs::read_to_string(diag.join("discrepancy.csv")).unwrap();
    assert!(scatter.starts_with("exact_posterior_ma2,summary_posterior_ma2\n"));
    assert_eq!(scatter.lines().count(), 21);

    let manifest = dir.path().join("m.model.manifest.json");
    let o = cli(&["replay", "--manifest", p(&manifest), "--verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(&model, "tampered").unwrap();
    assert_eq!(code(&cli(&["replay", "--manifest", p(&manifest), "--verify"])), 3);
}

#[test]
fn benchmark_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = cli(&[
        "benchmark", "--train", "300", "--valid", "200", "--test", "200", "--trees", "20", "--knn-grid", "5,10",
        "--local-grid", "20,40", "--no-oracle", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = fs::read_to_string(out.join("error_rates.csv")).unwrap();
    assert!(t.starts_with("method,setting,error\nlda,,"));
    assert_eq!(t.lines().count(), 7);
    for f in ["rf_error.csv", "knn_calibration.csv", "local_logit_calibration.csv", "calibration.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert_eq!(code(&cli(&["benchmark", "--train", "0", "--out", p(&out)])), 2);
}
