use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lsoformer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsoformer"))
        .args(args)
        .env_remove("LSOFORMER_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = lsoformer(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn tiny_dataset(dir: &Path, circuits: &str, recipes: &str, len: &str) {
    ok(&[
        "gen-data", "--synth", circuits, "--min-nodes", "40", "--max-nodes", "120", "--recipes", recipes, "--len", len,
        "--metric", "area", "--seed", "5", "--split", "recipe-inductive", "--out", dir.to_str().unwrap(),
    ]);
}

#[test]
fn gen_data_cardinality_and_rerun_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&[
            "gen-data", "--synth", "20", "--recipes", "200", "--len", "10", "--metric", "delay", "--seed", "7", "--out",
            dir.to_str().unwrap(),
        ]);
    }
    let samples = fs::read_to_string(a.join("samples.jsonl")).unwrap();
    assert_eq!(samples.lines().count(), 4000);
    let m = read_json(&a.join("manifest.json"));
    assert_eq!(m["circuits"].as_array().unwrap().len(), 20);
    assert_eq!(m["recipes"].as_array().unwrap().len(), 200);
    for f in ["manifest.json", "samples.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let run = read_json(&a.join("run_manifest.json"));
    assert_eq!(run["command"], "gen-data");
    assert_eq!(run["seeds"][0], 7);
    assert!(run.get("timestamp").is_none());
}

#[test]
fn usage_errors_exit_one() {
    let out = lsoformer(&["gen-data", "--synth", "2", "--recipes", "4", "--len", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--metric"));
    assert_eq!(lsoformer(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lsoformer(&["ablate", "--data", "x", "--table", "7"]).status.code(), Some(1));
    assert_eq!(lsoformer(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let nets = tmp.path().join("nets");
    fs::create_dir(&nets).unwrap();
    fs::write(nets.join("good.bench"), "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
    fs::write(nets.join("bad1.bench"), "INPUT(a)\nOUTPUT(y)\ny = AND(a, q)\n").unwrap();
    fs::write(nets.join("bad2.bench"), "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n").unwrap();
    let out = lsoformer(&[
        "gen-data", "--circuits", nets.to_str().unwrap(), "--recipes", "2", "--len", "2", "--metric", "area", "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad1.bench") && err.contains("bad2.bench"), "{err}");
    assert!(!err.contains("good.bench"), "{err}");

    let missing = lsoformer(&["train", "--data", tmp.path().join("none").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn train_predict_eval_export() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    tiny_dataset(&data, "2", "6", "3");
    let run = tmp.path().join("run");
    ok(&[
        "train", "--data", data.to_str().unwrap(), "--epochs", "2", "--d-h", "8", "--ffn-width", "16", "--heads", "2",
        "--out", run.to_str().unwrap(),
    ]);
    for f in ["model.ckpt", "metrics.jsonl", "report.json", "curves.csv", "run_manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(run.join("metrics.jsonl")).unwrap().lines().count(), 2);

    let and = tmp.path().join("and.bench");
    fs::write(&and, "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
    let ckpt = run.join("model.ckpt");
    let stdout = ok(&[
        "predict", "--checkpoint", ckpt.to_str().unwrap(), "--netlist", and.to_str().unwrap(), "--recipe", "rw,rw,rw",
    ]);
    let values: Vec<f64> = stdout
        .lines()
        .filter(|l| l.starts_with("step"))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3, "{stdout}");
    assert!(values.iter().all(|v| v.is_finite()));
    assert!(stdout.lines().any(|l| l.starts_with("final")));

    let wrong_len = lsoformer(&[
        "predict", "--checkpoint", ckpt.to_str().unwrap(), "--netlist", and.to_str().unwrap(), "--recipe", "rw",
    ]);
    assert_eq!(wrong_len.status.code(), Some(1));

    let other = tmp.path().join("other");
    ok(&[
        "gen-data", "--synth", "2", "--min-nodes", "40", "--max-nodes", "120", "--recipes", "6", "--len", "3", "--metric",
        "area", "--seed", "9", "--split", "recipe-inductive", "--out", other.to_str().unwrap(),
    ]);
    let mismatch = lsoformer(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--data", other.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("normalizer mismatch"));

    let plots = tmp.path().join("plots");
    ok(&["export-plots", run.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    let table = fs::read_to_string(plots.join("per_circuit_mape.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "circuit_id,circuit,run");
    assert!(table.lines().last().unwrap().starts_with(",mean,"));
    let curves = fs::read_to_string(plots.join("loss_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 3);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lsoformer"))
        .args(["gen-data", "--synth", "1", "--min-nodes", "20", "--max-nodes", "30", "--recipes", "2", "--len", "2"])
        .args(["--metric", "area"])
        .env("LSOFORMER_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("gen-data").join("manifest.json").exists());
}

#[test]
fn eval_on_overfit_training_split() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    tiny_dataset(&data, "2", "3", "3");
    let run = tmp.path().join("run");
    ok(&[
        "train", "--data", data.to_str().unwrap(), "--epochs", "1500", "--keep-last", "--batch-size", "4",
        "--lr", "3e-3", "--d-h", "16", "--heads", "2", "--ffn-width", "32", "--out", run.to_str().unwrap(),
    ]);
    let ckpt = run.join("model.ckpt");
    let evaldir = tmp.path().join("eval");
    let stdout = ok(&[
        "eval", "--checkpoint", ckpt.to_str().unwrap(), "--data", data.to_str().unwrap(), "--subset", "train", "--out",
        evaldir.to_str().unwrap(),
    ]);
    let result = read_json(&evaldir.join("eval.json"));
    let mape = result["mape"].as_f64().unwrap();
    assert!(mape < 1.0, "train MAPE {mape}%\n{stdout}");
}

#[test]
fn ablate_table_five_has_four_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    tiny_dataset(&data, "2", "6", "3");
    let out = tmp.path().join("ablate");
    ok(&[
        "ablate", "--data", data.to_str().unwrap(), "--table", "5", "--seeds", "0", "--epochs", "2", "--d-h", "8",
        "--ffn-width", "16", "--heads", "2", "--out", out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("table5.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().trim_matches('"')).collect();
    assert_eq!(labels, ["MLP", "MLP + multi-task", "Auto-regressive LSTM", "Transformer"]);
}
