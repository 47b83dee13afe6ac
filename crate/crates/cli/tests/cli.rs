//! Runs the `efsvm` binary end to end on a small generated dataset.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_efsvm"));
    cmd.env_remove("EFSVM_OUT");
    cmd
}

/// Three well separated classes over four numeric features.
fn fixture(dir: &Path) -> PathBuf {
    let mut text = String::from("a,b,c,d,class\n");
    for i in 0..60 {
        let class = i % 3;
        let base = 4.0 * class as f64;
        let jitter = (i * 7 % 11) as f64 / 11.0;
        text.push_str(&format!(
            "{:.3},{:.3},{:.3},{:.3},k{class}\n",
            base + jitter,
            base - jitter,
            jitter,
            (i % 5) as f64
        ));
    }
    let path = dir.join("data.csv");
    fs::write(&path, text).unwrap();
    fs::write(dir.join("run.cfg"), "class_column = class\ndrop_columns =\nclass_aliases =\n").unwrap();
    path
}

/// The binary with the fixture's dataset and config.
fn with_data(data: &Path) -> Command {
    let mut cmd = bin();
    cmd.arg("--data").arg(data).arg("--config").arg(data.with_file_name("run.cfg"));
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    eprintln!("stdout:\n{}", String::from_utf8_lossy(&out.stdout));
    eprintln!("stderr:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn unknown_selector_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let out = run(with_data(&data).arg("--out").arg(dir.path()).args(["select", "FS9:genetic"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("--out").arg(dir.path()).args(["experiment", "exp1"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn select_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let out = run(with_data(&data).arg("--out").arg(dir.path()).args(["select", "FS4:ranker"]));
    assert!(out.status.success());
    let table = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("select_"))
        .expect("selection table");
    let text = fs::read_to_string(table).unwrap();
    assert!(text.starts_with("feature,method,score,rank"));
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn train_then_predict_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let model = dir.path().join("svm.model");
    let common = |cmd: &mut Command| {
        cmd.arg("--out").arg(dir.path());
    };

    let mut train = with_data(&data);
    common(&mut train);
    train.args(["train", "--c", "10", "--degree", "2", "--features", "a,b", "--model"]).arg(&model);
    assert!(run(&mut train).status.success());
    assert!(fs::read_to_string(&model).unwrap().starts_with("efsvm-model"));

    let mut predict = with_data(&data);
    common(&mut predict);
    predict.args(["predict", "--partition", "all", "--model"]).arg(&model);
    assert!(run(&mut predict).status.success());
    let preds = fs::read_to_string(dir.path().join("predict_seed42.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("row,actual,predicted"));
    assert_eq!(preds.lines().count(), 1 + 60);
    let wrong = preds.lines().skip(1).filter(|l| {
        let cells: Vec<&str> = l.split(',').collect();
        cells[1] != cells[2]
    });
    assert_eq!(wrong.count(), 0);

    let mut report = with_data(&data);
    common(&mut report);
    report.args(["report", "--model"]).arg(&model);
    assert!(run(&mut report).status.success());
    assert!(dir.path().join("report_seed42.csv").exists());
}

#[test]
fn bagged_ensemble_round_trips_through_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let model = dir.path().join("bag.model");
    let out = run(with_data(&data)
        .arg("--out")
        .arg(dir.path())
        .args(["train", "--members", "3", "--model"])
        .arg(&model));
    assert!(out.status.success());
    assert!(fs::read_to_string(&model).unwrap().starts_with("efsvm-ensemble"));
    let out = run(with_data(&data).arg("--out").arg(dir.path()).args(["predict", "--model"]).arg(&model));
    assert!(out.status.success());
}

#[test]
fn schema_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let model = dir.path().join("svm.model");
    let out = run(with_data(&data).arg("--out").arg(dir.path()).args(["train", "--model"]).arg(&model));
    assert!(out.status.success());

    let other = dir.path().join("other.csv");
    let renamed = fs::read_to_string(&data).unwrap().replacen("a,b,c,d", "w,x,y,z", 1);
    fs::write(&other, renamed).unwrap();
    let out = run(with_data(&other).arg("--out").arg(dir.path()).args(["predict", "--model"]).arg(&model));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_directory_prefers_flag_then_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path());
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");

    let out = run(with_data(&data).env("EFSVM_OUT", &env_dir).args(["select", "FS3:ranker"]));
    assert!(out.status.success());
    assert!(fs::read_dir(&env_dir).unwrap().count() > 0);

    let out = run(with_data(&data)
        .env("EFSVM_OUT", &env_dir)
        .arg("--out")
        .arg(&flag_dir)
        .args(["select", "FS4:ranker"]));
    assert!(out.status.success());
    assert!(fs::read_dir(&flag_dir).unwrap().count() > 0);
    assert_eq!(fs::read_dir(&env_dir).unwrap().count(), 1);
}
