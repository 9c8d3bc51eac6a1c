use std::path::Path;
use std::process::{Command, Output};

fn khop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khop")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = khop(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(khop(&["audit", "--suite", "lemma2", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(khop(&["audit", "--suite", "lemma9"]).status.code(), Some(2));
}

#[test]
fn lemma1_audit() {
    let o = khop(&["audit", "--suite", "lemma1", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("100/100 indistinguishable").count(), 6, "{out}");
    assert!(out.lines().next().unwrap().contains("\"trials\":100"));
}

#[test]
fn lemma2_and_lemma3_audits() {
    let o = khop(&["audit", "--suite", "lemma2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(" 0 collisions"));
    let o = khop(&["audit", "--suite", "lemma3", "--max-nodes", "5", "--all-roots"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("772 graphs"));
}

#[test]
fn missing_data_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = khop(&["train", "--model", "gnn-2", "--data", p(&dir.path().join("nope")), "--out", p(&dir.path().join("r.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_train_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("prop");
    let results = dir.path().join("r.jsonl");
    let o = khop(&["gen", "--task", "property", "--config", "triangle-freeness", "--per-class", "20", "--seed", "4", "--out", p(&data)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data.join("meta.json").exists());

    let o = khop(&["train", "--model", "gnn-2", "--data", p(&data), "--epochs", "3", "--folds", "10", "--repeats", "1", "--out", p(&results)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("50.00"));
    let text = std::fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.contains("\"config\":{\"model\":\"gnn-2\"")));

    let o = khop(&["report", "--in", p(&results), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("dataset,model,runs,"));
    assert!(csv.contains("property-triangle-freeness,gnn-2,10,0.5000,0.0000"));
}

#[test]
fn roles_dataset_trains_per_graph() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("roles");
    let results = dir.path().join("r.jsonl");
    let o = khop(&["gen", "--task", "roles", "--config", "basic", "--graphs", "2", "--out", p(&data)]);
    assert_eq!(o.status.code(), Some(0));
    let o = khop(&["train", "--model", "khop-2", "--data", p(&data), "--epochs", "20", "--out", p(&results)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&results).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(text.contains("\"graph\":1"));
}

#[test]
fn bad_worker_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_khop"))
        .args(["audit", "--suite", "lemma2"])
        .env("KHOP_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
