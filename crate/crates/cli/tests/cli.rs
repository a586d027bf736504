use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).to_string_lossy().into_owned()
}

fn gke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gke")).args(args).output().expect("run gke")
}

fn gke_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gke")).args(args).env(key, value).output().expect("run gke")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_exit_codes() {
    let ok = gke(&["check", &fixture("ex32_pi0.gke")]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("accepted: F <> <> p |- F <> p"));

    let bad = gke(&["check", &fixture("mutants/pi1_broken_ax.gke")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("rejected"));

    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("g.gke");
    std::fs::write(&garbage, "gke-1\n(rule cut \"p |- \"").unwrap();
    assert_eq!(gke(&["check", garbage.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gke(&["check", "/nonexistent/file.gke"]).status.code(), Some(2));
}

#[test]
fn eliminate_writes_a_cut_free_proof() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.gke");
    let dump = dir.path().join("dump");
    let run = gke(&[
        "eliminate",
        &fixture("ex33_full.gke"),
        "-o",
        out.to_str().unwrap(),
        "--trace",
        "--dump-intermediate",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!(!report["rounds"].as_array().unwrap().is_empty());
    assert!(!run.stderr.is_empty(), "trace goes to stderr");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains("(rule cut"));
    assert_eq!(gke(&["check", out.to_str().unwrap()]).status.code(), Some(0));
    let dumped = std::fs::read_dir(&dump).unwrap().count();
    assert!(dumped >= 3);
    assert!(dump.join("000-round0-input.gke").exists());
}

#[test]
fn eliminate_rejects_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.gke");
    let run = gke(&["eliminate", &fixture("mutants/full_duplicate_token.gke"), "-o", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn step_budget_violation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.gke");
    let run = gke_env(&["eliminate", &fixture("ex32_full.gke"), "-o", out.to_str().unwrap()], "GKE_STEP_BUDGET", "2");
    assert_eq!(run.status.code(), Some(3));
    let run = gke_env(&["eliminate", &fixture("ex32_full.gke"), "-o", out.to_str().unwrap()], "GKE_STEP_BUDGET", "x");
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn round_limit_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.gke");
    let run = gke(&["eliminate", &fixture("ex32_full.gke"), "-o", out.to_str().unwrap(), "--max-rounds", "1"]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn stats_reports_clusters_and_cuts() {
    let run = gke(&["stats", &fixture("ex32_full.gke")]);
    assert_eq!(run.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(s["endsequent"], "F <> <> p |- F p");
    assert_eq!(s["accepted"], true);
    assert_eq!(s["cuts"][0]["formula"], "F <> p");
    assert!(s["clusters"].as_array().unwrap().iter().all(|c| c["nontrivial"] == true));
    assert_eq!(gke(&["stats", &fixture("mutants/pi0_focus_flip_discharge.gke")]).status.code(), Some(1));
}

#[test]
fn dot_draws_back_edges_dashed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pi0.dot");
    assert_eq!(gke(&["dot", &fixture("ex32_pi0.gke"), "-o", out.to_str().unwrap()]).status.code(), Some(0));
    let dot = std::fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph proof {"));
    assert_eq!(dot.matches("[style=dashed]").count(), 1);
    assert!(dot.contains("subgraph cluster_"));
}

#[test]
fn normalize_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let once = dir.path().join("once.gke");
    let twice = dir.path().join("twice.gke");
    assert_eq!(gke(&["normalize", &fixture("ex33_full.gke"), "-o", once.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(gke(&["normalize", once.to_str().unwrap(), "-o", twice.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&once).unwrap(), std::fs::read_to_string(&twice).unwrap());
    assert_eq!(gke(&["check", once.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn countermodel_search() {
    let valid = gke(&["countermodel", "F <> <> p |- F p", "--max-states", "3"]);
    assert_eq!(valid.status.code(), Some(0));
    assert_eq!(stdout(&valid).trim(), "valid up to 3");

    let refuted = gke(&["countermodel", "F p |- p", "--max-states", "2"]);
    assert_eq!(refuted.status.code(), Some(1));
    assert!(stdout(&refuted).starts_with("countermodel at s"));

    assert_eq!(gke(&["countermodel", "p |- (", "--max-states", "2"]).status.code(), Some(2));
    assert_eq!(gke(&["countermodel", "p |- p", "--max-states", "0"]).status.code(), Some(2));
    let tight = gke_env(&["countermodel", "F <> <> p |- F p", "--max-states", "4"], "GKE_STEP_BUDGET", "10");
    assert_eq!(tight.status.code(), Some(3));
}
