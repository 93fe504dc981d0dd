use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wce"))
        .args(args)
        .output()
        .expect("wce runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen_to(dir: &Path, name: &str, seed: u64, extra: &[&str]) -> String {
    let path = dir.join(name);
    let path_str = path.to_str().unwrap().to_string();
    let seed = seed.to_string();
    let mut args = vec!["gen", "--seed", &seed, "--n", "9", "--blocks", "3", "-o", &path_str];
    args.extend_from_slice(extra);
    let out = wce(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path_str
}

#[test]
fn gen_is_deterministic() {
    let a = wce(&["gen", "--seed", "11", "--n", "7", "--blocks", "2"]);
    let b = wce(&["gen", "--seed", "11", "--n", "7", "--blocks", "2"]);
    let c = wce(&["gen", "--seed", "12", "--n", "7", "--blocks", "2"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["weights"].as_array().unwrap().len(), 7);
    assert_eq!(doc["partition"].as_array().unwrap().len(), 2);
    assert!(doc.get("phi").is_some());

    let bare = wce(&["gen", "--seed", "11", "--n", "7", "--blocks", "2", "--no-phi"]);
    let doc: Value = serde_json::from_slice(&bare.stdout).unwrap();
    assert!(doc.get("phi").is_none());
}

#[test]
fn gen_rejects_bad_shapes() {
    assert_eq!(code(&wce(&["gen", "--seed", "1", "--n", "3", "--blocks", "5"])), 2);
    assert_eq!(code(&wce(&["gen", "--seed", "1", "--n", "3"])), 2);
}

#[test]
fn verify_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_to(dir.path(), "a.json", 3, &[]);
    let b = gen_to(dir.path(), "b.json", 4, &["--mode", "measurable-u"]);
    let report = dir.path().join("report.json");
    let out = wce(&["verify", &a, &b, "--report", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["summary"]["instances"], 2);
    assert_eq!(doc["summary"]["failed"], 0);
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 26);
    for r in records {
        assert!(r["statement"].as_str().is_some_and(|s| !s.is_empty()));
        assert!(["pass", "skipped"].contains(&r["status"].as_str().unwrap()));
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("norm-formula"));
}

#[test]
fn verify_can_report_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_to(dir.path(), "a.json", 5, &["--mode", "partial-isometry"]);
    let out = wce(&["verify", &a, "--checks", "partial-isometry,vanishing", "--report", "-"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["check"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["partial-isometry", "vanishing"]);
}

#[test]
fn impossible_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_to(dir.path(), "a.json", 6, &[]);
    let out = wce(&["verify", &a, "--checks", "polar", "--tol", "1e-30"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_to(dir.path(), "a.json", 7, &[]);
    assert_eq!(code(&wce(&["verify", &a, "--checks", "no-such-check"])), 2);
    assert_eq!(code(&wce(&["verify", &a, "--tol", "-1"])), 2);
    assert_eq!(
        code(&wce(&["verify", dir.path().join("missing.json").to_str().unwrap()])),
        2
    );
    assert_eq!(code(&wce(&["suite", "--seeds", "9..3"])), 2);

    let broken = dir.path().join("broken.json");
    let text = fs::read_to_string(&a).unwrap().replacen("\"w\"", "\"omega\"", 1);
    fs::write(&broken, text).unwrap();
    let out = wce(&["verify", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omega") && err.contains("line"), "{err}");
}

#[test]
fn suite_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for r in [&r1, &r2] {
        let out = wce(&["suite", "--seeds", "1..12", "--full", "--report", r.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    let doc: Value = serde_json::from_slice(&fs::read(&r1).unwrap()).unwrap();
    assert_eq!(doc["summary"]["instances"], 12);
    assert_eq!(doc["summary"]["records"], 12 * 13);
}
