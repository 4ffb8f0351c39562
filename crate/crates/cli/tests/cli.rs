use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stormaccess"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let out = run(&["fixture", "--small", "--samples", "60", "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir.join("scenario_storm-1-like.cfg"), dir.join("scenario_storm-2-like.cfg"))
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn covs(dir: &Path, horizon: &str) -> Vec<f64> {
    json_file(&dir.join(format!("results_{horizon}.geojson")))["features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["properties"]["cov"].as_f64().unwrap())
        .collect()
}

#[test]
fn version_reports_fragility_checksum() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let checksum = stormaccess::fragility::FragilityTable::default().checksum();
    assert!(text.contains(&checksum), "{text}");
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn validate_accepts_fixture_and_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = fixture(dir.path());
    assert_eq!(run(&["validate", s(&cfg)]).status.code(), Some(0));
    let out = run(&["validate", "--json", s(&cfg)]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["valid"], true);
    assert_eq!(doc["issues"].as_array().unwrap().len(), 0);
}

#[test]
fn validate_reports_corrupt_rows_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = fixture(dir.path());
    let demands = dir.path().join("demands.csv");
    let text = std::fs::read_to_string(&demands).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4] = "BROKEN,row";
    std::fs::write(&demands, lines.join("\n")).unwrap();
    std::fs::remove_file(dir.path().join("bridges.csv")).unwrap();

    let out = run(&["validate", "--json", s(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let issues = doc["issues"].as_array().unwrap();
    assert!(issues.iter().any(|i| i["file"] == "demands.csv" && i["row"] == 5), "{issues:?}");
    assert!(issues.iter().any(|i| i["file"].as_str().unwrap().ends_with("bridges.csv")), "{issues:?}");

    let human = run(&["validate", s(&cfg)]);
    assert_eq!(human.status.code(), Some(3));
    let err = String::from_utf8(human.stderr).unwrap();
    assert!(err.contains("demands.csv row 5"), "{err}");

    let missing = run(&["validate", s(&dir.path().join("absent.cfg"))]);
    assert_eq!(missing.status.code(), Some(5));
    assert!(String::from_utf8(missing.stderr).unwrap().contains("absent.cfg"));
}

#[test]
fn run_writes_four_artifacts_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = fixture(&dir.path().join("in"));
    let out_dir = dir.path().join("out");
    let out = run(&["run", s(&cfg), "--out", s(&out_dir), "--samples", "25", "--seed", "7", "--d0", "45"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("no_access") && stdout.contains("short") && stdout.contains("long"));
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["group_summary.csv", "manifest.json", "results_long.geojson", "results_short.geojson"]);
    let m = json_file(&out_dir.join("manifest.json"));
    assert_eq!(m["scenario"]["samples"], 25);
    assert_eq!(m["scenario"]["seed"], 7);
    assert_eq!(m["scenario"]["d0_min"], 45.0);

    let one = dir.path().join("one");
    assert!(run(&["run", s(&cfg), "--out", s(&one), "--samples", "1", "--horizon", "long"]).status.success());
    assert!(covs(&one, "long").iter().all(|&c| c == 0.0));
    assert!(!one.join("results_short.geojson").exists());
}

#[test]
fn seed_changes_only_stochastic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = fixture(&dir.path().join("in"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["run", s(&cfg), "--out", s(&a), "--seed", "1"]).status.success());
    assert!(run(&["run", s(&cfg), "--out", s(&b), "--seed", "2"]).status.success());
    let (ma, mb) = (json_file(&a.join("manifest.json")), json_file(&b.join("manifest.json")));
    assert_eq!(ma["bridges"], mb["bridges"]);
    for h in 0..2 {
        assert_eq!(ma["summary"][h]["deterministic_closures"], mb["summary"][h]["deterministic_closures"]);
    }
    assert_ne!(
        std::fs::read(a.join("results_long.geojson")).unwrap(),
        std::fs::read(b.join("results_long.geojson")).unwrap()
    );
}

#[test]
fn report_compares_and_rejects_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, c2) = fixture(&dir.path().join("in"));
    let (r1, r2) = (dir.path().join("r1"), dir.path().join("r2"));
    assert!(run(&["run", s(&c1), "--out", s(&r1)]).status.success());
    assert!(run(&["run", s(&c2), "--out", s(&r2)]).status.success());

    let same = run(&["report", "--json", s(&r1), s(&r1)]);
    assert!(same.status.success());
    let doc: Value = serde_json::from_slice(&same.stdout).unwrap();
    for h in doc["horizons"].as_array().unwrap() {
        assert_eq!(h["quartile_drops"], 0);
        assert!(h["scores"].as_array().unwrap().iter().all(|d| d["delta"] == 0.0));
    }

    let cmp = run(&["report", "--json", s(&r1), s(&r2)]);
    let doc: Value = serde_json::from_slice(&cmp.stdout).unwrap();
    let short = doc["horizons"].as_array().unwrap().iter().find(|h| h["horizon"] == "short").unwrap();
    let long = doc["horizons"].as_array().unwrap().iter().find(|h| h["horizon"] == "long").unwrap();
    assert!(short["no_access_other"].as_f64() >= short["no_access_baseline"].as_f64());
    assert!(long["quartile_drops"].as_u64() <= short["quartile_drops"].as_u64());
    let text = run(&["report", "--per-demand", s(&r1), s(&r2)]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("dropped a quartile class"));

    // Drop a feature from one result set.
    let path = r2.join("results_short.geojson");
    let mut fc = json_file(&path);
    fc["features"].as_array_mut().unwrap().pop();
    std::fs::write(&path, fc.to_string()).unwrap();
    let bad = run(&["report", s(&r1), s(&r2)]);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn invalid_overrides_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = fixture(dir.path());
    let out = run(&["run", s(&cfg), "--out", s(&dir.path().join("o")), "--horizon", "someday"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["run", s(&cfg), "--out", s(&dir.path().join("o")), "--samples", "0"]);
    assert_eq!(out.status.code(), Some(3));
}
