use std::path::Path;
use std::process::{Command, Output};

fn radtherm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radtherm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn preset(dir: &Path, name: &str, seed: &str) -> String {
    let out = radtherm(
        &["preset", name, "--seed", seed, "--out", "scenario.json"],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    "scenario.json".into()
}

#[test]
fn run_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset(tmp.path(), "three", "1");
    let out = radtherm(
        &["run", "--scenario", &scenario, "--out", "run"],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = tmp.path().join("run");
    for f in [
        "fused_identities.json",
        "radar_tracks.json",
        "temperatures.json",
        "frames.csv",
    ] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(run.join("frames.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("frame,track_id,x,y,d,t_hat"));

    let out = radtherm(&["eval", "--run", "run", "--json"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(m["association"]["precision"].as_f64().unwrap() >= 0.9);
    assert!(m["tracking"]["position_rmse"].as_f64().unwrap() <= 0.25);
    assert!(run.join("metrics.json").is_file());

    let table = radtherm(&["eval", "--run", "run"], tmp.path());
    assert!(String::from_utf8_lossy(&table.stdout).contains("r_cl"));
}

#[test]
fn run_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset(tmp.path(), "temperature", "3");
    for (dir, extra) in [("a", None), ("b", None), ("c", Some("--sequential"))] {
        let mut args = vec!["run", "--scenario", &scenario, "--seed", "9", "--out", dir];
        args.extend(extra);
        assert!(radtherm(&args, tmp.path()).status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in &names {
        let a = std::fs::read(tmp.path().join("a").join(n)).unwrap();
        assert_eq!(
            a,
            std::fs::read(tmp.path().join("b").join(n)).unwrap(),
            "{n:?}"
        );
        assert_eq!(
            a,
            std::fs::read(tmp.path().join("c").join(n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn simulate_respects_the_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset(tmp.path(), "parallel", "0");
    assert!(radtherm(
        &[
            "simulate",
            "--scenario",
            &scenario,
            "--seed",
            "1",
            "--out",
            "s1"
        ],
        tmp.path()
    )
    .status
    .success());
    assert!(radtherm(
        &[
            "simulate",
            "--scenario",
            &scenario,
            "--seed",
            "2",
            "--out",
            "s2"
        ],
        tmp.path()
    )
    .status
    .success());
    let a = std::fs::read(tmp.path().join("s1/radar_frames.jsonl")).unwrap();
    let b = std::fs::read(tmp.path().join("s2/radar_frames.jsonl")).unwrap();
    assert_ne!(a, b);
    let saved = std::fs::read_to_string(tmp.path().join("s1/scenario.json")).unwrap();
    assert!(saved.contains("\"seed\": 1"));
}

#[test]
fn errors_are_json_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let out = radtherm(
        &["run", "--scenario", "missing.json", "--out", "x"],
        tmp.path(),
    );
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "io");

    std::fs::write(tmp.path().join("bad.json"), "{\"schema_version\": 1}").unwrap();
    let out = radtherm(
        &["simulate", "--scenario", "bad.json", "--out", "x"],
        tmp.path(),
    );
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "json");

    let out = radtherm(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");

    let out = radtherm(&["eval", "--run", "nowhere"], tmp.path());
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "io");
}

#[test]
fn invalid_scenario_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset(tmp.path(), "three", "0");
    let text = std::fs::read_to_string(tmp.path().join(&scenario)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["subjects"][0]["temperature"] = serde_json::json!(45.0);
    std::fs::write(tmp.path().join("hot.json"), v.to_string()).unwrap();
    let out = radtherm(&["run", "--scenario", "hot.json", "--out", "r"], tmp.path());
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "invalid_config");
}

#[test]
fn oracle_check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = radtherm(&["oracle-check", "--seed", "5"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn reid_bench_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = radtherm(
        &[
            "reid-bench",
            "--subjects",
            "3",
            "--train-min",
            "0.5",
            "--test-min",
            "0.5",
            "--window",
            "0,5",
            "--seeds",
            "2",
            "--out",
            "grid.csv",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("store,window_s,events,welm_mean,welm_std,cs_accuracy")
    );
    assert_eq!(lines.count(), 2);

    let out = radtherm(&["reid-bench", "--subjects", "1"], tmp.path());
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "invalid_config");
}
