use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use monge_slit::cli::CSV_HEADER;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monge-slit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn single_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "m.json", r#"{"d":1,"a":0.01,"operator":"hard_mask"}"#);
    let out = run(dir.path(), &["single", "--config", &m, "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 2);
    let row: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(row.len(), 8);
    assert!((row[3] - 2.0 / std::f64::consts::PI).abs() < 0.01);
    assert!(!text.contains('\r'));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        dir.path(),
        "m.json",
        r#"{"command":"sweep-k","d":1,"a":0.02,"grid_points":8192,"k_values":[-1,0,0.5,2]}"#,
    );
    assert_eq!(run(dir.path(), &["sweep-k", "--config", &m, "--out", "a.csv"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["sweep-k", "--config", &m, "--out", "b.csv"]).status.code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);
}

#[test]
fn json_output_and_manifest_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        dir.path(),
        "m.json",
        r#"{"d":1,"a":0.02,"grid_points":8192,"output_path":"out.json","output_format":"json"}"#,
    );
    let out = run(dir.path(), &["single", "--config", &m]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "single");
    assert_eq!(v["results"].as_array().unwrap().len(), 1);
    assert!(v["errors"].as_array().unwrap().is_empty());

    let out = run(dir.path(), &["single", "--config", &m, "--format", "csv", "--out", "o.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("o.csv")).unwrap().starts_with(CSV_HEADER));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.json", r#"{"d":1,"a":0.01,"slits":2}"#, "slits"),
        ("negative.json", r#"{"d":-1,"a":0.01}"#, "`d`"),
        ("syntax.json", "{\"d\":1,\n\"a\":}", "line 2"),
        ("mismatch.json", r#"{"command":"converge","d":1,"a":0.01}"#, "command"),
    ];
    for (name, text, needle) in cases {
        let m = manifest(dir.path(), name, text);
        let out = run(dir.path(), &["single", "--config", &m, "--out", "x.csv"]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{name}: {stderr}");
    }
    assert!(!dir.path().join("x.csv").exists());
    let out = run(dir.path(), &["single", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));

    let coarse = manifest(dir.path(), "coarse.json", r#"{"d":1,"a":0.01,"grid_points":256}"#);
    assert_eq!(run(dir.path(), &["single", "--config", &coarse]).status.code(), Some(2));
}

#[test]
fn physics_errors_exit_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        dir.path(),
        "m.json",
        r#"{"d":1,"a":0.01,"grid_points":16384,"operator":{"kind":"hard_mask","cut":-30},"output_format":"json"}"#,
    );
    let out = run(dir.path(), &["single", "--config", &m, "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["errors"][0]["stage"], "measurement");
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurement"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), "m.json", r#"{"d":1,"a":0.02,"grid_points":8192}"#);
    let out = run(dir.path(), &["selftest", "--config", &m, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}
