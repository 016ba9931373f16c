use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_island-evo"));
    c.env_remove("ISLAND_EVO_THREADS");
    c
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"[
  {"name": "ring", "algorithm": "island", "spec": {"variant": "fork", "r": 2},
   "topology": "ring", "n_grid": [8, 12], "lambda_rule": {"kind": "log2", "c": 3, "min": 4},
   "tau_rule": {"kind": "n_log2n"}, "replicates": 30, "termination": "all_optimal", "master_seed": 7},
  {"name": "lo", "algorithm": "single_ea", "spec": {"variant": "leadingones"},
   "n_grid": [8, 16, 32], "replicates": 200, "master_seed": 7}
]"#;

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, CONFIG).unwrap();
    path
}

#[test]
fn simulate_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(bin()
        .args(["simulate", "--threads", "1", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap());
    // the environment variable wins over the flag
    ok(bin()
        .env("ISLAND_EVO_THREADS", "3")
        .args(["simulate", "--threads", "1", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap());
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("schema_version,scenario,algorithm,fitness,n,r,k,lambda,tau,"));
    assert_eq!(text.lines().count(), 1 + 5);
    // stdout output matches the file
    let stdout = ok(bin().args(["simulate", "--config"]).arg(&config).output().unwrap());
    assert_eq!(stdout, text);
}

#[test]
fn fit_reads_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let csv = dir.path().join("out.csv");
    ok(bin().args(["simulate", "--config"]).arg(&config).arg("--out").arg(&csv).output().unwrap());
    let out = ok(bin()
        .args(["fit", "--field", "rounds", "--scenario", "lo", "--csv"])
        .arg(&csv)
        .output()
        .unwrap());
    let line = out.lines().nth(1).unwrap();
    let slope: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
    // LeadingOnes needs Θ(n^2) steps
    assert!((slope - 2.0).abs() < 0.2, "{line}");
    // unfiltered: the two-row ring scenario is skipped with a warning
    let out = bin().args(["fit", "--csv"]).arg(&csv).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ring"));
    // two rows are too few for a fit
    let out = bin().args(["fit", "--scenario", "ring", "--csv"]).arg(&csv).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn oracles() {
    let run = |args: &[&str]| -> f64 { ok(bin().arg("oracle").args(args).output().unwrap()).trim().parse().unwrap() };
    assert_eq!(run(&["lo-runtime", "5"]), 20.517578125);
    assert!((run(&["choose-sum", "2"]) - 1.25).abs() < 1e-12);
    assert!((run(&["lo-block", "12", "6", "10"]) - 26.855101235576978).abs() < 1e-9);
    let lo = run(&["hitting-time", "--spec", r#"{"variant":"leadingones","n":4}"#]);
    assert!((lo - 12.962962962962962).abs() < 1e-9);
    let from_opt = run(&["hitting-time", "--spec", r#"{"variant":"onemax","n":3}"#, "--from", "111"]);
    assert_eq!(from_opt, 0.0);
    let p = run(&["hitting-prob", "--spec", r#"{"variant":"fork","r":2,"n":6}"#]);
    assert!((p - 0.5).abs() < 1e-9);
    let range = ok(bin().args(["oracle", "choose-sum", "1", "--to", "3"]).output().unwrap());
    assert_eq!(range.lines().count(), 3);
}

#[test]
fn oracle_refuses_large_chain() {
    let out = bin()
        .args(["oracle", "hitting-time", "--spec", r#"{"variant":"onemax","n":13}"#])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn verify_report_and_corrupted_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = ok(bin().args(["verify", "--only", "8,9", "--out"]).arg(&report).output().unwrap());
    assert_eq!(out.lines().filter(|l| l.starts_with("criterion")).count(), 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(json["all_pass"], true);
    for c in json["criteria"].as_array().unwrap() {
        for key in ["id", "measured", "bound", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }

    let th = dir.path().join("th.json");
    fs::write(&th, r#"{"choose_sum_tight_range": [1.9, 1.95]}"#).unwrap();
    let out = bin().args(["verify", "--only", "9", "--thresholds"]).arg(&th).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion  9 FAIL"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"[{"name":"x","algorithm":"island","spec":{"variant":"onemax"},"n_grid":[8],"replicates":1,"master_seed":0}]"#).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("topology"));
}
