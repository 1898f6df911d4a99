// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hullwalk_cli::report::parse_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hullwalk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(run(&["quad", "--name", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"walks":[{"mu":[0,1]}],"n_grid":[10],"replicas":100}"#);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("replicas"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "bad2.json", r#"{"walks":[{"mu":[0,1]}],"n_grid":[20,10]}"#);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_grid"), "{}", stderr(&o));
}

#[test]
fn classify_equal_drifts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eq.json", r#"{"walks":[{"mu":[0,1]},{"mu":[0,1]}]}"#);
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(r#""table1_case":"equal-drifts""#), "{}", stdout(&o));
}

#[test]
fn quad_ito_variance() {
    let o = run(&["quad", "--name", "ito-variance", "--sigma1", "I", "--sigma2", "I"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 2.858407).abs() < 1e-6, "{v}");
    let o = run(&["quad", "--name", "semic-mean", "--sigma1", "1,0,1", "--mu", "-1,0"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-8, "{v}");
}

#[test]
fn simulate_pass_fail_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(
        dir.path(),
        "good.json",
        r#"{"walks":[{"mu":[0,1]}],"n_grid":[300,1000],"replicates":1500,"seed":3,
            "experiment":{"name":"one-walk","quantities":[
              {"functional":"diameter","statistic":"variance","scale_power":1,"target":1.0}]},
            "tolerances":{"relative":0.25}}"#,
    );
    let out = dir.path().join("report.csv");
    let o = run(&["simulate", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.experiment == "one-walk" && r.z.is_some()));

    // Same run, impossible target.
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"walks":[{"mu":[0,1]}],"n_grid":[300],"replicates":200,
            "experiment":{"quantities":[
              {"functional":"diameter","statistic":"variance","scale_power":1,"target":50.0}]}}"#,
    );
    let o = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("experiment,theorem,functional,n,estimate,stderr,target,z,status\n"));

    let unwritable = dir.path().join("missing-dir").join("r.csv");
    let o = run(&["simulate", "--config", good.to_str().unwrap(), "--out", unwritable.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn overrides_and_threads_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"walks":[{"mu":[1,0]},{"mu":[0,0]}],"n_grid":[50]}"#);
    let c = cfg.to_str().unwrap();
    let a = run(&["simulate", "--config", c, "--replicates", "300", "--n-grid", "20,80", "--threads", "1"]);
    let b = run(&["simulate", "--config", c, "--replicates", "300", "--n-grid", "20,80", "--threads", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let rows = parse_csv(&stdout(&a)).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![20, 80, 20, 80]);
    let json = run(&["simulate", "--config", c, "--replicates", "300", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn limit_sample_streams_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ito.json",
        r#"{"walks":[{"mu":[0,1]},{"mu":[0,1]}],"replicates":100,"seed":4}"#,
    );
    let o = run(&["limit-sample", "--sampler", "ito", "--time-steps", "200", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let draws: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(draws.len(), 100);
    let single = write_config(dir.path(), "one.json", r#"{"walks":[{"mu":[0,1]}],"replicates":100}"#);
    let o = run(&["limit-sample", "--sampler", "ito", "--config", single.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn conjecture_is_exploratory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "eq.json",
        r#"{"walks":[{"mu":[0,1]},{"mu":[0,1]}],"n_grid":[50,200],"replicates":100}"#,
    );
    let o = run(&["conjecture", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = parse_csv(&stdout(&o)).unwrap();
    assert!(rows.iter().all(|r| r.status.as_str() == "exploratory"));
    let one = write_config(dir.path(), "one.json", r#"{"walks":[{"mu":[0,1]}],"n_grid":[50],"replicates":100}"#);
    assert_eq!(run(&["conjecture", "--config", one.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_fast_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let o = run(&["verify", "--suite", "fast", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = stderr(&o);
    assert_eq!(lines.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{lines}");
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!rows.is_empty() && rows.iter().all(|r| r.status.as_str() != "fail"));
}
