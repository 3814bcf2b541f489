//! End-to-end tests of the `rwre` binary: exit codes, report round-trips,
//! byte determinism, and the verify failure path.

use std::path::Path;
use std::process::{Command, Output};

use rwre_harness::RunReport;

fn rwre() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rwre"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const ZERO_SPEED_CFG: &str = "\
law.a.kind = finite
law.a.values = 0.5 2
law.a.probs = 0.5 0.5
law.offspring.counts = 1 2
law.offspring.probs = 0.95 0.05
seed = 4
";

#[test]
fn lambda_reports_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "law.cfg", ZERO_SPEED_CFG);
    let out_path = dir.path().join("table.csv");
    let out = rwre()
        .args(["lambda", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(stdout_str(&out).trim()).unwrap();
    let analytic = report.analytic.unwrap();
    assert_eq!(analytic.transience, "transient");
    assert!(report.config_hash.len() == 64);
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("table,l_table\nlambda,value,t_bar\n"));
}

#[test]
fn lambda_prints_inf_for_branching_trees() {
    // q1 = 0: the sublevel exponent is infinite and prints as "inf".
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "binary.cfg",
        "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
         law.offspring.counts = 2\nlaw.offspring.probs = 1\n",
    );
    let out = rwre().args(["lambda", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.contains("\"lambda\":\"inf\""), "stdout: {text}");
    assert!(text.contains("\"l_prime\":\"-inf\""), "stdout: {text}");
}

#[test]
fn malformed_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.4\n\
         law.offspring.counts = 2\nlaw.offspring.probs = 1\n",
    );
    let out = rwre().args(["lambda", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("law.a."), "stderr: {err}");
}

#[test]
fn recurrent_law_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "recurrent.cfg",
        "law.a.kind = finite\nlaw.a.values = 0.5\nlaw.a.probs = 1\n\
         law.offspring.counts = 1\nlaw.offspring.probs = 1\nwalk.steps = 100\n",
    );
    let out = rwre().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_is_byte_deterministic_and_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "walk.cfg",
        "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
         law.offspring.counts = 2\nlaw.offspring.probs = 1\n\
         walk.steps = 1000\nwalk.replicates = 6\nseed = 11\n",
    );
    let run = |workers: &str, out_name: &str| {
        let out_path = dir.path().join(out_name);
        let out = rwre()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--format", "jsonl", "--out"])
            .arg(&out_path)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        (stdout_str(&out), std::fs::read_to_string(&out_path).unwrap())
    };
    let (stdout1, art1) = run("1", "a.jsonl");
    let (stdout2, art2) = run("1", "b.jsonl");
    assert_eq!(stdout1, stdout2, "stdout must be byte-identical");
    assert_eq!(art1, art2, "artifacts must be byte-identical");
    let (stdout3, art3) = run("3", "c.jsonl");
    assert_eq!(art1, art3, "artifacts must not depend on worker count");
    // The report echoes the worker count; estimates must agree regardless.
    let r1 = RunReport::from_json(stdout1.trim()).unwrap();
    let r3 = RunReport::from_json(stdout3.trim()).unwrap();
    assert_eq!(r1.estimates, r3.estimates);
    assert_eq!(r1.tables, r3.tables);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "walk.cfg",
        "law.a.kind = finite\nlaw.a.values = 0.5 2\nlaw.a.probs = 0.5 0.5\n\
         law.offspring.counts = 2\nlaw.offspring.probs = 1\n\
         walk.steps = 500\nwalk.replicates = 4\nseed = 11\n",
    );
    let run = |extra: &[&str]| {
        let mut cmd = rwre();
        cmd.args(["simulate", "--config"]).arg(&cfg).args(extra);
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        RunReport::from_json(stdout_str(&out).trim()).unwrap()
    };
    let base = run(&[]);
    let overridden = run(&["--seed", "99"]);
    assert_eq!(base.seed, 11);
    assert_eq!(overridden.seed, 99);
    assert_ne!(base.estimates, overridden.estimates);
}

#[test]
fn verify_quick_passes_and_fault_injection_fails() {
    let out = rwre().args(["verify", "quick", "--workers", "2"]).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_str(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6);

    let out = rwre()
        .args(["verify", "quick", "--workers", "2", "--inject-fault", "circuit"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let text = stdout_str(&out);
    assert!(
        text.contains("FAIL c03_circuit_oracle_equivalence"),
        "stdout: {text}"
    );
}
