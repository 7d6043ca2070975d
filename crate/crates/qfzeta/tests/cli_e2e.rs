//! End-to-end checks of the `qfzeta` binary: task execution, exit-code
//! contract, report determinism, cache resumability and fault injection.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfzeta"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const Y5_GRAM: &str = "gram2 = [
  2 0 0 0 0
  0 2 0 0 0
  0 0 2 0 0
  0 0 0 2 0
  0 0 0 0 -2
]
";

fn report_without_timestamp(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.starts_with("timestamp:")).collect::<Vec<_>>().join("\n")
}

#[test]
fn analyze_reports_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "job.cfg", &format!("task = analyze\n{Y5_GRAM}"));
    let out = dir.path().join("out");
    let status = bin().args(["--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("analyze.report.txt")).unwrap();
    assert!(report.contains("D: -32"));
    assert!(report.contains("signature: (4,1)"));
    assert!(report.contains("level: 4"));
    assert!(report.contains("K_disc: principal"));
}

#[test]
fn malformed_gram_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "task = analyze\ngram2 = [\n2 1\n0 2\n]\n",
    );
    let output = bin().args(["--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("symmetric"), "stderr: {err}");
}

#[test]
fn stark_check_passes_on_reference_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "stark.cfg",
        &format!("task = stark-check\nmoduli = 3\n{Y5_GRAM}"),
    );
    let out = dir.path().join("out");
    let status = bin().args(["--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("stark-check.report.txt")).unwrap();
    assert!(report.contains("stark_max_defect: PASS"));
    assert!(report.trim_end().ends_with("status: PASS"));
}

#[test]
fn densities_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dens.cfg",
        &format!("task = densities\nn_max = 2\nprime_bound = 7\n{Y5_GRAM}"),
    );
    let cache = dir.path().join("density.cache");
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    let s1 = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--cache")
        .arg(&cache)
        .arg("--out")
        .arg(&out1)
        .status()
        .unwrap();
    assert!(s1.success());
    assert!(cache.exists());
    let cache_len_after_first = std::fs::read_to_string(&cache).unwrap().lines().count();
    assert!(cache_len_after_first > 0);
    // rerun with warm cache: identical report body and CSV, no cache growth
    let s2 = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--cache")
        .arg(&cache)
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap();
    assert!(s2.success());
    assert_eq!(
        report_without_timestamp(&out1.join("densities.report.txt")),
        report_without_timestamp(&out2.join("densities.report.txt"))
    );
    assert_eq!(
        std::fs::read_to_string(out1.join("densities.csv")).unwrap(),
        std::fs::read_to_string(out2.join("densities.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(&cache).unwrap().lines().count(),
        cache_len_after_first
    );
}

#[test]
fn cache_admin_stats_verify_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("density.cache");
    // empty cache: zero records
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "stats"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("records: 0"));

    // populate via a densities run
    let cfg = write_config(
        dir.path(),
        "dens.cfg",
        &format!("task = densities\nn_max = 1\nprime_bound = 5\n{Y5_GRAM}"),
    );
    let outdir = dir.path().join("out");
    assert!(bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--cache")
        .arg(&cache)
        .arg("--out")
        .arg(&outdir)
        .status()
        .unwrap()
        .success());
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "stats"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(!text.contains("records: 0"), "stats: {text}");

    // clean verify
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "verify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bad: 0"));

    // corrupt one byte in the middle of the first record
    let mut bytes = std::fs::read(&cache).unwrap();
    bytes[12] = bytes[12].wrapping_add(1);
    std::fs::write(&cache, &bytes).unwrap();
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "verify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bad: 1"));

    // clear
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "clear"]).output().unwrap();
    assert!(out.status.success());
    let out = bin().args(["--cache"]).arg(&cache).args(["cache", "stats"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("records: 0"));
}

#[test]
fn verify_task_runs_holomorphic_reference() {
    // small but real end-to-end verify on the m=6 reference form
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "verify.cfg",
        "task = verify
gram2 = [
  2 0 0 0 0 0
  0 2 0 0 0 0
  0 0 -2 0 0 0
  0 0 0 -2 0 0
  0 0 0 0 -2 0
  0 0 0 0 0 -2
]
n_max = 25
prime_bound = 30
samples = 20
tolerance = 1.5e-1
",
    );
    let out = dir.path().join("out");
    let cache = dir.path().join("density.cache");
    let status = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("--cache")
        .arg(&cache)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "verify should pass at the configured tolerance");
    let report = std::fs::read_to_string(out.join("verify.report.txt")).unwrap();
    assert!(report.contains("modularity_median: PASS"), "report:\n{report}");
    assert!(report.contains("fricke_worst: PASS"), "report:\n{report}");
    assert!(out.join("verify.csv").exists());
}
