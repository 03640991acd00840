use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn branchim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchim"))
        .args(args)
        .env("BRANCHIM_OUT_DIR", out)
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn simulate_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mm-infinity.toml");
    let o = branchim(&["simulate", "--config", cfg.to_str().unwrap(), "--replicates", "2000"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    for f in ["results.jsonl", "summary.csv", "mean.csv", "trajectories.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let traj = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(traj.starts_with("replicate,t,N_1\n"));
    assert_eq!(traj.lines().count(), 1 + 2000 * 4);
}

#[test]
fn out_flag_beats_the_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = config("mm-infinity.toml");
    let o = branchim(
        &["lt", "--config", cfg.to_str().unwrap(), "--replicates", "500", "--out", flag_dir.path().to_str().unwrap()],
        env_dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(flag_dir.path().join("lt.csv").exists());
    assert!(!env_dir.path().join("lt.csv").exists());
}

#[test]
fn failing_tolerances_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("transient.toml");
    let args = ["transient", "--config", cfg.to_str().unwrap(), "--replicates", "2000"];
    let ok = branchim(&args, dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok));
    let header = std::fs::read_to_string(dir.path().join("transient.csv")).unwrap();
    assert!(header.starts_with("t,paper_literal,renewal_consistent,mc_mean,mc_se,matrix_exp_oracle\n"));

    let mut literal = args.to_vec();
    literal.extend(["--variant", "paper-literal"]);
    let o = branchim(&literal, dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("FAIL"));
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = branchim(&["simulate", "--config", "/nonexistent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = config("mm-infinity.toml");
    let o = branchim(&["simulate", "--config", cfg.to_str().unwrap(), "--workers", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let o = branchim(&["transient", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = branchim(&["verify", "--criterion", "5,16", "--workers", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("PASS 05")));
    assert!(out.lines().any(|l| l.starts_with("PASS 16")));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next().unwrap(),
        "experiment,metric,analytic,empirical,se,p_value,tolerance_kind,tolerance,pass,seed"
    );
    let jsonl = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), summary.lines().count() - 1);
}

#[test]
fn limits_reports_the_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("critical-poisson.toml");
    let o = branchim(&["limits", "--config", cfg.to_str().unwrap(), "--replicates", "500"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"law\":\"gamma\""));
    assert!(dir.path().join("limits.csv").exists());
}
