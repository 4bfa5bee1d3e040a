use std::fs;
use std::process::Command;

fn critpass() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critpass"))
}

#[test]
fn kz_scaling_writes_table_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = critpass()
        .args(["kz-scaling", "--seed", "9", "--set", "kz.gamma=[1.0, 100.0]", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("kz_scaling.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "gamma,I_vacuum,n1,n2,n1_over_n2,valid");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with("false") && lines[2].ends_with("true"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: gamma = 1"));
    let echo = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(echo.contains("seed = 9"));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn config_file_and_flags_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pair.toml");
    fs::write(&cfg, "seed = 1\n[pair]\nn_dof = [2]\nn_samples = 40\n").unwrap();
    let out = critpass()
        .args(["verify-pair", "--threads", "1", "--seed", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max_bracket_residual"));
    assert!(stdout.contains("PASS corrected_pair_n2"));
    let echo = fs::read_to_string(dir.path().join("run/config.toml")).unwrap();
    assert!(echo.contains("seed = 3"));
}

#[test]
fn threshold_violation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // A tolerance no residual can meet.
    let out = critpass()
        .args(["verify-pair", "--set", "pair.n_dof=[2]", "--set", "pair.n_samples=20", "--set", "pair.tol=0.0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn locked_output_and_bad_config_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".critpass.lock"), "1\n").unwrap();
    let out = critpass().args(["kz-scaling", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lock"));

    let other = tempfile::tempdir().unwrap();
    let out = critpass()
        .args(["kz-scaling", "--set", "kz.nonsense=1", "--out"])
        .arg(other.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
