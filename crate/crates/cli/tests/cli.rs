use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn diffdrive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffdrive")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a variant of a shipped scenario with one textual substitution.
fn variant(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(scenario(name)).unwrap();
    assert!(text.contains(from), "`{from}` not in {name}");
    let path = dir.join(format!("{name}_variant.toml"));
    std::fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["reference", "uniform_high_mu", "straight_10m"] {
        let out = diffdrive(&["validate", arg(&scenario(name))]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
    }
}

#[test]
fn invalid_field_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "straight_10m", "a_max = 1.5", "a_max = -1.5");
    let out = diffdrive(&["validate", arg(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limits.a_max"));
}

#[test]
fn missing_file_exits_one() {
    let out = diffdrive(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_plan_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "straight_10m", "section_v_max = [2.0]", "section_v_max = [0.0]");
    assert_eq!(diffdrive(&["validate", arg(&path)]).status.code(), Some(2));
    assert_eq!(diffdrive(&["run", arg(&path)]).status.code(), Some(2));
}

#[test]
fn run_writes_identical_files_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = diffdrive(&["run", arg(&scenario("reference")), "--mode", "combined", "--out", arg(out)]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        assert!(String::from_utf8_lossy(&res.stdout).contains("termination = completed"));
    }
    for file in ["reference_combined.csv", "reference_combined.summary.txt", "reference_combined.events.csv"] {
        let x = std::fs::read(a.join(file)).unwrap();
        assert!(!x.is_empty(), "{file}");
        assert_eq!(x, std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let trace = std::fs::read_to_string(a.join("reference_combined.csv")).unwrap();
    assert!(trace.starts_with("t,x,y,theta,"));
}

#[test]
fn incomplete_run_exits_three() {
    let out = diffdrive(&["run", arg(&scenario("reference")), "--mode", "low"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("termination = stalled"));
}

#[test]
fn compare_on_the_patch_favours_combined() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffdrive(&["compare", arg(&scenario("reference")), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["reference_low.csv", "reference_combined.csv", "reference_compare.txt"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

#[test]
fn compare_on_a_frictionless_floor_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "straight_10m", "default_mu = 0.8", "default_mu = 0.0");
    let out = diffdrive(&["compare", arg(&path)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("neither_completed = true"));
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let out = diffdrive(&["run", arg(&scenario("reference")), "--mode", "fast"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diffdrive(&["--help"]).status.code(), Some(0));
}
