use std::path::Path;
use std::process::{Command, Output};

use isacsec::scenario::ScenarioFile;

fn isacsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isacsec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_with_defaults_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = isacsec(&["solve", "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let sr: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("secrecy rate"))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .expect("secrecy rate line");
    assert!(sr > 0.0);
    let ratios: Vec<f64> = text
        .lines()
        .find_map(|l| l.strip_prefix("rank ratios"))
        .expect("rank ratio line")
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.iter().all(|&r| r >= 0.999), "{ratios:?}");
    assert!(dir.path().join("solve.csv").exists());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("solve.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_users_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k0.toml", "[geometry]\nk_users = 0\n");
    let o = isacsec(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k_users"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[array]\nn_antennas = 8\n");
    let o = isacsec(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_antennas"), "{}", stderr(&o));
}

#[test]
fn zero_trials_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = isacsec(&[
        "feasibility",
        "--trials",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_scnr_floor_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g60.toml", "[thresholds]\ngamma_s_db = 60.0\n");
    let o = isacsec(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn shipped_config_is_the_default_profile() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default.toml");
    let shipped = ScenarioFile::load(&path).unwrap().into_config().unwrap();
    assert_eq!(shipped, ScenarioFile::default().into_config().unwrap());
}

#[test]
fn identical_invocations_write_identical_files() {
    let run = |dir: &Path| {
        let o = isacsec(&[
            "feasibility",
            "--gamma-s",
            "26,30",
            "--gamma-se",
            "5",
            "--trials",
            "4",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            std::fs::read(dir.join("feasibility.csv")).unwrap(),
            std::fs::read(dir.join("feasibility.manifest.json")).unwrap(),
        )
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(a.path());
    assert_eq!(first, run(b.path()));
    let csv = String::from_utf8(first.0).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("experiment,scheme,n_t,"));
}

#[test]
fn convergence_writes_one_trace_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let o = isacsec(&[
        "convergence",
        "--powers",
        "18,22",
        "--jobs",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("power_dbm,iter,f,delta_f"));
    let powers: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert!(
        powers.contains(&"18.0") && powers.contains(&"22.0"),
        "{powers:?}"
    );
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(isacsec(&[]).status.code(), Some(2));
}
