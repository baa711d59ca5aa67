use std::path::PathBuf;
use std::process::{Command, Output};

fn airrecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airrecomp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn preset(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn select_m_prints_csv() {
    let out = airrecomp(&["select-m", "--config", &preset("select-noisy.toml")]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# airrecomp select-m\n# config-hash: "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "trial,sigma_z,m_star,n_star,objective_m1,objective_m2,objective_m4,objective_m8,objective_m16");
    assert!(rows[1].starts_with("0,6.3,4,"));
}

#[test]
fn seed_and_trials_override_the_file() {
    let cfg = preset("mse-sweep.toml");
    let run = |seed: &str| {
        airrecomp(&[
            "mse-sweep",
            "--config",
            &cfg,
            "--trials",
            "50",
            "--seed",
            seed,
        ])
        .stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_ne!(a, run("2"));
    let text = String::from_utf8(a).unwrap();
    assert!(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .all(|l| l.ends_with(",50")));
}

#[test]
fn out_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = airrecomp(&[
        "sigma-sweep",
        "--config",
        &preset("sigma-sweep.toml"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 102);
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = airrecomp(&["select-m"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[config]:"), "{err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = airrecomp(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[io]:"));
}

#[test]
fn mismatched_kind_is_rejected() {
    let out = airrecomp(&["train", "--config", &preset("select-mnist.toml")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_too_small_for_one_round() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.toml");
    std::fs::write(
        &path,
        "seed = 1\n[channel]\nnoise_variance = [1.0]\n[cost]\ntrain_cost = 4.0\nuplink_cost = 1.0\nbudget = 3.0\n",
    )
    .unwrap();
    let out = airrecomp(&["select-m", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[budget]:"));
}
