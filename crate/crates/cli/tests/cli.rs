use std::path::Path;
use std::process::{Command, Output};

fn emopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emopt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn seed_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = emopt(&["mi-bound", "--out", &out]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    assert!(!tmp.path().join("scalars.csv").exists());
}

#[test]
fn mi_bound_writes_report_and_honours_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mi");
    let o = emopt(&[
        "mi-bound",
        "--seed",
        "1",
        "--T",
        "100",
        "--beta-end",
        "0.05",
        "--set",
        "radius=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in ["scalars.csv", "checks.csv", "config.txt", "terms.csv", "terms.svg"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let config = std::fs::read_to_string(out.join("config.txt")).unwrap();
    for line in ["T = 100", "beta-end = 0.05", "radius = 2", "seed = 1"] {
        assert!(config.lines().any(|l| l == line), "{line} not in\n{config}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("g.cfg");
    std::fs::write(&cfg, "kind = gaussian-example\ncases = 1:1\ntrials = 200\n").unwrap();
    let out = tmp.path().join("g");
    let o = emopt(&[
        "gaussian-example",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--set",
        "trials=300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let config = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("trials = 300"));
}

#[test]
fn mismatched_config_kind_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.cfg");
    std::fs::write(&cfg, "kind = converge\n").unwrap();
    let o = emopt(&["mi-bound", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_cfg(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn run_all_exit_code_reflects_contracts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgs = tmp.path().join("cfgs");
    std::fs::create_dir(&cfgs).unwrap();
    write_cfg(&cfgs, "a.cfg", "kind = mi-bound\nseed = 1\n");
    let out = tmp.path().join("out");
    let o = emopt(&["run-all", cfgs.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("1 config(s) run"));
    assert!(out.join("a").join("scalars.csv").exists());

    write_cfg(
        &cfgs,
        "b.cfg",
        "kind = converge\nseed = 2\nsteps = 10\nns = 10,20\nreplicates = 1\nprobes = 8\nmax-rmse = 0\n",
    );
    let o = emopt(&["run-all", cfgs.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("ok    a"), "{text}");
    assert!(text.contains("FAIL  b"), "{text}");
}
