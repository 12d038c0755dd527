use std::path::Path;
use std::process::{Command, Output};

use burgers_ph::harness::{parse_csv, CellStatus, LEDGER_CSV_HEADER, SNAPSHOT_CSV_HEADER};
use burgers_ph::Termination;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_burgers-ph"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn last_ledger_time(path: &Path) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LEDGER_CSV_HEADER));
    lines.last().unwrap().split(',').next().unwrap().parse().unwrap()
}

#[test]
fn oracle_shock_speed() {
    let out = run(&["oracle", "--shock-speed", "1", "0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.5");
}

#[test]
fn oracle_accepts_negative_states() {
    let out = run(&["oracle", "--shock-speed", "-1", "3"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1");
}

#[test]
fn oracle_shock_time() {
    let out = run(&["oracle", "--shock-time"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let t: f64 = text.lines().next().unwrap().strip_prefix("t* ").unwrap().parse().unwrap();
    assert!((t - 0.5f64.exp() / 10.0).abs() < 1e-9);
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_ledger_to_final_time() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&["run", "--h", "1e-2", "--alpha", "1", "--beta", "1", "--snapshots", "5", "--out-dir", out_dir]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert!((last_ledger_time(&dir.path().join("ledger.csv")) - 0.4).abs() < 1e-12);
    let index = std::fs::read_to_string(dir.path().join("snapshots/snapshots.csv")).unwrap();
    assert_eq!(index.lines().count(), 7);
    let snap = std::fs::read_to_string(dir.path().join("snapshots/snapshot_0005.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some(SNAPSHOT_CSV_HEADER));
    assert_eq!(snap.lines().count(), 1 + 201);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "# coarse\nn_elems = 100\nt_final = 0.2\nbeta = 0\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--t-final",
        "0.05",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!((last_ledger_time(&out_dir.join("ledger.csv")) - 0.05).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--alpha=-1"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--config", "/nonexistent/cfg"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn incomplete_run_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "--h",
        "1e-2",
        "--newton-tol",
        "1e-30",
        "--newton-max-iter",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(last_ledger_time(&dir.path().join("ledger.csv")), 0.0);
}

#[test]
fn sweep_writes_table_and_cell_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "--alphas",
        "1,2",
        "--betas",
        "0,1",
        "--hs",
        "1e-2",
        "--t-final",
        "0.05",
        "--workers",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = parse_csv(&std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(table.cells.len(), 4);
    assert!(table
        .cells
        .iter()
        .all(|c| c.status == CellStatus::Finished(Termination::Completed) && (c.t_final - 0.05).abs() < 1e-12));
    assert_eq!(std::fs::read_dir(dir.path().join("cells")).unwrap().count(), 4);

    let text = run(&[
        "sweep",
        "--alphas",
        "1",
        "--betas",
        "1",
        "--hs",
        "1e-2",
        "--t-final",
        "0.02",
        "--format",
        "text",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(text.status.code(), Some(0));
    let body = std::fs::read_to_string(dir.path().join("sweep.txt")).unwrap();
    assert!(body.starts_with("alpha = 1"));
}
