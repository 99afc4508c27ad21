//! Command-line behaviour and exit codes.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slenderlap")).args(args).env_remove("SLENDERLAP_THREADS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn check_bessel_passes() {
    let out = run(&["check-bessel", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["wronskian_max"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn greens_check_reports_order() {
    let out = run(&["greens-check", "--curve", "circle", "--epsilon", "0.0078125", "--ladder", "64,128,256", "--backend", "split", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["dtn", "--epsilon", "abc"]).status.code(), Some(1));
    let out = run(&["dtn", "--epsilon", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["scaling", "--study", "RS1-sup", "--eps", "1/32,1/64", "--dry-run"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn dry_run_prints_plan() {
    let out = run(&["scaling", "--study", "RS2-sup", "--dry-run", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v.to_string().contains("n_s"));
}

#[test]
fn dtn_ntd_json() {
    let out = run(&["dtn", "--epsilon", "1/32", "--ns", "64", "--ntheta", "8", "--dirichlet", "random:7", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["f"].as_array().is_some_and(|f| f.len() == 64), "{v}");
    let out = run(&["ntd", "--epsilon", "1/32", "--ns", "64", "--ntheta", "8", "--series", "--json"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn symbols_table_written() {
    let dir = std::env::temp_dir().join(format!("slenderlap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("symbols.csv");
    let out = run(&["symbols", "--kmax", "4", "--lmax", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().next().unwrap().starts_with("k,l,m_S,m_D,m_eps_inv,m_eps"));
    assert_eq!(text.lines().count(), 1 + 5 * 3);
    std::fs::remove_dir_all(dir).ok();
}
