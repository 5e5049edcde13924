use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wildkac"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wildkac-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn law_rows(stdout: &[u8]) -> Vec<(String, f64)> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("state,"))
        .map(|l| {
            let (s, w) = l.split_once(',').expect("state,weight row");
            (s.to_string(), w.parse().expect("numeric weight"))
        })
        .collect()
}

#[test]
fn tree_counts() {
    let out = run(&["trees", "count", "--m", "2", "--n", "5"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "120");
    let out = run(&["trees", "count", "--m", "3", "--n", "4"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "105");
}

#[test]
fn series_and_integrator_agree_through_the_cli() {
    let wild = run(&["solve", "--method", "wild", "--t", "1"]);
    let ode = run(&["solve", "--method", "ode", "--t", "1"]);
    assert!(wild.status.success() && ode.status.success());
    let (a, b) = (law_rows(&wild.stdout), law_rows(&ode.stdout));
    assert_eq!(a.len(), 4);
    let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x.1 - y.1).abs()).sum();
    assert!(l1 < 1e-6, "{l1}");
}

#[test]
fn simulation_output_is_reproducible() {
    let args = ["simulate", "--agents", "200", "--replications", "20", "--seed", "9", "--format", "json"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let other = run(&["simulate", "--agents", "200", "--replications", "20", "--seed", "10", "--format", "json"]);
    assert_ne!(first.stdout, other.stdout);
}

#[test]
fn model_file_round_trip() {
    let path = scratch("dgp.model");
    let out = run(&["model", "dgp", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let from_file = run(&["solve", "--model", path.to_str().unwrap(), "--t", "0.5"]);
    let builtin = run(&["solve", "--model", "dgp", "--t", "0.5"]);
    assert!(from_file.status.success());
    assert_eq!(law_rows(&from_file.stdout), law_rows(&builtin.stdout));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["validate", "--replications", "0"]).status.code(), Some(0));

    let path = scratch("broken.model");
    std::fs::write(&path, "states a b\narity 2\nmeet a b -> b\n").unwrap();
    let out = run(&["solve", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(run(&["solve", "--t", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--method", "ode", "--step", "0"]).status.code(), Some(2));

    let out = run(&["validate", "--eps", "0.5", "--replications", "0", "--step", "1e-3"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn birth_table() {
    let out = run(&["birth", "--m", "2", "--t", "1", "--agents", "100", "--n-max", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "n,limit,finite_n,dominating");
    let row: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[1] - (-1f64).exp()).abs() < 1e-12);
}
