#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SCENARIOS: [&str; 8] = [
    "oscillator",
    "amplifier",
    "converter_invariant",
    "amplifier_invariants",
    "oscillator_invariant",
    "thermal",
    "vacuum",
    "empty",
];

pub fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn gaussdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussdyn")).args(args).output().expect("binary runs")
}

/// Every command that produces artifacts for the scenario file at `path`.
pub fn commands_for(path: &Path) -> Vec<&'static str> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut cmds = vec!["evolve"];
    if text.contains("\"invariants\"") {
        cmds.push("invariants");
    }
    if text.contains("\"tomogram\":") {
        cmds.push("tomogram");
    }
    if text.contains("\"thermal\":") {
        cmds.push("thermal");
    }
    cmds
}

pub fn run_file(path: &Path, out: &Path) {
    for c in commands_for(path) {
        let o = gaussdyn(&[c, path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{c} {}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

pub fn run_all(name: &str, out: &Path) {
    run_file(&scenario(name), out);
}

/// Parses a CSV artifact into a header and numeric rows.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

pub fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

/// Sorted `(file name, bytes)` of a directory.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}
