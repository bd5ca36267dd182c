#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the binary from the fixture directory so that the input paths
/// recorded in manifests are relative and machine independent.
pub fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motion-risk"))
        .current_dir(fixtures())
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file in `dir`, by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Argument lists covering every subcommand on the fixture maps.
pub fn golden_runs() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("evaluate", vec!["evaluate", "--map", "corridor_9x9.map", "--path", "corridor_9x9.path"]),
        ("plan", vec!["plan", "--map", "corridor_9x9.map"]),
        (
            "check",
            vec![
                "check",
                "--map",
                "gap_20x20.map",
                "--path",
                "gap_20x20_through.path",
                "--exec",
                "gap_20x20_through.seed42.exec",
            ],
        ),
        (
            "simulate",
            vec!["simulate", "--map", "wrap_10x10.map", "--path", "wrap_10x10.path", "--trials", "200", "--seed", "9"],
        ),
        (
            "riskmap",
            vec!["riskmap", "--map", "wrap_10x10.map", "--path", "wrap_10x10.path"],
        ),
    ]
}
