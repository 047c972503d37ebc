#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn msns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msns"))
}

pub fn run(args: &[&str]) -> Output {
    msns().args(args).output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "msns {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Drops wall-clock fields so reruns can be compared bit for bit.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !matches!(k.as_str(), "wall_time" | "mean_wall_time" | "cpu_time"));
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Removes the named CSV column from every line.
pub fn drop_column(csv: &str, column: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let skip = header.iter().position(|h| *h == column);
    let keep = |line: &str| -> String {
        line.split(',')
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, f)| f)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = keep(&header.join(","));
    for l in lines {
        out.push('\n');
        out.push_str(&keep(l));
    }
    out
}

/// Every output file with timing removed, keyed by file name.
pub fn normalized_outputs(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = fs::read_to_string(&p).unwrap();
            let norm = if name.ends_with(".json") {
                let mut v: Value = serde_json::from_str(&text).unwrap();
                strip_timing(&mut v);
                v.to_string()
            } else if name.starts_with("trace_") {
                drop_column(&text, "wall_time_s")
            } else if name == "cv.csv" {
                drop_column(&text, "cpu_time_s")
            } else {
                text
            };
            (name, norm)
        })
        .collect()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
