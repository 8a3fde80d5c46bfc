#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridzo"))
}

pub fn hz(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn hybridzo")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// Stiff x-block problem: `a_x = 100`, `a_y = 1`, 20 identical samples
/// centered at the origin, start `x = 1`, `y = 10` per coordinate.
pub fn stiff_quadratic() -> Value {
    json!({
        "kind": "block_quadratic", "d_x": 10, "d_y": 10, "n": 20,
        "a_x": 100.0, "a_y": 1.0, "center": vec![0.0; 20]
    })
}

pub fn stiff_config(eta_x: f64, eta_y: f64) -> Value {
    json!({
        "objective": stiff_quadratic(),
        "init": {"kind": "constant", "x": 1.0, "y": 10.0},
        "rates": {"eta_x": eta_x, "eta_y": eta_y},
        "modes": {"x": "fo", "y": "fo"},
        "epochs": 200,
        "target": {"fraction": 0.01},
        "out": "trace.csv"
    })
}

/// Parsed CSV: header plus rows of string fields.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).expect("column");
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

/// First step whose value is strictly below `target`, from a trace CSV.
pub fn first_step_below(path: &Path, target: f64) -> Option<usize> {
    let steps = column(path, "step");
    let f = column(path, "f");
    steps
        .iter()
        .zip(&f)
        .find(|(_, &v)| v < target)
        .map(|(&s, _)| s as usize)
}

/// `f_k = Σ_b ½ a_b ‖δ_b‖² (1 − η_b a_b)^{2k}` for full-gradient steps on a
/// block quadratic with identical samples.
pub fn closed_form_f(blocks: &[(f64, f64, f64)], k: usize) -> f64 {
    blocks
        .iter()
        .map(|&(a, delta_sq, eta)| 0.5 * a * delta_sq * (1.0 - eta * a).powi(2 * k as i32))
        .sum()
}

pub fn meta(out: &Path) -> Value {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    serde_json::from_str(&std::fs::read_to_string(PathBuf::from(s)).unwrap()).unwrap()
}
