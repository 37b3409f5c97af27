#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxrelax"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env("RUST_LOG", "error").output().expect("binary runs")
}

/// Run and insist on success, returning standard output.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "fluxrelax {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn device(id: &str) -> String {
    repo_root()
        .join("data/devices")
        .join(format!("{}.json", id.to_lowercase()))
        .display()
        .to_string()
}

pub const QUBITS: [&str; 8] = ["A1", "A2", "A3", "A4", "A5", "B1", "B2", "B3"];

/// Validate a document against the in-repo schema named by its `schema` field.
pub fn assert_schema_valid(doc: &Value) {
    let id = doc["schema"].as_str().expect("schema field");
    let name = id.split('/').nth(1).expect("schema id has a name");
    let path = repo_root().join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    if let Err(e) = jsonschema::validate(&schema, doc) {
        panic!("{id} document does not match {}: {e}", path.display());
    }
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV text as header-keyed string maps.
pub fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let headers: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| headers.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

pub fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(h, _)| h == name).unwrap().1
}
