#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn shipped_config_path() -> PathBuf {
    repo_root().join("configs/paper_source.json")
}

pub fn materials_path() -> PathBuf {
    repo_root()
        .join("data/materials.json")
        .canonicalize()
        .unwrap()
}

/// The shipped config as JSON, with the materials path made absolute.
pub fn shipped_json() -> Value {
    let text = std::fs::read_to_string(shipped_config_path()).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["materials"] = Value::String(materials_path().to_string_lossy().into_owned());
    v
}

/// Writes `v` as a config file in `dir` and returns its path.
pub fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let path = dir.join("source.json");
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}
