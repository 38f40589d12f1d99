//! Output files. Every JSON artifact carries a top-level `config_hash`;
//! every JSONL line carries one too.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const HASH_KEY: &str = "config_hash";

pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_owned() }
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }
    pub fn vocab(&self) -> PathBuf {
        self.root.join("features").join("vocab.json")
    }
    pub fn scaler(&self) -> PathBuf {
        self.root.join("features").join("scaler.json")
    }
    pub fn vectors(&self) -> PathBuf {
        self.root.join("features").join("vectors.jsonl")
    }
    pub fn cv_report(&self) -> PathBuf {
        self.root.join("svm").join("cv_report.json")
    }
    pub fn model(&self) -> PathBuf {
        self.root.join("svm").join("model.json")
    }
    pub fn votes(&self, model: &str) -> PathBuf {
        self.root.join("votes").join(format!("{model}.jsonl"))
    }
    pub fn decisions(&self) -> PathBuf {
        self.root.join("decisions.jsonl")
    }
    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.txt")
    }
    pub fn manifest(&self, command: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{command}.json"))
    }
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn stamp(value: Value, hash: &str) -> Result<Value, CliError> {
    match value {
        Value::Object(mut map) => {
            map.insert(HASH_KEY.into(), Value::String(hash.into()));
            Ok(Value::Object(map))
        }
        _ => Err(CliError::Data("artifact is not a JSON object".into())),
    }
}

fn unstamp(path: &Path, mut value: Value, hash: &str) -> Result<Value, CliError> {
    let found = value
        .as_object_mut()
        .and_then(|m| m.remove(HASH_KEY))
        .and_then(|v| v.as_str().map(str::to_owned));
    match found {
        Some(h) if h == hash => Ok(value),
        Some(h) => Err(CliError::Data(format!(
            "{} was produced by config {h}, current config is {hash}",
            path.display()
        ))),
        None => Err(CliError::Data(format!("{} has no {HASH_KEY}", path.display()))),
    }
}

pub fn write_json<T: Serialize>(path: &Path, item: &T, hash: &str) -> Result<(), CliError> {
    let value = stamp(serde_json::to_value(item).expect("artifact serializes"), hash)?;
    let mut text = serde_json::to_string_pretty(&value).expect("artifact serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Like [`write_json`] for a value already in JSON text form.
pub fn write_json_text(path: &Path, json: &str, hash: &str) -> Result<(), CliError> {
    let value: Value = serde_json::from_str(json).map_err(|e| CliError::Data(e.to_string()))?;
    write_json(path, &value, hash)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T], hash: &str) -> Result<(), CliError> {
    let mut out = String::new();
    for item in items {
        let value = stamp(serde_json::to_value(item).expect("artifact serializes"), hash)?;
        out.push_str(&value.to_string());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Data(format!("missing or unreadable artifact {}: {e}", path.display()))
    })
}

/// Reads a JSON artifact, refusing it unless it carries `hash`.
pub fn read_json_value(path: &Path, hash: &str) -> Result<Value, CliError> {
    let value: Value =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    unstamp(path, value, hash)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, hash: &str) -> Result<T, CliError> {
    serde_json::from_value(read_json_value(path, hash)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, hash: &str) -> Result<Vec<T>, CliError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: serde_json::Error| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1));
        let value = unstamp(path, serde_json::from_str(line).map_err(at)?, hash)?;
        out.push(serde_json::from_value(value).map_err(at)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamped_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a").join("x.json");
        write_json(&p, &serde_json::json!({"k": 1}), "h1").unwrap();
        assert_eq!(read_json_value(&p, "h1").unwrap(), serde_json::json!({"k": 1}));
        let err = read_json_value(&p, "h2").unwrap_err();
        assert!(err.to_string().contains("h1"));
        let l = dir.path().join("x.jsonl");
        write_jsonl(&l, &[serde_json::json!({"id": "a"}), serde_json::json!({"id": "b"})], "h1").unwrap();
        let back: Vec<Value> = read_jsonl(&l, "h1").unwrap();
        assert_eq!(back.len(), 2);
        assert!(read_jsonl::<Value>(&l, "zz").is_err());
        assert!(!l.with_extension("tmp").exists());
    }
}
