//! Deterministic CSV and JSON emission with content digests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Column-major table; every column has the same length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Column)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Int(Vec<u64>),
    Float(Vec<f64>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Float(v) => v.len(),
        }
    }
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn int(mut self, name: &str, values: Vec<u64>) -> Self {
        self.columns.push((name.to_string(), Column::Int(values)));
        self
    }

    pub fn float(mut self, name: &str, values: Vec<f64>) -> Self {
        self.columns.push((name.to_string(), Column::Float(values)));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn header(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn to_csv(&self) -> String {
        debug_assert!(self.columns.iter().all(|(_, c)| c.len() == self.rows()));
        let mut out = self.header().join(",");
        out.push('\n');
        for i in 0..self.rows() {
            for (j, (_, col)) in self.columns.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match col {
                    Column::Int(v) => write!(out, "{}", v[i]).unwrap(),
                    Column::Float(v) => out.push_str(&format_float(v[i])),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, col) in &self.columns {
            let values = match col {
                Column::Int(v) => v.iter().map(|&x| Value::from(x)).collect(),
                Column::Float(v) => v.iter().map(|&x| float(x)).collect(),
            };
            map.insert(name.clone(), Value::Array(values));
        }
        Value::Object(map)
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number, or `null` for non-finite values.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Rebuilds every object with its keys in sorted order.
pub fn sorted(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sorted(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn to_json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(&sorted(value.clone())).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFile {
    /// Path relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Output directory that records what it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<WrittenFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[WrittenFile] {
        &self.written
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(WrittenFile {
            name: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    /// Writes without adding the file to the digest list.
    pub fn write_untracked(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
    }
}
