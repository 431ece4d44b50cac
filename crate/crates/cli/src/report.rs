use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "avmac";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round to nine significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn fmt_float(x: f64) -> String {
    serde_json::to_string(&round9(x)).expect("float serializes")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(f) = n.as_f64() {
                *v = serde_json::Number::from_f64(round9(f)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Common envelope of every report.
pub struct Report {
    pub command: &'static str,
    pub inputs: Vec<InputRecord>,
    pub config: Value,
    pub result: Value,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Report {
            command,
            inputs: Vec::new(),
            config: serde_json::to_value(config).expect("config serializes"),
            result: Value::Null,
        }
    }

    pub fn input(&mut self, role: &str, path: &str, bytes: &[u8]) {
        self.inputs.push(InputRecord {
            role: role.into(),
            path: path.into(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("tool".into(), TOOL.into());
        obj.insert("version".into(), VERSION.into());
        obj.insert("command".into(), self.command.into());
        obj.insert("inputs".into(), serde_json::to_value(&self.inputs).expect("inputs serialize"));
        obj.insert("config".into(), self.config.clone());
        obj.insert("result".into(), self.result.clone());
        Value::Object(obj)
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut v = v.clone();
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    text
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
