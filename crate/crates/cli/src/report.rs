//! Output plumbing: failures and exit codes, CSV tables, JSON reports and
//! stage timings.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use tau_core::Complex64;

#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Numerical { stage: String, message: String },
    Io(String),
}

impl Failure {
    pub fn numerical(stage: &str, e: tau_core::Error) -> Self {
        Failure::Numerical { stage: stage.to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Numerical { .. } => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Schema(m) => write!(f, "scenario error: {m}"),
            Failure::Numerical { stage, message } => write!(f, "numerical failure in {stage}: {message}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

pub fn cnum(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let io = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::Io(e.to_string()))
    }
}

/// One identity check: a residual against its tolerance.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub method: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, method: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), method: method.into(), value, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "method": self.method,
            "value": num(self.value),
            "tolerance": num(self.tolerance),
            "passed": self.passed(),
        })
    }
}

/// What a command produced: named tables, results and identity checks.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<(String, Table)>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Default)]
pub struct Timings {
    stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.stages
                .iter()
                .map(|(n, s)| json!({ "stage": n, "seconds": s }))
                .collect(),
        )
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
