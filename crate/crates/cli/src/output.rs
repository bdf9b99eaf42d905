//! Output directory handling: tables as CSV or JSON lines, raw files, and the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A rectangular result: one header, rows of already-formatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row given as one comma-separated line.
    pub fn push_line(&mut self, line: &str) {
        self.rows.push(line.split(',').map(str::to_string).collect());
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    fn json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let mut obj = Map::new();
            for (k, v) in self.header.iter().zip(r) {
                let value = if let Ok(i) = v.parse::<i64>() {
                    Value::from(i)
                } else if let Some(f) = v.parse::<f64>().ok().filter(|f| f.is_finite() && v.contains('.')) {
                    Value::from(f)
                } else {
                    match v.as_str() {
                        "true" => Value::Bool(true),
                        "false" => Value::Bool(false),
                        _ => Value::from(v.clone()),
                    }
                };
                obj.insert(k.clone(), value);
            }
            out.push_str(&Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

struct Artifact {
    file: String,
    quantity: String,
}

pub struct Run {
    dir: PathBuf,
    format: Format,
    command: String,
    config: Value,
    seed: u64,
    started: Instant,
    started_unix: u64,
    artifacts: Vec<Artifact>,
    summary: Map<String, Value>,
}

impl Run {
    pub fn start(dir: PathBuf, format: Format, command: &str, config: Value, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            format,
            command: command.to_string(),
            config,
            seed,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            artifacts: Vec::new(),
            summary: Map::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_raw(&mut self, file: &str, quantity: &str, contents: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(file), contents)?;
        self.artifacts.push(Artifact {
            file: file.to_string(),
            quantity: quantity.to_string(),
        });
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.jsonl` depending on the format.
    pub fn write_table(&mut self, stem: &str, quantity: &str, table: &Table) -> std::io::Result<String> {
        let (file, body) = match self.format {
            Format::Csv => (format!("{stem}.csv"), table.csv()),
            Format::Json => (format!("{stem}.jsonl"), table.json_lines()),
        };
        self.write_raw(&file, quantity, &body)?;
        Ok(file)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, file: &str, quantity: &str, records: &[T]) -> std::io::Result<()> {
        let mut body = String::new();
        for r in records {
            body.push_str(&serde_json::to_string(r).expect("records serialize"));
            body.push('\n');
        }
        self.write_raw(file, quantity, &body)
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Writes `manifest.json`; every exit path goes through here.
    pub fn finish(self, exit_code: i32, error: Option<Value>) -> std::io::Result<()> {
        let outputs: Vec<Value> = self
            .artifacts
            .iter()
            .map(|a| json!({ "file": a.file, "quantity": a.quantity }))
            .collect();
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "versions": {
                "randlab": env!("CARGO_PKG_VERSION"),
                "parallel": randlab::par::is_parallel(),
            },
            "started_unix": self.started_unix,
            "elapsed_ms": self.started.elapsed().as_millis() as u64,
            "exit_code": exit_code,
            "outputs": outputs,
            "summary": Value::Object(self.summary),
            "error": error.unwrap_or(Value::Null),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(self.dir.join("manifest.json"), text + "\n")
    }
}
