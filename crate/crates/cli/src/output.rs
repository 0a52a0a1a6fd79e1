use std::io::Write;
use std::path::Path;

use gibbslab_core::io::format_float;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(x) => json!(x),
            Cell::Float(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format, config: &Value) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut out = csv_preamble(config);
                out.extend_from_slice(self.columns.join(",").as_bytes());
                out.push(b'\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.extend_from_slice(cells.join(",").as_bytes());
                    out.push(b'\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                        Value::Object(obj)
                    })
                    .collect();
                json_document(json!({ "config": config, "rows": rows }))
            }
        }
    }
}

/// The `# {config}` line that opens every CSV output.
pub fn csv_preamble(config: &Value) -> Vec<u8> {
    format!("# {config}\n").into_bytes()
}

pub fn config_comment(config: &Value) -> String {
    config.to_string()
}

pub fn json_document(v: Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// One JSON line on standard error.
pub fn diag(level: &str, event: &str, fields: Value) {
    let mut obj = Map::new();
    obj.insert("level".into(), json!(level));
    obj.insert("event".into(), json!(event));
    if let Value::Object(f) = fields {
        obj.extend(f);
    }
    eprintln!("{}", Value::Object(obj));
}
