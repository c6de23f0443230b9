//! Deterministic CSV/JSON emission with provenance headers and atomic
//! writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA: &str = include_str!("../schema/columns.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Column names per file kind, read from the shipped schema.
pub fn columns(kind: &str) -> Vec<String> {
    static PARSED: OnceLock<Value> = OnceLock::new();
    let schema = PARSED.get_or_init(|| serde_json::from_str(SCHEMA).expect("schema file is valid JSON"));
    schema["files"][kind]
        .as_array()
        .unwrap_or_else(|| panic!("schema has no `{kind}` entry"))
        .iter()
        .map(|c| c["name"].as_str().expect("column name").to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => serde_json::to_string(v).expect("finite float"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

pub type Row = Vec<(&'static str, Cell)>;

/// Rows of one CSV kind, checked against the schema column order.
pub struct Table {
    kind: &'static str,
    rows: Vec<Row>,
}

impl Table {
    pub fn new(kind: &'static str) -> Self {
        Table { kind, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        let names: Vec<&str> = row.iter().map(|(n, _)| *n).collect();
        let expected = columns(self.kind);
        assert_eq!(names, expected, "row does not match the `{}` schema", self.kind);
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(r.iter().map(|(k, c)| (k.to_string(), c.json())).collect()))
                .collect(),
        )
    }

    fn to_csv(&self, header: &Header) -> String {
        let mut w = csv::Writer::from_writer(header.csv_lines().into_bytes());
        w.write_record(columns(self.kind)).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|(_, c)| c.csv())).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("CSV is UTF-8")
    }
}

/// Provenance stamped on every emitted file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
}

impl Header {
    /// The digest covers the fully resolved configuration, so identical
    /// inputs give identical headers.
    pub fn new(command: &str, resolved: &Value) -> Self {
        let canonical = serde_json::to_vec(resolved).expect("resolved config serializes");
        let digest = Sha256::digest(&canonical);
        let mut hex = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(hex, "{b:02x}");
        }
        Header { artifact: "pulsed-epr", version: VERSION, command: command.to_string(), config_sha256: hex }
    }

    fn csv_lines(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# config-sha256: {}\n",
            self.artifact, self.version, self.command, self.config_sha256
        )
    }
}

/// Writes into `dir`, each file through a temporary sibling renamed into
/// place.
pub struct Emitter {
    pub dir: PathBuf,
    pub format: Format,
    pub header: Header,
    pub resolved: Value,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: PathBuf, format: Format, header: Header, resolved: Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::io(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Emitter { dir, format, header, resolved, written: Vec::new() })
    }

    fn write_atomic(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let io = |e: std::io::Error| CliError::io(format!("writing {}: {e}", target.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        log::info!("wrote {}", target.display());
        self.written.push(target);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.format.csv() {
            let text = table.to_csv(&self.header);
            self.write_atomic(name, &text)?;
        }
        Ok(())
    }

    /// JSON document `{header, config, ...body}`.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        if self.format.json() {
            let mut doc = json!({ "header": self.header, "config": self.resolved });
            if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
                d.extend(b);
            }
            let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
            text.push('\n');
            self.write_atomic(name, &text)?;
        }
        Ok(())
    }

    pub fn paths(&self) -> Vec<String> {
        self.written.iter().map(|p| display(p)).collect()
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
