//! CSV tables, JSON summaries and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// One cell of a CSV row.
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::S(String::new()), Cell::F)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Cell::F(v) => fmt_f64(*v),
        Cell::U(v) => v.to_string(),
        Cell::B(v) => v.to_string(),
        Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
    }
}

pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width does not match header");
        let line: Vec<String> = cells.iter().map(fmt_cell).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("summary serializes");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InvalidConfig,
    NumericalFailure,
    CheckFailed,
    IoError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvalidConfig => 1,
            Status::NumericalFailure | Status::IoError => 2,
            Status::CheckFailed => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Status,
    pub task: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: Status,
    pub wall_seconds: f64,
}

/// Pass/fail of one acceptance criterion evaluated by a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config_hash: Option<String>,
    pub config: Option<Value>,
    pub status: Status,
    pub exit_code: i32,
    pub check: bool,
    pub wall_seconds: f64,
    pub tasks: Vec<TaskRecord>,
    pub outputs: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Collects outputs and task records while a run executes.
pub struct RunContext {
    pub dir: PathBuf,
    pub tasks: Vec<TaskRecord>,
    pub outputs: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub criteria: Vec<Criterion>,
}

impl RunContext {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, tasks: Vec::new(), outputs: Vec::new(), diagnostics: Vec::new(), criteria: Vec::new() }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        write_atomic(&self.dir.join(name), bytes)?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: Table) -> std::io::Result<()> {
        self.write(name, table.into_string().as_bytes())
    }

    /// Times `f` and records it as a task; failures become diagnostics.
    pub fn task<T>(&mut self, name: &str, f: impl FnOnce() -> hyperlab::Result<T>) -> Result<T, Diagnostic> {
        let start = Instant::now();
        let out = f();
        let wall_seconds = start.elapsed().as_secs_f64();
        let status = match &out {
            Ok(_) => Status::Ok,
            Err(hyperlab::LabError::Invalid(_)) => Status::InvalidConfig,
            Err(hyperlab::LabError::Numerical(_)) => Status::NumericalFailure,
        };
        self.tasks.push(TaskRecord { name: name.to_string(), status, wall_seconds });
        out.map_err(|e| Diagnostic { code: status, task: Some(name.to_string()), message: e.to_string() })
    }

    pub fn criterion(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        self.criteria.push(Criterion { id, name: name.to_string(), pass, detail });
    }
}
