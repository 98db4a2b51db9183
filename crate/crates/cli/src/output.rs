//! Result tables. CSV is canonical: `#` metadata lines, a header row, then one
//! row per sweep point. JSON carries the same metadata, header and rows.
//!
//! Output goes to `<path>.partial` and is renamed once the last row is in.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(value: Option<f64>) -> Self {
        value.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // JSON has no NaN or infinity
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Shortest round-trip decimal; exponent notation outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub entries: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

pub struct TableWriter {
    path: PathBuf,
    partial: PathBuf,
    file: BufWriter<File>,
    format: TableFormat,
    metadata: Metadata,
    columns: &'static [&'static str],
    json_rows: Vec<Value>,
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

impl TableWriter {
    pub fn create(
        path: &Path,
        format: TableFormat,
        metadata: Metadata,
        columns: &'static [&'static str],
    ) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let partial = partial_path(path);
        let mut file = BufWriter::new(File::create(&partial)?);
        if format == TableFormat::Csv {
            for (key, value) in &metadata.entries {
                writeln!(file, "# {key}: {value}")?;
            }
            writeln!(file, "{}", columns.join(","))?;
            file.flush()?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            partial,
            file,
            format,
            metadata,
            columns,
            json_rows: Vec::new(),
        })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        match self.format {
            TableFormat::Csv => {
                let line: Vec<String> = cells.iter().map(Cell::csv).collect();
                writeln!(self.file, "{}", line.join(","))?;
                // rows are slow to produce; make each visible as it lands
                self.file.flush()
            }
            TableFormat::Json => {
                self.json_rows.push(Value::Array(cells.iter().map(Cell::json).collect()));
                Ok(())
            }
        }
    }

    pub fn finish(mut self) -> io::Result<PathBuf> {
        if self.format == TableFormat::Json {
            let metadata: serde_json::Map<String, Value> = self
                .metadata
                .entries
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            let doc = json!({
                "metadata": metadata,
                "columns": self.columns,
                "rows": self.json_rows,
            });
            serde_json::to_writer_pretty(&mut self.file, &doc)?;
            writeln!(self.file)?;
        }
        self.file.flush()?;
        self.file.get_ref().sync_all()?;
        std::fs::rename(&self.partial, &self.path)?;
        Ok(self.path)
    }
}
