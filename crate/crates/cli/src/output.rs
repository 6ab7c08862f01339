//! CSV and JSON writers with fixed formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Null,
}

impl Cell {
    fn render(self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Float(v) => write!(out, "{v:.16e}"),
            Cell::Null => write!(out, "null"),
        }
        .expect("writing to a String cannot fail");
    }
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            body: String::new(),
        }
    }

    pub fn push(&mut self, row: &[Cell]) {
        debug_assert_eq!(row.len(), self.header.len());
        for (k, cell) in row.iter().enumerate() {
            if k > 0 {
                self.body.push(',');
            }
            cell.render(&mut self.body);
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        s.push_str(&self.body);
        s
    }
}

/// Pretty JSON with a trailing newline; key order follows field order.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
