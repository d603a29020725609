//! CSV and plain-text report writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{KwsError, Result};

/// Identifies the run that produced a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!("# snnkws {} seed={} config={}", env!("CARGO_PKG_VERSION"), self.seed, self.config_hash)
    }
}

/// A CSV table preceded by the provenance comment.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut out = prov.comment();
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Fixed six-decimal formatting keeps reports byte-stable.
pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

/// `key: value` lines under the provenance comment.
#[derive(Debug, Clone, Default)]
pub struct TextReport {
    lines: Vec<(String, String)>,
}

impl TextReport {
    pub fn line(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = prov.comment();
        out.push('\n');
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k:width$}  {v}");
        }
        out
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| KwsError::io(dir, e))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| KwsError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_comment_header_and_escapes() {
        let prov = Provenance { seed: 3, config_hash: "abc".into() };
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let csv = t.to_csv(&prov);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# snnkws ") && lines[0].ends_with("seed=3 config=abc"));
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,\"x,y\"");
    }
}
