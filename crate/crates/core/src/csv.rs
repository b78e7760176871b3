//! Minimal plot-ready CSV: `#`-prefixed header lines, one column-name row,
//! then numeric rows.

use std::fmt::Write as _;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.header.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Floats are written with `{:e}` (shortest round-trip form) so output is
    /// byte-reproducible.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut t = Table::default();
        let mut have_columns = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(h) = line.strip_prefix('#') {
                t.header.push(h.trim_start().to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !have_columns {
                t.columns = line.split(',').map(|s| s.trim().to_string()).collect();
                have_columns = true;
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| format!("line {}: {e}", lineno + 1))?;
            if row.len() != t.columns.len() {
                return Err(format!(
                    "line {}: {} cells, expected {}",
                    lineno + 1,
                    row.len(),
                    t.columns.len()
                ));
            }
            t.rows.push(row);
        }
        if !have_columns {
            return Err("no column-name row".into());
        }
        Ok(t)
    }
}
