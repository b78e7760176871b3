//! Column-wise comparison of two CSV tables under absolute tolerances.

use std::fmt::Write as _;

use ssb_squeezing::csv::Table;

use crate::CliError;

/// One compared column pair with its allowed absolute deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCheck {
    pub a: String,
    pub b: String,
    pub tol: f64,
}

impl ColumnCheck {
    /// Parses `col=tol` (same column in both tables) or `a_col:b_col=tol`.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Config(format!(
                "tolerance spec must be col=tol or a_col:b_col=tol, got `{spec}`"
            ))
        };
        let (cols, tol) = spec.split_once('=').ok_or_else(bad)?;
        let tol: f64 = tol.trim().parse().map_err(|_| bad())?;
        if !(tol >= 0.0) {
            return Err(bad());
        }
        let (a, b) = match cols.split_once(':') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (cols.trim(), cols.trim()),
        };
        if a.is_empty() || b.is_empty() {
            return Err(bad());
        }
        Ok(Self {
            a: a.to_string(),
            b: b.to_string(),
            tol,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub check: ColumnCheck,
    pub max_dev: f64,
    /// Row index of the largest deviation.
    pub worst_row: usize,
}

impl ColumnReport {
    pub fn passed(&self) -> bool {
        self.max_dev <= self.check.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub columns: Vec<ColumnReport>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.columns.iter().all(ColumnReport::passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            let name = if c.check.a == c.check.b {
                c.check.a.clone()
            } else {
                format!("{}:{}", c.check.a, c.check.b)
            };
            let _ = writeln!(
                out,
                "{} {name}: max |dev| = {:e} at row {} (tol {:e})",
                if c.passed() { "PASS" } else { "FAIL" },
                c.max_dev,
                c.worst_row,
                c.check.tol
            );
        }
        let _ = writeln!(out, "{}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Deviation between two cells; matching NaNs (e.g. absent roots) agree.
fn deviation(x: f64, y: f64) -> f64 {
    match (x.is_nan(), y.is_nan()) {
        (true, true) => 0.0,
        (false, false) if x == y => 0.0,
        (false, false) => (x - y).abs(),
        _ => f64::INFINITY,
    }
}

fn column(t: &Table, name: &str, which: &str) -> Result<usize, CliError> {
    t.columns.iter().position(|c| c == name).ok_or_else(|| {
        CliError::Shape(format!(
            "column `{name}` missing from {which} (has: {})",
            t.columns.join(", ")
        ))
    })
}

/// Compares the requested columns. With no explicit checks every column the
/// tables share is compared at `default_tol`.
///
/// Tables must have the same number of rows, and a leading grid column
/// shared by name must agree exactly (to rounding), otherwise the grids are
/// misaligned and a [`CliError::Shape`] is returned.
pub fn compare(
    a: &Table,
    b: &Table,
    checks: &[ColumnCheck],
    default_tol: f64,
) -> Result<CompareReport, CliError> {
    if a.rows.len() != b.rows.len() {
        return Err(CliError::Shape(format!(
            "row counts differ: {} vs {}",
            a.rows.len(),
            b.rows.len()
        )));
    }
    if let (Some(ga), Some(gb)) = (a.columns.first(), b.columns.first()) {
        if ga == gb {
            for (i, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
                let scale = ra[0].abs().max(rb[0].abs()).max(1.0);
                if deviation(ra[0], rb[0]) > 1e-12 * scale {
                    return Err(CliError::Shape(format!(
                        "grid column `{ga}` differs at row {i}: {} vs {}",
                        ra[0], rb[0]
                    )));
                }
            }
        }
    }
    let checks: Vec<ColumnCheck> = if checks.is_empty() {
        let shared: Vec<_> = a.columns.iter().filter(|c| b.columns.contains(c)).collect();
        if shared.is_empty() {
            return Err(CliError::Shape("tables share no column names".into()));
        }
        shared
            .into_iter()
            .map(|c| ColumnCheck {
                a: c.clone(),
                b: c.clone(),
                tol: default_tol,
            })
            .collect()
    } else {
        checks.to_vec()
    };
    let mut columns = Vec::with_capacity(checks.len());
    for check in checks {
        let ja = column(a, &check.a, "first table")?;
        let jb = column(b, &check.b, "second table")?;
        let (mut max_dev, mut worst_row) = (0.0f64, 0);
        for (i, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
            let d = deviation(ra[ja], rb[jb]);
            if d > max_dev {
                max_dev = d;
                worst_row = i;
            }
        }
        columns.push(ColumnReport {
            check,
            max_dev,
            worst_row,
        });
    }
    Ok(CompareReport { columns })
}
