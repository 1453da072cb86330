use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::BenchError;

/// A numeric table with a one-line description.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: String,
    pub comment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(id: &str, comment: &str, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Table { id: id.into(), comment: comment.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Six significant digits; integers below `1e6` are printed exactly.
fn fmt6(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.5e}")
    }
}

/// CSV with a `#` comment line, a header row and one row per entry.
pub fn emit_table(table: &Table) -> Result<String, BenchError> {
    if table.rows.is_empty() {
        return Err(BenchError::IncompleteReport(format!("table {} has no rows", table.id)));
    }
    if let Some(r) = table.rows.iter().find(|r| r.len() != table.columns.len()) {
        return Err(BenchError::IncompleteReport(format!(
            "table {}: row has {} values for {} columns",
            table.id,
            r.len(),
            table.columns.len()
        )));
    }
    let mut out = format!("# table {}: {}\n", table.id, table.comment);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt6(v)).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    Ok(out)
}

/// Inverse of [`emit_table`] up to the printed precision.
pub fn parse_table(csv: &str) -> Result<Table, BenchError> {
    let bad = |m: String| BenchError::IncompleteReport(m);
    let mut lines = csv.lines();
    let head = lines.next().ok_or_else(|| bad("empty table".into()))?;
    let (id, comment) = head
        .strip_prefix("# table ")
        .and_then(|h| h.split_once(": "))
        .ok_or_else(|| bad(format!("bad comment line `{head}`")))?;
    let columns: Vec<String> = lines.next().ok_or_else(|| bad("missing header".into()))?.split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',').map(|c| c.parse::<f64>().map_err(|e| bad(format!("`{c}`: {e}")))).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table { id: id.into(), comment: comment.into(), columns, rows })
}

/// Writes an `x,y` series to `dir/name.csv`.
pub fn write_series(dir: &Path, name: &str, xs: &[f64], ys: &[f64]) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir)?;
    let mut out = String::from("x,y\n");
    for (x, y) in xs.iter().zip(ys) {
        writeln!(out, "{},{}", fmt6(*x), fmt6(*y)).unwrap();
    }
    let path = dir.join(format!("{name}.csv"));
    fs::write(&path, out)?;
    Ok(path)
}
