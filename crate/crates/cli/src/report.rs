//! Merges `summary.json` files into one table.
//!
//! Each summary contributes one row of flattened scalars, or one row per
//! entry when it carries a `sweep` list. Rows are ordered by `h`, then `n`,
//! then source path.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Debug)]
pub struct Row {
    pub source: String,
    pub h: f64,
    pub n: Option<u64>,
    pub cells: Map<String, Value>,
}

pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(_) => {}
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn load(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("summary {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("summary {}: {e}", path.display())))
}

pub fn build(paths: &[PathBuf]) -> Result<Report, CliError> {
    if paths.is_empty() {
        return Err(CliError::Validation("report: no summary paths given".into()));
    }
    let mut rows = Vec::new();
    for path in paths {
        let v = load(path)?;
        let source = path.display().to_string();
        let h = v.pointer("/grid/h").and_then(Value::as_f64).ok_or_else(|| {
            CliError::Validation(format!("summary {source}: missing grid.h"))
        })?;
        let mut base = Map::new();
        flatten("", &v, &mut base);
        base.remove("wall_time");
        match v.get("sweep").and_then(Value::as_array) {
            Some(entries) => {
                for e in entries {
                    let mut cells = base.clone();
                    flatten("", e, &mut cells);
                    let n = e.get("n").and_then(Value::as_u64);
                    rows.push(Row { source: source.clone(), h, n, cells });
                }
            }
            None => rows.push(Row { source, h, n: None, cells: base }),
        }
    }
    rows.sort_by(|a, b| a.h.total_cmp(&b.h).then(a.n.cmp(&b.n)).then(a.source.cmp(&b.source)));
    let mut keys = BTreeSet::new();
    for r in &rows {
        keys.extend(r.cells.keys().cloned());
    }
    keys.remove("n");
    let mut columns = vec!["h".to_string()];
    if rows.iter().any(|r| r.n.is_some()) {
        columns.push("n".into());
    }
    columns.push("source".into());
    columns.extend(keys.into_iter().filter(|k| k != "grid.h"));
    Ok(Report { columns, rows })
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(x) => x.to_string(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    fn value(&self, row: &Row, col: &str) -> String {
        match col {
            "h" => Value::from(row.h).to_string(),
            "n" => row.n.map(|n| n.to_string()).unwrap_or_default(),
            "source" => row.source.clone(),
            _ => cell(row.cells.get(col)),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<_> = self.columns.iter().map(|c| quote(&self.value(r, c))).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// One line per row with the headline scalars that are present.
    pub fn digest(&self) -> String {
        const HEADLINE: [&str; 12] = [
            "command",
            "converged",
            "iterations",
            "ma_mass_total",
            "v_origin",
            "sup_diff_to_limit",
            "monotonicity_violation",
            "sandwich.upper_defect",
            "sandwich.lower_defect",
            "image.defect",
            "gauge.bump.max_defect",
            "lift.chart_consistency",
        ];
        let mut s = String::new();
        let _ = writeln!(s, "{} row(s)", self.rows.len());
        for r in &self.rows {
            let _ = write!(s, "h={}", self.value(r, "h"));
            if let Some(n) = r.n {
                let _ = write!(s, " n={n}");
            }
            for k in HEADLINE {
                if let Some(v) = r.cells.get(k) {
                    if !v.is_null() {
                        let _ = write!(s, " {k}={}", cell(Some(v)));
                    }
                }
            }
            let _ = writeln!(s, " [{}]", r.source);
        }
        s
    }
}
