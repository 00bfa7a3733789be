//! CSV input: one or two numeric columns, optionally preceded by an integer
//! group column.

use std::path::Path;

use pyics_core::model::Dataset;

use crate::error::{CliError, CliResult};

/// Parsed observations and, when present, their group labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub data: Dataset,
    pub groups: Option<Vec<i64>>,
}

/// How to treat the leading column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupColumn {
    /// Must be present.
    Required,
    /// Present only when the row has three columns.
    Infer,
    Absent,
}

fn data_error(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

/// Reads and parses `path`.
pub fn ingest_csv(path: &Path, group: GroupColumn) -> CliResult<Ingested> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| data_error(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(&text, group).map_err(|e| match e {
        CliError::Data(msg) => data_error(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses CSV text. A first row with no numeric cell is taken as a header.
/// Rows are numbered from 1 in error messages, header included.
pub fn parse_csv(text: &str, group: GroupColumn) -> CliResult<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_error(format!("row {}: {e}", i + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((i + 1, record));
    }
    if let Some((_, first)) = rows.first() {
        if first.iter().all(|c| c.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
    let Some((_, first)) = rows.first() else {
        return Err(data_error("no observations"));
    };
    let width = first.len();
    let has_group = match (group, width) {
        (GroupColumn::Required, 1) => return Err(data_error("a leading group column is required")),
        (GroupColumn::Required, _) => true,
        (GroupColumn::Infer, 3) => true,
        (GroupColumn::Absent, 3) => {
            return Err(data_error(
                "three columns found but a group column is not expected",
            ))
        }
        _ => false,
    };
    let dim = width - has_group as usize;
    if !(1..=2).contains(&dim) {
        return Err(data_error(format!(
            "expected 1 or 2 numeric columns, found {dim}"
        )));
    }
    let mut values = Vec::with_capacity(rows.len() * dim);
    let mut groups = Vec::new();
    for (row, record) in &rows {
        if record.len() != width {
            return Err(data_error(format!(
                "row {row}: expected {width} columns, found {}",
                record.len()
            )));
        }
        let mut cells = record.iter().enumerate();
        if has_group {
            let (_, cell) = cells.next().unwrap_or((0, ""));
            let g = cell.parse::<i64>().map_err(|_| {
                data_error(format!(
                    "row {row}, column 1: group label {cell:?} is not an integer"
                ))
            })?;
            groups.push(g);
        }
        for (col, cell) in cells {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    data_error(format!(
                        "row {row}, column {}: cannot parse {cell:?} as a number",
                        col + 1
                    ))
                })?;
            values.push(v);
        }
    }
    let data = Dataset::new(dim, values).map_err(|e| data_error(e.to_string()))?;
    Ok(Ingested {
        data,
        groups: has_group.then_some(groups),
    })
}
