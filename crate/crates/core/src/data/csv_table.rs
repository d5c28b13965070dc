use std::path::Path;

use crate::error::{Error, Result};

/// A numeric CSV table. Cells that are blank, `NA` or unparseable are `None`
/// and their rows are listed in `flagged`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub flagged: Vec<usize>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// First of `aliases` present in the header.
    pub fn find_column(&self, aliases: &[&str]) -> Option<usize> {
        aliases.iter().find_map(|a| self.column_index(a))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a CSV with a header row. When a second header row follows a row of
/// placeholder names (the UCI spreadsheet export carries `X1, X2, ...` above
/// the real names), the row containing `header_hint` is used instead.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<RawTable> {
    load_csv_with_hint(path, label_column, None)
}

pub(crate) fn load_csv_with_hint(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    header_hint: Option<&str>,
) -> Result<RawTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut records = reader.records();

    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Data(format!("{} is empty", path.display()))),
    };
    let mut header: Vec<String> = first.iter().map(|h| h.trim().to_string()).collect();
    let mut pending = None;
    if let Some(hint) = header_hint {
        if !header.iter().any(|h| h == hint) {
            if let Some(second) = records.next() {
                let second = second?;
                if second.iter().any(|h| h.trim() == hint) {
                    header = second.iter().map(|h| h.trim().to_string()).collect();
                } else {
                    pending = Some(second);
                }
            }
        }
    }

    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for record in pending.into_iter().map(Ok).chain(records) {
        let record = record?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let mut row: Vec<Option<f64>> = record.iter().map(parse_cell).collect();
        row.resize(header.len(), None);
        if row.iter().any(Option::is_none) {
            flagged.push(rows.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "{} has a header but no data rows",
            path.display()
        )));
    }

    let table = RawTable {
        header,
        rows,
        flagged,
    };
    if let Some(label) = label_column {
        if table.column_index(label).is_none() {
            return Err(Error::Schema {
                missing: vec![label.to_string()],
                available: table.header.clone(),
            });
        }
    }
    Ok(table)
}
