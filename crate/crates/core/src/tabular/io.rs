use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;

use super::dataset::{Column, Dataset};
use super::schema::{ColumnKind, ColumnSchema, Role};
use crate::error::{Error, Result};

/// Result of reading a CSV file: the dataset plus counters for cells that
/// could not be mapped and were stored as missing.
#[derive(Debug, Clone)]
pub struct Ingest {
    pub dataset: Dataset,
    /// Category tokens not listed in the schema, per column.
    pub unknown_tokens: BTreeMap<String, usize>,
    /// Numeric cells that did not parse as a finite number, per column.
    pub unparseable_numbers: BTreeMap<String, usize>,
}

impl Ingest {
    pub fn warning_count(&self) -> usize {
        self.unknown_tokens.values().sum::<usize>() + self.unparseable_numbers.values().sum::<usize>()
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<Ingest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema).map_err(|e| match e {
        Error::EmptyInput(_) => Error::EmptyInput(path.display().to_string()),
        other => other,
    })
}

/// Reads CSV text with a header row. Header names must match the schema
/// names exactly (order free). Columns with role `ignore` are parsed past
/// and dropped from the resulting dataset.
pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema]) -> Result<Ingest> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let positions = match_header(&header, schema)?;

    let kept: Vec<(usize, &ColumnSchema)> =
        schema.iter().zip(&positions).filter(|(s, _)| s.role != Role::Ignore).map(|(s, &p)| (p, s)).collect();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); kept.len()];
    let mut unknown = BTreeMap::new();
    let mut unparseable = BTreeMap::new();

    for record in rdr.records() {
        let record = record?;
        for (slot, &(pos, col)) in kept.iter().enumerate() {
            let raw = record.get(pos).unwrap_or("").trim();
            let value = if raw.is_empty() {
                None
            } else {
                match col.kind {
                    ColumnKind::Numeric => match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => Some(v),
                        _ => {
                            *unparseable.entry(col.name.clone()).or_insert(0) += 1;
                            None
                        }
                    },
                    ColumnKind::Categorical | ColumnKind::Binary => match col.code_of(raw) {
                        Some(code) => Some(code as f64),
                        None => {
                            *unknown.entry(col.name.clone()).or_insert(0) += 1;
                            None
                        }
                    },
                }
            };
            cells[slot].push(value);
        }
    }
    if kept.is_empty() || cells[0].is_empty() {
        return Err(Error::EmptyInput("no data rows after header".into()));
    }
    for (name, n) in unknown.iter() {
        warn!("column `{name}`: {n} unknown category token(s) stored as missing");
    }
    for (name, n) in unparseable.iter() {
        warn!("column `{name}`: {n} unparseable number(s) stored as missing");
    }

    let columns = kept.iter().zip(cells).map(|(&(_, s), c)| Column::new(s.clone(), c)).collect::<Result<Vec<_>>>()?;
    Ok(Ingest { dataset: Dataset::new(columns)?, unknown_tokens: unknown, unparseable_numbers: unparseable })
}

fn match_header(header: &[String], schema: &[ColumnSchema]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    for h in header {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate header column `{h}`")));
        }
        if !schema.iter().any(|s| &s.name == h) {
            return Err(Error::Schema(format!("header column `{h}` is not in the schema")));
        }
    }
    schema
        .iter()
        .map(|s| {
            header
                .iter()
                .position(|h| h == &s.name)
                .ok_or_else(|| Error::Schema(format!("schema column `{}` is missing from the header", s.name)))
        })
        .collect()
}

/// Names from the first line of a CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

/// Writes the dataset with category tokens and shortest round-trip number
/// formatting; missing cells are empty fields.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ds.names())?;
    let mut record = Vec::with_capacity(ds.n_cols());
    for row in 0..ds.n_rows() {
        record.clear();
        for col in ds.columns() {
            let field = match col.get(row) {
                None => String::new(),
                Some(v) => match col.kind() {
                    ColumnKind::Numeric => format_number(v),
                    _ => col.schema().token_of(v as usize).unwrap_or_default().to_string(),
                },
            };
            record.push(field);
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

/// Locale-independent shortest representation that parses back exactly.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}
