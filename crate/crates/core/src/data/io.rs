use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{Map, Value};

use super::{ColumnData, ColumnKind, ColumnSchema, DataTable, UNK};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    JsonLines,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => TableFormat::JsonLines,
            _ => TableFormat::Csv,
        }
    }
}

/// Loads a table, choosing the reader from the file extension.
///
/// The header (or JSON keys) must cover exactly the schema's column names;
/// columns are reordered to schema order. Blank categorical cells become [`UNK`].
pub fn load_table(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<DataTable> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_table(BufReader::new(file), TableFormat::from_path(path), schema)
}

pub fn load_table_str(text: &str, format: TableFormat, schema: &[ColumnSchema]) -> Result<DataTable> {
    read_table(text.as_bytes(), format, schema)
}

fn read_table<R: Read>(reader: R, format: TableFormat, schema: &[ColumnSchema]) -> Result<DataTable> {
    let mut builders: Vec<Builder> = schema.iter().map(Builder::new).collect();
    match format {
        TableFormat::Csv => read_csv(reader, schema, &mut builders)?,
        TableFormat::JsonLines => read_jsonl(reader, schema, &mut builders)?,
    }
    let columns = builders.into_iter().map(Builder::finish).collect();
    DataTable::new(schema.to_vec(), columns, None)
}

enum Builder {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Builder {
    fn new(s: &ColumnSchema) -> Self {
        match s.kind {
            ColumnKind::Numeric => Builder::Numeric(Vec::new()),
            _ => Builder::Categorical(Vec::new()),
        }
    }

    fn push(&mut self, s: &ColumnSchema, row: usize, cell: &str) -> Result<()> {
        let cell = cell.trim();
        match self {
            Builder::Numeric(v) => {
                let x = cell.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    column: s.name.clone(),
                    message: format!("cannot parse `{cell}` as a number"),
                })?;
                v.push(x);
            }
            Builder::Categorical(v) => {
                if cell.is_empty() {
                    if s.kind == ColumnKind::Ordinal {
                        return Err(Error::Parse {
                            row,
                            column: s.name.clone(),
                            message: "empty ordinal cell".into(),
                        });
                    }
                    v.push(UNK.to_string());
                } else {
                    v.push(cell.to_string());
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> ColumnData {
        match self {
            Builder::Numeric(v) => ColumnData::Numeric(v),
            Builder::Categorical(v) => ColumnData::Categorical(v),
        }
    }
}

fn header_positions(found: &[String], schema: &[ColumnSchema]) -> Result<Vec<usize>> {
    let expected: Vec<String> = schema.iter().map(|s| s.name.clone()).collect();
    let mismatch = || Error::HeaderMismatch {
        expected: expected.clone(),
        found: found.to_vec(),
    };
    if found.len() != schema.len() {
        return Err(mismatch());
    }
    let index: HashMap<&str, usize> = found.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    if index.len() != found.len() {
        return Err(mismatch());
    }
    schema
        .iter()
        .map(|s| index.get(s.name.as_str()).copied().ok_or_else(mismatch))
        .collect()
}

fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema], builders: &mut [Builder]) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let pos = header_positions(&header, schema)?;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            let column = schema
                .get(rec.len().min(schema.len().saturating_sub(1)))
                .map(|s| s.name.clone())
                .unwrap_or_default();
            return Err(Error::Parse {
                row,
                column,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for ((s, b), &p) in schema.iter().zip(builders.iter_mut()).zip(&pos) {
            b.push(s, row, &rec[p])?;
        }
    }
    Ok(())
}

fn read_jsonl<R: Read>(reader: R, schema: &[ColumnSchema], builders: &mut [Builder]) -> Result<()> {
    let reader = BufReader::new(reader);
    let mut row = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let keys: Vec<String> = obj.keys().cloned().collect();
        header_positions(&keys, schema)?;
        for (s, b) in schema.iter().zip(builders.iter_mut()) {
            let cell = match &obj[&s.name] {
                Value::Null => String::new(),
                Value::String(v) => v.clone(),
                Value::Number(v) => v.to_string(),
                Value::Bool(v) => v.to_string(),
                other => {
                    return Err(Error::Parse {
                        row,
                        column: s.name.clone(),
                        message: format!("unsupported value {other}"),
                    })
                }
            };
            b.push(s, row, &cell)?;
        }
        row += 1;
    }
    Ok(())
}

/// Writes a table as CSV or JSON-lines according to the file extension.
pub fn write_table(table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = BufWriter::new(File::create(path)?);
    match TableFormat::from_path(path) {
        TableFormat::Csv => write_csv(table, file),
        TableFormat::JsonLines => write_jsonl(table, file),
    }
}

fn cell(c: &ColumnData, row: usize) -> String {
    match c {
        ColumnData::Numeric(v) => v[row].to_string(),
        ColumnData::Categorical(v) => v[row].clone(),
    }
}

pub fn write_csv<W: Write>(table: &DataTable, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(table.schema().iter().map(|s| s.name.as_str()))?;
    for row in 0..table.n_rows() {
        wtr.write_record(table.columns().iter().map(|c| cell(c, row)))?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_jsonl<W: Write>(table: &DataTable, mut w: W) -> Result<()> {
    for row in 0..table.n_rows() {
        let mut obj = Map::new();
        for (s, c) in table.schema().iter().zip(table.columns()) {
            let v = match c {
                ColumnData::Numeric(v) => serde_json::Number::from_f64(v[row])
                    .map(Value::Number)
                    .ok_or_else(|| Error::InvalidArgument(format!("non-finite value in `{}`", s.name)))?,
                ColumnData::Categorical(v) => Value::String(v[row].clone()),
            };
            obj.insert(s.name.clone(), v);
        }
        serde_json::to_writer(&mut w, &obj)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
