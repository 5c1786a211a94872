//! Tabular data model: schemas, mixed-type tables, validation.

mod io;
mod synth;

pub use io::{load_table, load_table_str, write_csv, write_table, TableFormat};
pub use synth::{generate_monthly, generate_synthetic, MonthDraw, MonthlySpec, SyntheticSpec};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reserved level standing in for a missing categorical value.
pub const UNK: &str = "UNK";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Ordinal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    /// Ordered level list, required for ordinal columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            units: None,
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            units: None,
            levels: Vec::new(),
        }
    }

    pub fn ordinal(name: impl Into<String>, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Ordinal,
            units: None,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Rank of an ordinal level, if it belongs to the declared list.
    pub fn level_rank(&self, value: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == value)
    }
}

/// Values stored for one column. Ordinal columns hold their level text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(idx.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(idx.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Immutable mixed-type table, one row per visit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    schema: Vec<ColumnSchema>,
    columns: Vec<ColumnData>,
    period: Option<String>,
}

impl DataTable {
    /// Assembles a table, checking only structural consistency.
    ///
    /// Semantic problems (duplicate names, non-finite numbers, unknown
    /// ordinal levels) are left for [`validate_schema`] to report.
    pub fn new(
        schema: Vec<ColumnSchema>,
        columns: Vec<ColumnData>,
        period: Option<String>,
    ) -> Result<Self> {
        if schema.len() != columns.len() {
            return invalid(format!(
                "{} schema entries but {} columns",
                schema.len(),
                columns.len()
            ));
        }
        let n = columns.first().map_or(0, ColumnData::len);
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != n {
                return invalid(format!("column `{}` has {} rows, expected {n}", s.name, c.len()));
            }
            let ok = matches!(
                (s.kind, c),
                (ColumnKind::Numeric, ColumnData::Numeric(_))
                    | (ColumnKind::Categorical, ColumnData::Categorical(_))
                    | (ColumnKind::Ordinal, ColumnData::Categorical(_))
            );
            if !ok {
                return invalid(format!("column `{}` storage does not match its kind", s.name));
            }
        }
        Ok(Self {
            schema,
            columns,
            period,
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn period(&self) -> Option<&str> {
        self.period.as_deref()
    }

    pub fn with_period(mut self, period: Option<String>) -> Self {
        self.period = period;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, ColumnData::len)
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn column(&self, name: &str) -> Option<(&ColumnSchema, &ColumnData)> {
        self.column_index(name)
            .map(|i| (&self.schema[i], &self.columns[i]))
    }

    /// Categorical (or ordinal) values of a column.
    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.column(name) {
            Some((_, ColumnData::Categorical(v))) => Ok(v),
            Some(_) => invalid(format!("column `{name}` is not categorical")),
            None => invalid(format!("no column named `{name}`")),
        }
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some((_, ColumnData::Numeric(v))) => Ok(v),
            Some(_) => invalid(format!("column `{name}` is not numeric")),
            None => invalid(format!("no column named `{name}`")),
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let Some(i) = self.column_index(name) else {
                return invalid(format!("no column named `{name}`"));
            };
            schema.push(self.schema[i].clone());
            columns.push(self.columns[i].clone());
        }
        Ok(Self {
            schema,
            columns,
            period: self.period.clone(),
        })
    }

    /// Drops the named columns; unknown names are ignored.
    pub fn drop_columns<S: AsRef<str>>(&self, names: &[S]) -> Self {
        let keep: Vec<&str> = self
            .schema
            .iter()
            .map(|s| s.name.as_str())
            .filter(|n| !names.iter().any(|d| d.as_ref() == *n))
            .collect();
        self.select_columns(&keep).expect("kept columns exist")
    }

    /// New table holding the given rows in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            period: self.period.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    DuplicateColumn { name: String },
    NonFinite { column: String, row: usize },
    UnknownLevel { column: String, row: usize, value: String },
    MissingLevels { column: String },
    BadPeriod { period: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateColumn { name } => write!(f, "duplicate column name `{name}`"),
            Violation::NonFinite { column, row } => {
                write!(f, "non-finite value in column `{column}` at row {row}")
            }
            Violation::UnknownLevel { column, row, value } => {
                write!(f, "unknown level `{value}` in ordinal column `{column}` at row {row}")
            }
            Violation::MissingLevels { column } => {
                write!(f, "ordinal column `{column}` declares no levels")
            }
            Violation::BadPeriod { period } => write!(f, "period `{period}` is not YYYY-MM"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Returns `true` for strings of the form `YYYY-MM` with a valid month.
pub fn is_month_tag(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 7 || b[4] != b'-' {
        return false;
    }
    if !b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit) {
        return false;
    }
    matches!(s[5..].parse::<u32>(), Ok(1..=12))
}

/// Lists every violation of the table invariants.
pub fn validate_schema(table: &DataTable) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for s in &table.schema {
        if !seen.insert(s.name.as_str()) {
            violations.push(Violation::DuplicateColumn {
                name: s.name.clone(),
            });
        }
    }
    for (s, c) in table.schema.iter().zip(&table.columns) {
        match (s.kind, c) {
            (ColumnKind::Numeric, ColumnData::Numeric(v)) => {
                for (row, x) in v.iter().enumerate() {
                    if !x.is_finite() {
                        violations.push(Violation::NonFinite {
                            column: s.name.clone(),
                            row,
                        });
                    }
                }
            }
            (ColumnKind::Ordinal, ColumnData::Categorical(v)) => {
                if s.levels.is_empty() {
                    violations.push(Violation::MissingLevels {
                        column: s.name.clone(),
                    });
                    continue;
                }
                for (row, x) in v.iter().enumerate() {
                    if s.level_rank(x).is_none() {
                        violations.push(Violation::UnknownLevel {
                            column: s.name.clone(),
                            row,
                            value: x.clone(),
                        });
                    }
                }
            }
            _ => {}
        }
    }
    if let Some(p) = &table.period {
        if !is_month_tag(p) {
            violations.push(Violation::BadPeriod { period: p.clone() });
        }
    }
    ValidationReport { violations }
}
