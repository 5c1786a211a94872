use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, ColumnKind, DataTable};
use crate::error::{invalid, Result};
use crate::matrix::Matrix;

/// Where an encoded matrix column came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnOrigin {
    Numeric { source: String },
    Level { source: String, level: String },
}

impl ColumnOrigin {
    pub fn source(&self) -> &str {
        match self {
            ColumnOrigin::Numeric { source } | ColumnOrigin::Level { source, .. } => source,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ColumnOrigin::Numeric { source } => source.clone(),
            ColumnOrigin::Level { source, level } => format!("{source}={level}"),
        }
    }
}

/// Numeric block plus one-hot indicator block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub values: Matrix,
    pub column_map: Vec<ColumnOrigin>,
    pub numeric_block: Vec<usize>,
    pub categorical_block: Vec<usize>,
}

impl EncodedMatrix {
    pub fn numeric(&self) -> Matrix {
        self.values.select_cols(&self.numeric_block)
    }

    pub fn categorical(&self) -> Matrix {
        self.values.select_cols(&self.categorical_block)
    }

    fn distinct_sources(&self, block: &[usize]) -> usize {
        block
            .iter()
            .map(|&c| self.column_map[c].source())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn numeric_sources(&self) -> usize {
        self.distinct_sources(&self.numeric_block)
    }

    pub fn categorical_sources(&self) -> usize {
        self.distinct_sources(&self.categorical_block)
    }

    /// Share of categorical source columns among all source columns.
    pub fn categorical_share(&self) -> f64 {
        let c = self.categorical_sources();
        let total = c + self.numeric_sources();
        if total == 0 {
            0.0
        } else {
            c as f64 / total as f64
        }
    }

    /// Keeps only the listed matrix columns, preserving their order.
    pub fn keep_columns(&self, keep: &[usize]) -> Self {
        let values = self.values.select_cols(keep);
        let column_map: Vec<ColumnOrigin> = keep.iter().map(|&c| self.column_map[c].clone()).collect();
        let numeric_block = (0..keep.len())
            .filter(|&i| matches!(column_map[i], ColumnOrigin::Numeric { .. }))
            .collect();
        let categorical_block = (0..keep.len())
            .filter(|&i| matches!(column_map[i], ColumnOrigin::Level { .. }))
            .collect();
        Self {
            values,
            column_map,
            numeric_block,
            categorical_block,
        }
    }
}

/// One-hot encodes categorical columns; numeric columns pass through unchanged
/// and ordinal columns enter the numeric block as their level rank.
///
/// Levels are emitted in sorted order, including `UNK` when it occurs.
pub fn one_hot_encode(table: &DataTable) -> Result<EncodedMatrix> {
    let n = table.n_rows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut column_map = Vec::new();
    for (s, c) in table.schema().iter().zip(table.columns()) {
        match (s.kind, c) {
            (ColumnKind::Numeric, ColumnData::Numeric(v)) => {
                cols.push(v.clone());
                column_map.push(ColumnOrigin::Numeric {
                    source: s.name.clone(),
                });
            }
            (ColumnKind::Ordinal, ColumnData::Categorical(v)) => {
                let ranks = v
                    .iter()
                    .enumerate()
                    .map(|(row, x)| {
                        s.level_rank(x).map(|r| r as f64).ok_or_else(|| {
                            crate::Error::Parse {
                                row,
                                column: s.name.clone(),
                                message: format!("unknown ordinal level `{x}`"),
                            }
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                cols.push(ranks);
                column_map.push(ColumnOrigin::Numeric {
                    source: s.name.clone(),
                });
            }
            (_, ColumnData::Categorical(v)) => {
                let levels: BTreeSet<&str> = v.iter().map(String::as_str).collect();
                if levels.is_empty() {
                    return invalid(format!("categorical column `{}` has no observed levels", s.name));
                }
                for level in levels {
                    cols.push(v.iter().map(|x| f64::from(u8::from(x == level))).collect());
                    column_map.push(ColumnOrigin::Level {
                        source: s.name.clone(),
                        level: level.to_string(),
                    });
                }
            }
            _ => unreachable!("table storage checked at construction"),
        }
    }
    let d = cols.len();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(cols.iter().map(|c| c[i]));
    }
    let values = Matrix::new(n, d, data)?;
    let numeric_block = (0..d)
        .filter(|&i| matches!(column_map[i], ColumnOrigin::Numeric { .. }))
        .collect();
    let categorical_block = (0..d)
        .filter(|&i| matches!(column_map[i], ColumnOrigin::Level { .. }))
        .collect();
    Ok(EncodedMatrix {
        values,
        column_map,
        numeric_block,
        categorical_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSchema, UNK};

    fn table(cols: Vec<(ColumnSchema, ColumnData)>) -> DataTable {
        let (s, c) = cols.into_iter().unzip();
        DataTable::new(s, c, None).unwrap()
    }

    fn cat(v: &[&str]) -> ColumnData {
        ColumnData::Categorical(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn two_level_indicators() {
        let t = table(vec![(ColumnSchema::categorical("c"), cat(&["a", "b", "a"]))]);
        let e = one_hot_encode(&t).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(e.categorical_block, vec![0, 1]);
    }

    #[test]
    fn all_unk_column_is_single_indicator() {
        let t = table(vec![(ColumnSchema::categorical("c"), cat(&[UNK, UNK]))]);
        let e = one_hot_encode(&t).unwrap();
        assert_eq!(e.values.cols(), 1);
        assert_eq!(e.values.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn arity_of_two_columns() {
        let t = table(vec![
            (ColumnSchema::categorical("a"), cat(&["x", "y", "z", "x"])),
            (ColumnSchema::numeric("n"), ColumnData::Numeric(vec![1.0, 2.0, 3.0, 4.0])),
            (ColumnSchema::categorical("b"), cat(&["p", "q", "r", "s"])),
        ]);
        let e = one_hot_encode(&t).unwrap();
        assert_eq!(e.categorical_block.len(), 7);
        assert_eq!(e.numeric_block, vec![3]);
        assert_eq!(e.numeric().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert!((e.categorical_share() - 2.0 / 3.0).abs() < 1e-15);
        // every source block sums to one per row
        for i in 0..4 {
            let r = e.values.row(i);
            assert_eq!(r[0] + r[1] + r[2], 1.0);
            assert_eq!(r[4] + r[5] + r[6] + r[7], 1.0);
        }
    }

    #[test]
    fn ordinal_enters_numeric_block_as_rank() {
        let t = table(vec![(
            ColumnSchema::ordinal("rank", &["low", "mid", "high"]),
            cat(&["high", "low", "mid"]),
        )]);
        let e = one_hot_encode(&t).unwrap();
        assert_eq!(e.values.as_slice(), &[2.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_table_categorical_is_error() {
        let t = table(vec![(ColumnSchema::categorical("c"), cat(&[]))]);
        assert!(one_hot_encode(&t).is_err());
    }
}
