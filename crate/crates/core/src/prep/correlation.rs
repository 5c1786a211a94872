use serde::{Deserialize, Serialize};

use super::encode::{ColumnOrigin, EncodedMatrix};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub a: String,
    pub b: String,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub cutoff: f64,
    pub flagged: Vec<CorrelatedPair>,
    pub zero_variance: Vec<String>,
    pub max_abs: f64,
}

impl ScreenReport {
    pub fn passes(&self) -> bool {
        self.flagged.is_empty()
    }
}

fn same_block(a: &ColumnOrigin, b: &ColumnOrigin) -> bool {
    matches!((a, b), (ColumnOrigin::Level { source: x, .. }, ColumnOrigin::Level { source: y, .. }) if x == y)
}

/// Pairwise absolute Pearson correlation over all matrix columns. Indicator
/// columns from the same source are not compared with each other.
pub fn correlation_screen(m: &EncodedMatrix, cutoff: f64) -> Result<ScreenReport> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return invalid(format!("cutoff must lie in (0,1], got {cutoff}"));
    }
    let v = &m.values;
    let n = v.rows();
    let d = v.cols();
    let mut centered: Vec<Option<Vec<f64>>> = Vec::with_capacity(d);
    let mut zero_variance = Vec::new();
    for j in 0..d {
        let col = v.column(j);
        let mean = col.iter().sum::<f64>() / n.max(1) as f64;
        let c: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let ss: f64 = c.iter().map(|x| x * x).sum();
        if ss > 0.0 && ss.is_finite() {
            let norm = ss.sqrt();
            centered.push(Some(c.into_iter().map(|x| x / norm).collect()));
        } else {
            zero_variance.push(m.column_map[j].label());
            centered.push(None);
        }
    }
    let mut flagged = Vec::new();
    let mut max_abs = 0.0f64;
    for a in 0..d {
        let Some(ca) = &centered[a] else { continue };
        for b in a + 1..d {
            let Some(cb) = &centered[b] else { continue };
            if same_block(&m.column_map[a], &m.column_map[b]) {
                continue;
            }
            let r = ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0);
            max_abs = max_abs.max(r.abs());
            if r.abs() > cutoff {
                flagged.push(CorrelatedPair {
                    a: m.column_map[a].label(),
                    b: m.column_map[b].label(),
                    r,
                });
            }
        }
    }
    Ok(ScreenReport {
        cutoff,
        flagged,
        zero_variance,
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::Rng;

    fn numeric(cols: &[Vec<f64>]) -> EncodedMatrix {
        let n = cols[0].len();
        let mut data = Vec::new();
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        EncodedMatrix {
            values: Matrix::new(n, cols.len(), data).unwrap(),
            column_map: (0..cols.len())
                .map(|j| ColumnOrigin::Numeric { source: format!("x{j}") })
                .collect(),
            numeric_block: (0..cols.len()).collect(),
            categorical_block: vec![],
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn duplicate_flagged() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let r = correlation_screen(&numeric(&[a.clone(), a]), 0.75).unwrap();
        assert_eq!(r.flagged.len(), 1);
        assert!((r.flagged[0].r - 1.0).abs() < 1e-12);
        assert!(!r.passes());
    }

    #[test]
    fn independent_columns_pass() {
        let mut g = crate::rng::rng(5);
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..1000).map(|_| g.random::<f64>()).collect()).collect();
        let r = correlation_screen(&numeric(&cols), 0.75).unwrap();
        assert!(r.passes());
        let mut oracle = 0.0f64;
        for a in 0..4 {
            for b in a + 1..4 {
                oracle = oracle.max(pearson(&cols[a], &cols[b]).abs());
            }
        }
        assert!((r.max_abs - oracle).abs() < 1e-12);
    }

    #[test]
    fn unit_cutoff_never_flags() {
        let a: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 + 3.0).collect();
        let b: Vec<f64> = a.iter().map(|x| -2.0 * x).collect();
        let r = correlation_screen(&numeric(&[a.clone(), a, b]), 1.0).unwrap();
        assert!(r.passes());
        assert!(correlation_screen(&numeric(&[vec![1.0, 2.0]]), 0.0).is_err());
    }

    #[test]
    fn zero_variance_listed() {
        let a: Vec<f64> = (0..20).map(f64::from).collect();
        let r = correlation_screen(&numeric(&[a, vec![1.0; 20]]), 0.75).unwrap();
        assert_eq!(r.zero_variance, vec!["x1".to_string()]);
        assert!(r.passes());
    }
}
