use nalgebra::DMatrix;

use super::check_k;
use crate::clusterers::{kmeans_restarts, EnsembleLibrary};
use crate::error::{Error, Result};
use crate::linalg::{normalize_rows, symmetric_eigen};
use crate::matrix::Matrix;
use crate::partition::Partition;

const RESTARTS: usize = 10;
const RANK_TOLERANCE: f64 = 1e-10;

/// Spectral co-clustering of the point/cluster bipartite graph: the leading
/// left singular vectors of `D1^-1/2 A D2^-1/2` embed the points, which are
/// then grouped by k-means.
pub fn hbgf(lib: &EnsembleLibrary, k: usize, seed: u64) -> Result<Partition> {
    let n = lib.n();
    check_k(k, n)?;
    if k == 1 {
        return Ok(Partition::single(n));
    }
    // one column per cluster over all members
    let mut cols: Vec<Vec<usize>> = Vec::new();
    for p in lib.partitions() {
        cols.extend(p.members().into_iter().filter(|c| !c.is_empty()));
    }
    let c = cols.len();
    let mut row_deg = vec![0.0f64; n];
    for col in &cols {
        for &i in col {
            row_deg[i] += 1.0;
        }
    }
    let inv_row: Vec<f64> = row_deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut an = DMatrix::<f64>::zeros(n, c);
    for (j, col) in cols.iter().enumerate() {
        let cd = 1.0 / (col.len() as f64).sqrt();
        for &i in col {
            an[(i, j)] = inv_row[i] * cd;
        }
    }
    let gram = an.transpose() * &an;
    let gram_rows: Vec<f64> = (0..c).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| gram[(i, j)]).collect();
    let eig = symmetric_eigen(&gram_rows, c)?;
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let rank = eig.values.iter().filter(|&&v| v > RANK_TOLERANCE * top.max(f64::MIN_POSITIVE)).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    let mut emb = Matrix::zeros(n, k);
    for (col, idx) in (0..c).rev().take(k).enumerate() {
        let sigma = eig.values[idx].sqrt();
        let v = nalgebra::DVector::from_column_slice(&eig.vectors[idx]);
        let u = &an * v / sigma;
        for i in 0..n {
            emb.set(i, col, u[i] * inv_row[i]);
        }
    }
    normalize_rows(&mut emb);
    Ok(Partition::from_usize(&kmeans_restarts(&emb, k, seed, RESTARTS)?.labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_member_returned() {
        let p = Partition::from_i32(&[2, 2, 0, 1, 1, 0, 2]);
        let lib = EnsembleLibrary::from_partitions(vec![p.clone()]).unwrap();
        assert_eq!(hbgf(&lib, 3, 0).unwrap(), p);
        assert!(matches!(hbgf(&lib, 4, 0), Err(Error::RankDeficient { rank: 3, required: 4 })));
    }
}
