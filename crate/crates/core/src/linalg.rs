//! Dense symmetric eigen-decomposition helpers shared by the spectral methods.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector of `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Full eigen-decomposition of a dense symmetric `n x n` matrix (row-major).
///
/// Eigenvector signs are fixed so that the entry of largest magnitude is positive.
pub fn symmetric_eigen(data: &[f64], n: usize) -> Result<Eigen> {
    assert_eq!(data.len(), n * n, "eigen input must be square");
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let m = DMatrix::from_row_slice(n, n, data);
    let max_iter = 200 * n.max(10);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, max_iter)
        .ok_or(Error::EigenNonConvergence { iterations: max_iter })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(Eigen { values, vectors })
}

pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `D^{-1/2} W D^{-1/2}` for a dense symmetric affinity, with the degrees.
///
/// Isolated vertices keep a zero row.
pub fn normalized_affinity(w: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let deg: Vec<f64> = (0..n).map(|i| w[i * n..(i + 1) * n].iter().sum()).collect();
    let inv: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = w[i * n + j] * inv[i] * inv[j];
        }
    }
    (out, deg)
}

/// The `k` eigenvectors of largest eigenvalue, as columns of an `n x k` matrix.
pub fn top_eigenvectors(data: &[f64], n: usize, k: usize) -> Result<(Vec<f64>, Matrix)> {
    let eig = symmetric_eigen(data, n)?;
    let k = k.min(n);
    let mut values = Vec::with_capacity(k);
    let mut out = Matrix::zeros(n, k);
    for (c, idx) in (0..n).rev().take(k).enumerate() {
        values.push(eig.values[idx]);
        for i in 0..n {
            out.set(i, c, eig.vectors[idx][i]);
        }
    }
    Ok((values, out))
}

/// Scales every row to unit Euclidean norm; zero rows are left untouched.
pub fn normalize_rows(m: &mut Matrix) {
    for i in 0..m.rows() {
        let r = m.row_mut(i);
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|x| *x /= norm);
        }
    }
}
