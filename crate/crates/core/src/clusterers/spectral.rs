use super::kmeans::kmeans_restarts;
use crate::error::{invalid, Result};
use crate::linalg::{normalize_rows, normalized_affinity, symmetric_eigen, Eigen};
use crate::matrix::{sq_euclidean, Matrix};

const RESTARTS: usize = 10;

/// Eigenbasis of the normalized RBF affinity, reusable across cluster counts.
pub struct SpectralBasis {
    n: usize,
    eig: Eigen,
}

impl SpectralBasis {
    pub fn build(m: &Matrix, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return invalid(format!("rbf gamma must be positive, got {gamma}"));
        }
        let n = m.rows();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = (-gamma * sq_euclidean(m.row(i), m.row(j))).exp();
            }
        }
        let (a, _) = normalized_affinity(&w, n);
        Ok(Self { n, eig: symmetric_eigen(&a, n)? })
    }

    /// Row-normalized embedding on the `k` leading eigenvectors.
    pub fn embedding(&self, k: usize) -> Matrix {
        let mut out = Matrix::zeros(self.n, k);
        for (c, idx) in (0..self.n).rev().take(k).enumerate() {
            for i in 0..self.n {
                out.set(i, c, self.eig.vectors[idx][i]);
            }
        }
        normalize_rows(&mut out);
        out
    }

    pub fn cluster(&self, k: usize, seed: u64) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return invalid(format!("k={k} outside [1, {}]", self.n));
        }
        Ok(kmeans_restarts(&self.embedding(k), k, seed, RESTARTS)?.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::validity::ami;

    #[test]
    fn concentric_rings_separate() {
        // kmeans on raw coordinates cannot split rings; the affinity graph can
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (ring, radius) in [(0usize, 1.0), (1, 4.0)] {
            for t in 0..60 {
                let a = t as f64 / 60.0 * std::f64::consts::TAU;
                rows.push(vec![radius * a.cos(), radius * a.sin()]);
                truth.push(ring);
            }
        }
        let m = Matrix::from_rows(&rows).unwrap();
        let basis = SpectralBasis::build(&m, 2.0).unwrap();
        let p = Partition::from_usize(&basis.cluster(2, 3).unwrap());
        assert_eq!(ami(&p, &Partition::from_usize(&truth)).unwrap(), 1.0);
        assert!(SpectralBasis::build(&m, 0.0).is_err());
    }
}
