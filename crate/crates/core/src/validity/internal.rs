use serde::{Deserialize, Serialize};

use super::Clusters;
use crate::error::{Error, Result};
use crate::matrix::{euclidean, sq_euclidean, Matrix};
use crate::partition::Partition;

/// Mean silhouette over non-noise points; singletons contribute 0.
pub fn silhouette(matrix: &Matrix, partition: &Partition) -> Result<f64> {
    let cl = Clusters::new(matrix, partition)?;
    cl.require_two("SI")?;
    let k = cl.k();
    // cluster index per point, usize::MAX for noise
    let mut of = vec![usize::MAX; matrix.rows()];
    for (c, idx) in cl.members.iter().enumerate() {
        for &i in idx {
            of[i] = c;
        }
    }
    let points: Vec<usize> = cl.members.iter().flatten().copied().collect();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for &i in &points {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let xi = matrix.row(i);
        for &j in &points {
            if j != i {
                sums[of[j]] += euclidean(xi, matrix.row(j));
            }
        }
        let own = of[i];
        let size = cl.members[own].len();
        if size == 1 {
            continue;
        }
        let a = sums[own] / (size - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / cl.members[c].len() as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / points.len() as f64)
}

/// Calinski–Harabasz index `(B/(k-1)) / (W/(n-k))`.
///
/// Returns `+inf` when the within-cluster dispersion is zero but the clusters
/// are separated, and `0` when both dispersions vanish.
pub fn calinski_harabasz(matrix: &Matrix, partition: &Partition) -> Result<f64> {
    let cl = Clusters::new(matrix, partition)?;
    cl.require_two("CHI")?;
    let (n, k) = (cl.n(), cl.k());
    if n <= k {
        return Err(Error::InvalidArgument(format!("CHI needs n > k (n={n}, k={k})")));
    }
    let d = matrix.cols();
    let mut mean = vec![0.0; d];
    for (idx, c) in cl.members.iter().zip(&cl.centroids) {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v * idx.len() as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut between = 0.0;
    let mut within = 0.0;
    for (idx, c) in cl.members.iter().zip(&cl.centroids) {
        between += idx.len() as f64 * sq_euclidean(c, &mean);
        within += idx.iter().map(|&i| sq_euclidean(matrix.row(i), c)).sum::<f64>();
    }
    if within == 0.0 {
        return Ok(if between == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

fn mean_centroid_distance(matrix: &Matrix, cl: &Clusters) -> Vec<f64> {
    cl.members
        .iter()
        .zip(&cl.centroids)
        .map(|(idx, c)| {
            idx.iter().map(|&i| euclidean(matrix.row(i), c)).sum::<f64>() / idx.len() as f64
        })
        .collect()
}

/// Davies–Bouldin index.
pub fn davies_bouldin(matrix: &Matrix, partition: &Partition) -> Result<f64> {
    let cl = Clusters::new(matrix, partition)?;
    cl.require_two("DB")?;
    let s = mean_centroid_distance(matrix, &cl);
    let k = cl.k();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let nij = euclidean(&cl.centroids[i], &cl.centroids[j]);
            if nij == 0.0 {
                return Err(Error::ZeroCentroidDistance);
            }
            worst = worst.max((s[i] + s[j]) / nij);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// How the inter-cluster separation of the Dunn index is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DunnSeparation {
    /// Distance between centroids.
    #[default]
    Centroid,
    /// Minimum distance between members of the two clusters.
    SingleLinkage,
}

/// Dunn-type index: minimum separation over the largest mean distance to centroid.
pub fn dunn(matrix: &Matrix, partition: &Partition, separation: DunnSeparation) -> Result<f64> {
    let cl = Clusters::new(matrix, partition)?;
    cl.require_two("DI")?;
    let spread = mean_centroid_distance(matrix, &cl)
        .into_iter()
        .fold(0.0f64, f64::max);
    if spread == 0.0 {
        return Err(Error::InvalidArgument("DI undefined: every cluster has zero diameter".into()));
    }
    let k = cl.k();
    let mut min_sep = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let sep = match separation {
                DunnSeparation::Centroid => euclidean(&cl.centroids[i], &cl.centroids[j]),
                DunnSeparation::SingleLinkage => {
                    let mut best = f64::INFINITY;
                    for &a in &cl.members[i] {
                        for &b in &cl.members[j] {
                            best = best.min(euclidean(matrix.row(a), matrix.row(b)));
                        }
                    }
                    best
                }
            };
            min_sep = min_sep.min(sep);
        }
    }
    Ok(min_sep / spread)
}
