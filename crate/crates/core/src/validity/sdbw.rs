use serde::{Deserialize, Serialize};

use super::Clusters;
use crate::error::{Error, Result};
use crate::matrix::{euclidean, Matrix};
use crate::partition::Partition;

/// Two-sided 90% normal quantile used for the confidence-interval regions.
const Z_90: f64 = 1.644_853_626_951_472_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdbwVariant {
    /// Scatter plus density at the midpoints of centroid segments.
    Halkidi,
    /// Size-weighted scatter plus overlap of per-dimension confidence boxes.
    Kim,
    /// Pooled scatter plus density of the margin band between clusters.
    Tong,
}

fn variance(matrix: &Matrix, idx: &[usize], mean: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; matrix.cols()];
    for &i in idx {
        for ((acc, x), m) in v.iter_mut().zip(matrix.row(i)).zip(mean) {
            *acc += (x - m) * (x - m);
        }
    }
    v.iter_mut().for_each(|a| *a /= idx.len() as f64);
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Stats {
    cl: Clusters,
    /// Per-cluster per-dimension variance.
    var: Vec<Vec<f64>>,
    /// Norm of the variance vector of the whole data set.
    data_var_norm: f64,
}

impl Stats {
    fn new(matrix: &Matrix, partition: &Partition) -> Result<Self> {
        let cl = Clusters::new(matrix, partition)?;
        cl.require_two("S-Dbw")?;
        if cl.members.iter().all(|m| m.len() == 1) {
            return Err(Error::ZeroVarianceClusters);
        }
        let all: Vec<usize> = cl.members.iter().flatten().copied().collect();
        let mut mean = vec![0.0; matrix.cols()];
        for &i in &all {
            for (m, x) in mean.iter_mut().zip(matrix.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= all.len() as f64);
        let data_var_norm = norm(&variance(matrix, &all, &mean));
        if data_var_norm == 0.0 {
            return Err(Error::ZeroVarianceClusters);
        }
        let var = cl
            .members
            .iter()
            .zip(&cl.centroids)
            .map(|(idx, c)| variance(matrix, idx, c))
            .collect();
        Ok(Self {
            cl,
            var,
            data_var_norm,
        })
    }

    fn sd_norm(&self, c: usize) -> f64 {
        self.var[c].iter().sum::<f64>().sqrt()
    }
}

/// S-Dbw validity index (lower is better).
pub fn sdbw(matrix: &Matrix, partition: &Partition, variant: SdbwVariant) -> Result<f64> {
    let st = Stats::new(matrix, partition)?;
    Ok(match variant {
        SdbwVariant::Halkidi => halkidi_scat(&st) + halkidi_dens(matrix, &st),
        SdbwVariant::Kim => kim_scat(&st) + kim_dens(matrix, &st),
        SdbwVariant::Tong => tong_scat(&st) + tong_dens(matrix, &st),
    })
}

fn halkidi_scat(st: &Stats) -> f64 {
    let k = st.cl.k() as f64;
    st.var.iter().map(|v| norm(v)).sum::<f64>() / k / st.data_var_norm
}

fn halkidi_dens(matrix: &Matrix, st: &Stats) -> f64 {
    let k = st.cl.k();
    let radius = (0..k).map(|c| st.sd_norm(c)).sum::<f64>() / k as f64;
    let count_near = |idx: &[usize], centre: &[f64]| {
        idx.iter()
            .filter(|&&i| euclidean(matrix.row(i), centre) <= radius)
            .count()
    };
    let own: Vec<usize> = (0..k)
        .map(|c| count_near(&st.cl.members[c], &st.cl.centroids[c]))
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let mid: Vec<f64> = st.cl.centroids[i]
                .iter()
                .zip(&st.cl.centroids[j])
                .map(|(a, b)| (a + b) / 2.0)
                .collect();
            let at_mid = count_near(&st.cl.members[i], &mid) + count_near(&st.cl.members[j], &mid);
            let denom = own[i].max(own[j]).max(1);
            // the (i, j) and (j, i) terms are equal
            total += 2.0 * at_mid as f64 / denom as f64;
        }
    }
    total / (k * (k - 1)) as f64
}

fn kim_scat(st: &Stats) -> f64 {
    let n = st.cl.n() as f64;
    st.cl
        .members
        .iter()
        .zip(&st.var)
        .map(|(m, v)| m.len() as f64 / n * norm(v))
        .sum::<f64>()
        / st.data_var_norm
}

fn kim_dens(matrix: &Matrix, st: &Stats) -> f64 {
    let k = st.cl.k();
    let boxes: Vec<Vec<(f64, f64)>> = (0..k)
        .map(|c| {
            st.cl.centroids[c]
                .iter()
                .zip(&st.var[c])
                .map(|(m, v)| {
                    let h = Z_90 * v.sqrt();
                    (m - h, m + h)
                })
                .collect()
        })
        .collect();
    let inside = |x: &[f64], b: &[(f64, f64)]| x.iter().zip(b).all(|(v, (lo, hi))| v >= lo && v <= hi);
    let own: Vec<usize> = (0..k)
        .map(|c| {
            st.cl.members[c]
                .iter()
                .filter(|&&i| inside(matrix.row(i), &boxes[c]))
                .count()
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let overlap = st.cl.members[i]
                .iter()
                .chain(&st.cl.members[j])
                .filter(|&&p| {
                    let x = matrix.row(p);
                    inside(x, &boxes[i]) && inside(x, &boxes[j])
                })
                .count();
            let denom = own[i].max(own[j]).max(1);
            total += 2.0 * overlap as f64 / denom as f64;
        }
    }
    total / (k * (k - 1)) as f64
}

fn tong_scat(st: &Stats) -> f64 {
    let n = st.cl.n();
    let k = st.cl.k();
    let pooled: f64 = st
        .cl
        .members
        .iter()
        .zip(&st.var)
        .map(|(m, v)| (m.len() - 1) as f64 * norm(v))
        .sum();
    pooled / (n - k) as f64 / st.data_var_norm
}

fn tong_dens(matrix: &Matrix, st: &Stats) -> f64 {
    let k = st.cl.k();
    let mut total = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let band = 0.5 * (st.sd_norm(i) + st.sd_norm(j));
            let (ci, cj) = (&st.cl.centroids[i], &st.cl.centroids[j]);
            let members = st.cl.members[i].iter().chain(&st.cl.members[j]);
            let in_margin = members
                .clone()
                .filter(|&&p| {
                    let x = matrix.row(p);
                    (euclidean(x, ci) - euclidean(x, cj)).abs() <= band
                })
                .count();
            let size = st.cl.members[i].len() + st.cl.members[j].len();
            total += 2.0 * in_margin as f64 / size as f64;
        }
    }
    total / (k * (k - 1)) as f64
}
