#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::graph::FuzzyGraph;
use crate::error::{invalid, Error, Result};
use crate::matrix::{euclidean, Matrix};

pub const DEFAULT_NEIGHBORS: usize = 15;
const SIGMA_TOLERANCE: f64 = 1e-5;
const SIGMA_ITERATIONS: usize = 200;
const MIN_SIGMA_SCALE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GraphMetric {
    L2,
    Dice,
}

fn dice_raw(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut both, mut total) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(u8::from(*x != 0.0)), f64::from(u8::from(*y != 0.0)));
        both += x * y;
        total += x + y;
    }
    (total > 0.0).then(|| 1.0 - 2.0 * both / total)
}

/// Dice dissimilarity between two binary vectors (nonzero entries count as ones).
pub fn dice_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    dice_raw(a, b).ok_or_else(|| Error::InvalidArgument("dice distance undefined for two all-zero vectors".into()))
}

impl GraphMetric {
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            GraphMetric::L2 => euclidean(a, b),
            GraphMetric::Dice => dice_raw(a, b).unwrap_or(0.0),
        }
    }
}

/// The `k` nearest other points of `i`, nearest first, ties by index.
fn neighbors(m: &Matrix, i: usize, k: usize, metric: GraphMetric) -> Vec<(usize, f64)> {
    let p = m.row(i);
    let mut d: Vec<(usize, f64)> = (0..m.rows())
        .filter(|&j| j != i)
        .map(|j| (j, metric.eval(p, m.row(j))))
        .collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d
}

/// Solves `Σ exp(−max(0, d−ρ)/σ) = log2(k)` for σ by bisection.
pub fn smooth_knn_sigma(dists: &[f64], rho: f64) -> f64 {
    let target = (dists.len() as f64).log2();
    let sum = |s: f64| dists.iter().map(|&d| (-(d - rho).max(0.0) / s).exp()).sum::<f64>();
    let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
    for _ in 0..SIGMA_ITERATIONS {
        let v = sum(mid);
        if (v - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if v > target {
            hi = mid;
            mid = 0.5 * (lo + hi);
        } else {
            lo = mid;
            mid = if hi.is_finite() { 0.5 * (lo + hi) } else { mid * 2.0 };
        }
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let floor = MIN_SIGMA_SCALE * if rho > 0.0 { mean } else { mean.max(f64::MIN_POSITIVE) };
    mid.max(floor)
}

/// Directed smooth-kNN memberships of one vertex.
fn memberships(nb: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let rho = nb[0].1;
    let dists: Vec<f64> = nb.iter().map(|e| e.1).collect();
    let sigma = smooth_knn_sigma(&dists, rho);
    nb.iter()
        .map(|&(j, d)| (j, (-(d - rho).max(0.0) / sigma).exp()))
        .filter(|e| e.1 > 0.0)
        .collect()
}

/// Smooth-kNN fuzzy graph symmetrized by fuzzy union.
pub fn knn_fuzzy_graph(m: &Matrix, k: usize, metric: GraphMetric) -> Result<FuzzyGraph> {
    let n = m.rows();
    if k < 2 || k >= n {
        return invalid(format!("neighbor count {k} outside [2, {n})"));
    }
    let row = |i: usize| memberships(&neighbors(m, i, k, metric));
    #[cfg(feature = "parallel")]
    let directed: Vec<_> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let directed: Vec<_> = (0..n).map(row).collect();
    Ok(FuzzyGraph::from_directed(&directed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dice_examples() {
        assert_eq!(dice_distance(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dice_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(dice_distance(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap(), 0.5);
        assert!(dice_distance(&[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(dice_distance(&[1.0], &[0.0, 1.0]).is_err());
    }

    fn line() -> Matrix {
        let xs = [0.0, 0.3, 1.0, 1.2, 2.5, 2.6, 3.9, 5.0, 5.1, 7.0];
        Matrix::new(10, 1, xs.to_vec()).unwrap()
    }

    // Oracle: plain bisection on [0, 100] for each point from scratch.
    fn oracle_sigma(d: &[f64], rho: f64) -> f64 {
        let target = (d.len() as f64).log2();
        let f = |s: f64| d.iter().map(|&x| (-(x - rho).max(0.0) / s).exp()).sum::<f64>() - target;
        let (mut a, mut b) = (1e-9, 100.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if f(c) > 0.0 { b = c } else { a = c }
        }
        0.5 * (a + b)
    }

    #[test]
    fn line_weights_match_smooth_knn_equations() {
        let m = line();
        let xs = m.as_slice();
        let g = knn_fuzzy_graph(&m, 3, GraphMetric::L2).unwrap();
        let mut directed = vec![vec![0.0; 10]; 10];
        for i in 0..10 {
            let mut d: Vec<(usize, f64)> = (0..10).filter(|&j| j != i).map(|j| (j, (xs[i] - xs[j]).abs())).collect();
            d.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            d.truncate(3);
            let rho = d[0].1;
            let dist: Vec<f64> = d.iter().map(|e| e.1).collect();
            let s = oracle_sigma(&dist, rho);
            let total: f64 = dist.iter().map(|&x| (-(x - rho) / s).exp()).sum();
            assert!((total - 3f64.log2()).abs() < 1e-4);
            for &(j, x) in &d {
                directed[i][j] = (-(x - rho) / s).exp();
            }
            assert_eq!(directed[i][d[0].0], 1.0);
        }
        for i in 0..10 {
            for j in 0..10 {
                let (a, b) = (directed[i][j], directed[j][i]);
                let want = a + b - a * b;
                match g.weight(i, j) {
                    Some(w) => assert!((w - want).abs() < 1e-4, "{i} {j} {w} {want}"),
                    None => assert_eq!(want, 0.0),
                }
            }
        }
        assert!(g.is_symmetric());
        assert!((0..10).all(|i| !g.neighbors(i).is_empty()));
    }

    #[test]
    fn range_checks() {
        assert!(knn_fuzzy_graph(&line(), 1, GraphMetric::L2).is_err());
        assert!(knn_fuzzy_graph(&line(), 10, GraphMetric::L2).is_err());
        assert!(knn_fuzzy_graph(&line(), 9, GraphMetric::L2).is_ok());
    }

    #[test]
    fn duplicate_points_ties_by_index() {
        let m = Matrix::new(5, 1, vec![0.0, 0.0, 0.0, 1.0, 2.0]).unwrap();
        let g = knn_fuzzy_graph(&m, 2, GraphMetric::L2).unwrap();
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert!(g.neighbors(0).iter().all(|e| e.1 > 0.0 && e.1 <= 1.0));
        let m = Matrix::new(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let g = knn_fuzzy_graph(&m, 2, GraphMetric::Dice).unwrap();
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(2, 3), Some(1.0));
    }
}
