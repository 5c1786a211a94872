use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::matrix::{sq_euclidean, Matrix};
use crate::rng::rng;

pub const MAX_ITERATIONS: usize = 300;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub history: Vec<f64>,
}

/// Greedy k-means++ seeding: each step draws `2 + ln k` candidates and keeps
/// the one that lowers the potential most.
fn seed_centroids(m: &Matrix, k: usize, seed: u64) -> Matrix {
    let n = m.rows();
    let mut r = rng(seed);
    let trials = 2 + (k as f64).ln() as usize;
    let mut chosen = vec![r.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n).map(|i| sq_euclidean(m.row(i), m.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut t = r.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &c) in closest.iter().enumerate() {
                    if t < c {
                        pick = i;
                        break;
                    }
                    t -= c;
                }
                pick
            } else {
                r.random_range(0..n)
            };
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(sq_euclidean(m.row(i), m.row(cand))))
                .collect();
            let pot: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one trial");
        chosen.push(cand);
        closest = updated;
    }
    m.select_rows(&chosen)
}

fn assign(m: &Matrix, c: &Matrix, labels: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for i in 0..m.rows() {
        let (mut best, mut bd) = (0, f64::INFINITY);
        for j in 0..c.rows() {
            let d = sq_euclidean(m.row(i), c.row(j));
            if d < bd {
                bd = d;
                best = j;
            }
        }
        labels[i] = best;
        dist[i] = bd;
        inertia += bd;
    }
    inertia
}

/// Lloyd iterations from k-means++ seeds until the relative inertia change
/// drops below [`TOLERANCE`] or [`MAX_ITERATIONS`] is reached.
pub fn kmeans(m: &Matrix, k: usize, seed: u64) -> Result<KMeansFit> {
    let (n, d) = (m.rows(), m.cols());
    if k == 0 || k > n {
        return invalid(format!("k={k} outside [1, {n}]"));
    }
    let mut c = seed_centroids(m, k, seed);
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let inertia = assign(m, &c, &mut labels, &mut dist);
        history.push(inertia);
        if prev.is_finite() && (prev - inertia) <= TOLERANCE * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = inertia;
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(m.row(i)) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] == 0 {
                // move an empty centroid onto the point farthest from its own centroid
                let far = (0..n)
                    .filter(|&i| !taken[i] && counts[labels[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(f) = far {
                    taken[f] = true;
                    counts[labels[f]] -= 1;
                    for (s, v) in sums.row_mut(labels[f]).iter_mut().zip(m.row(f)) {
                        *s -= v;
                    }
                    labels[f] = j;
                    counts[j] = 1;
                    dist[f] = 0.0;
                    sums.row_mut(j).copy_from_slice(m.row(f));
                }
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let cnt = counts[j] as f64;
                for (t, s) in c.row_mut(j).iter_mut().zip(sums.row(j)) {
                    *t = s / cnt;
                }
            }
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    Ok(KMeansFit {
        labels,
        centroids: c,
        inertia,
        history,
    })
}

/// Best of several seeded runs by inertia; ties keep the earliest run.
pub fn kmeans_restarts(m: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let mut best = kmeans(m, k, seed)?;
    for r in 1..restarts.max(1) {
        let fit = kmeans(m, k, crate::rng::derive_seed(seed, &format!("restart{r}")))?;
        if fit.inertia < best.inertia {
            best = fit;
        }
    }
    Ok(best)
}
