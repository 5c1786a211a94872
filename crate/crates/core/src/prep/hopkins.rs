use rand::seq::index::sample;
use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::matrix::{sq_euclidean, Matrix};
use crate::rng::rng;

pub fn default_probes(n: usize) -> usize {
    (n / 10).clamp(1, 500)
}

fn nearest(m: &Matrix, p: &[f64], skip: Option<usize>) -> f64 {
    m.iter_rows()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, r)| sq_euclidean(r, p))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Hopkins clusterability statistic: near 0.5 for uniform data, near 1 for
/// strongly clustered data.
pub fn hopkins(m: &Matrix, probes: Option<usize>, seed: u64) -> Result<f64> {
    let (n, d) = (m.rows(), m.cols());
    if n < 4 {
        return invalid(format!("hopkins needs at least 4 points, got {n}"));
    }
    if d == 0 {
        return invalid("hopkins needs at least one dimension");
    }
    let probes = probes.unwrap_or_else(|| default_probes(n));
    if probes == 0 || probes > n / 2 {
        return invalid(format!("probe count {probes} outside [1, {}]", n / 2));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in m.iter_rows() {
        for j in 0..d {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let mut g = rng(seed);
    let mut point = vec![0.0; d];
    let mut u = 0.0;
    for _ in 0..probes {
        for j in 0..d {
            point[j] = if hi[j] > lo[j] { g.random_range(lo[j]..hi[j]) } else { lo[j] };
        }
        u += nearest(m, &point, None).powi(d as i32);
    }
    let mut w = 0.0;
    for i in sample(&mut g, n, probes) {
        w += nearest(m, m.row(i), Some(i)).powi(d as i32);
    }
    if u + w == 0.0 {
        return Ok(0.5);
    }
    Ok(u / (u + w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::prep::one_hot_encode;

    fn uniform(n: usize, d: usize, seed: u64) -> Matrix {
        let mut g = rng(seed);
        Matrix::new(n, d, (0..n * d).map(|_| g.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn uniform_trials_near_half() {
        let inside = (0..100)
            .filter(|&s| {
                let h = hopkins(&uniform(1000, 2, 1000 + s), None, s).unwrap();
                (0.4..=0.6).contains(&h)
            })
            .count();
        assert!(inside >= 95, "{inside}");
    }

    #[test]
    fn separated_blobs_near_one() {
        let (t, _) = generate_synthetic(&SyntheticSpec::blobs(1000, 3, 2, 12.0, 4)).unwrap();
        let m = one_hot_encode(&t).unwrap().values;
        let h = hopkins(&m, None, 1).unwrap();
        assert!(h > 0.95, "{h}");
    }

    #[test]
    fn far_offset_copy() {
        // Oracle: two tight clouds at distance 1e4; uniform probes land in the
        // empty gap, so u is of order 1e4 while w is of order the cloud spread.
        let base = uniform(50, 2, 8);
        let mut rows: Vec<Vec<f64>> = base.iter_rows().map(|r| r.to_vec()).collect();
        rows.extend(base.iter_rows().map(|r| vec![r[0] + 1e4, r[1] + 1e4]));
        let m = Matrix::from_rows(&rows).unwrap();
        let h = hopkins(&m, Some(10), 2).unwrap();
        assert!(h > 0.999, "{h}");
    }

    #[test]
    fn bounds_and_errors() {
        assert!(hopkins(&uniform(3, 2, 1), None, 0).is_err());
        assert!(hopkins(&uniform(10, 2, 1), Some(6), 0).is_err());
        let h = hopkins(&uniform(10, 2, 1), Some(5), 0).unwrap();
        assert!((0.0..=1.0).contains(&h));
    }
}
