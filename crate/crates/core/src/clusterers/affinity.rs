use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::matrix::{sq_euclidean, Matrix};
use crate::rng::rng;

const MAX_ITERATIONS: usize = 200;
const CONVERGENCE_ITERATIONS: usize = 15;

/// Affinity propagation on negative squared Euclidean similarities. The
/// preference defaults to the median similarity; a tiny seeded jitter breaks
/// exact ties. Returns all points in one cluster when no exemplar emerges.
pub fn affinity_propagation(m: &Matrix, damping: f64, preference: Option<f64>, seed: u64) -> Result<Vec<usize>> {
    if !(0.5..1.0).contains(&damping) {
        return invalid(format!("damping {damping} outside [0.5, 1)"));
    }
    let n = m.rows();
    if n < 2 {
        return Ok(vec![0; n]);
    }
    let mut s = vec![0.0; n * n];
    let mut off = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = -sq_euclidean(m.row(i), m.row(j));
                s[i * n + j] = v;
                off.push(v);
            }
        }
    }
    let pref = preference.unwrap_or_else(|| {
        off.sort_by(f64::total_cmp);
        let h = off.len() / 2;
        if off.len() % 2 == 0 { 0.5 * (off[h - 1] + off[h]) } else { off[h] }
    });
    for i in 0..n {
        s[i * n + i] = pref;
    }
    let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut g = rng(seed);
    s.iter_mut().for_each(|v| *v += 1e-12 * scale * g.random::<f64>());

    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut last: Vec<bool> = vec![false; n];
    let mut stable = 0;
    for _ in 0..MAX_ITERATIONS {
        for i in 0..n {
            let (mut m1, mut m2, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[i * n + k] + s[i * n + k];
                if v > m1 {
                    m2 = m1;
                    m1 = v;
                    arg = k;
                } else if v > m2 {
                    m2 = v;
                }
            }
            for k in 0..n {
                let new = s[i * n + k] - if k == arg { m2 } else { m1 };
                r[i * n + k] = damping * r[i * n + k] + (1.0 - damping) * new;
            }
        }
        for k in 0..n {
            let pos: f64 = (0..n).filter(|&i| i != k).map(|i| r[i * n + k].max(0.0)).sum();
            for i in 0..n {
                let new = if i == k {
                    pos
                } else {
                    (r[k * n + k] + pos - r[i * n + k].max(0.0)).min(0.0)
                };
                a[i * n + k] = damping * a[i * n + k] + (1.0 - damping) * new;
            }
        }
        let ex: Vec<bool> = (0..n).map(|k| a[k * n + k] + r[k * n + k] > 0.0).collect();
        if ex == last {
            stable += 1;
            if stable >= CONVERGENCE_ITERATIONS && ex.iter().any(|&e| e) {
                break;
            }
        } else {
            stable = 0;
            last = ex;
        }
    }
    let exemplars: Vec<usize> = (0..n).filter(|&k| last[k]).collect();
    if exemplars.is_empty() {
        return Ok(vec![0; n]);
    }
    Ok((0..n)
        .map(|i| {
            if let Some(p) = exemplars.iter().position(|&e| e == i) {
                return p;
            }
            exemplars
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (p, &e)| if s[i * n + e] > b.1 { (p, s[i * n + e]) } else { b })
                .0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::partition::Partition;
    use crate::prep::one_hot_encode;
    use crate::validity::ami;

    #[test]
    fn finds_separated_blobs() {
        let (t, truth) = generate_synthetic(&SyntheticSpec::blobs(90, 3, 2, 20.0, 4)).unwrap();
        let m = one_hot_encode(&t).unwrap().values;
        let p = Partition::from_usize(&affinity_propagation(&m, 0.5, Some(-200.0), 1).unwrap());
        assert_eq!(ami(&p, &truth).unwrap(), 1.0);
        assert!(affinity_propagation(&m, 1.0, None, 1).is_err());
    }
}
