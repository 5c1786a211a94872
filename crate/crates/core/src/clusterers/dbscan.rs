use crate::matrix::{Distance, Matrix};
use crate::partition::NOISE;

/// Density clustering: points with at least `min_points` neighbors within
/// `eps` (self included) are cores; clusters grow from cores in index order.
pub fn dbscan(m: &Matrix, eps: f64, min_points: usize, distance: Distance) -> Vec<i32> {
    let n = m.rows();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| distance.eval(m.row(i), m.row(j)) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_points).collect();
    let mut labels = vec![NOISE; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || labels[s] != NOISE {
            continue;
        }
        labels[s] = next;
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if labels[q] == NOISE {
                    labels[q] = next;
                    if core[q] {
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    labels
}
