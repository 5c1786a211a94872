use rand::Rng as _;

use super::graph::FuzzyGraph;
use crate::error::{invalid, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;
use crate::rng::rng;

/// Low-dimensional coordinates, one row per vertex.
pub type Layout = Matrix;

const COMPONENT_SPACING: f64 = 10.0;
const NEGATIVE_SAMPLES: usize = 5;
const GRAD_CLIP: f64 = 4.0;
// Curve parameters of the low-dimensional membership 1/(1 + a·d^(2b)).
const CURVE_A: f64 = 1.577;
const CURVE_B: f64 = 0.895;

fn component_coords(g: &FuzzyGraph, comp: &[usize], d: usize) -> Result<Vec<f64>> {
    let s = comp.len();
    let mut out = vec![0.0; s * d];
    if s == 1 {
        return Ok(out);
    }
    let mut local = vec![usize::MAX; g.n()];
    for (p, &v) in comp.iter().enumerate() {
        local[v] = p;
    }
    let deg: Vec<f64> = comp.iter().map(|&v| g.degree(v)).collect();
    let mut lap = vec![0.0; s * s];
    for (p, &v) in comp.iter().enumerate() {
        lap[p * s + p] = 1.0;
        for &(u, w) in g.neighbors(v) {
            let q = local[u];
            lap[p * s + q] -= w / (deg[p] * deg[q]).sqrt();
        }
    }
    let eig = symmetric_eigen(&lap, s)?;
    for c in 0..d.min(s - 1) {
        let vec = &eig.vectors[c + 1];
        for p in 0..s {
            out[p * d + c] = vec[p] / deg[p].sqrt();
        }
    }
    let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        out.iter_mut().for_each(|v| *v /= scale);
    }
    Ok(out)
}

/// Centers every column and scales it to unit population variance.
pub fn standardize_columns(m: &mut Matrix) {
    let n = m.rows() as f64;
    for j in 0..m.cols() {
        let col = m.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (i, v) in col.iter().enumerate() {
            let c = v - mean;
            m.set(i, j, if sd > 0.0 { c / sd } else { c });
        }
    }
}

pub(crate) fn center_columns(m: &mut Matrix) {
    for (j, mean) in m.column_means().into_iter().enumerate() {
        for i in 0..m.rows() {
            m.set(i, j, m.get(i, j) - mean);
        }
    }
}

/// Laplacian eigenmap into `d` dimensions: eigenvectors of the symmetric
/// normalized Laplacian mapped back through `D^-1/2`. Each connected component
/// is laid out on its own and shifted along the first axis.
pub fn spectral_layout(g: &FuzzyGraph, d: usize) -> Result<Layout> {
    if d == 0 {
        return invalid("layout needs at least one dimension");
    }
    let mut out = Matrix::zeros(g.n(), d);
    for (c, comp) in g.components().iter().enumerate() {
        let coords = component_coords(g, comp, d)?;
        for (p, &v) in comp.iter().enumerate() {
            let row = out.row_mut(v);
            row.copy_from_slice(&coords[p * d..(p + 1) * d]);
            row[0] += COMPONENT_SPACING * c as f64;
        }
    }
    standardize_columns(&mut out);
    Ok(out)
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Stochastic refinement: edges attract with probability equal to their
/// weight, uniformly drawn vertices repel. The result is re-centered.
pub fn sgd_refine(layout: &Layout, g: &FuzzyGraph, epochs: usize, seed: u64) -> Result<Layout> {
    if layout.rows() != g.n() {
        return Err(crate::Error::LengthMismatch(layout.rows(), g.n()));
    }
    let mut y = layout.clone();
    if epochs == 0 || g.n() < 2 {
        return Ok(y);
    }
    let d = y.cols();
    let n = g.n();
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let mut r = rng(seed);
    let mut diff = vec![0.0; d];
    for epoch in 0..epochs {
        let lr = 1.0 - epoch as f64 / epochs as f64;
        for &(i, j, w) in &edges {
            if r.random::<f64>() > w {
                continue;
            }
            let d2 = pull_apart(&y, i, j, &mut diff);
            if d2 > 0.0 {
                let coeff = -2.0 * CURVE_A * CURVE_B * d2.powf(CURVE_B - 1.0) / (CURVE_A * d2.powf(CURVE_B) + 1.0);
                for c in 0..d {
                    let step = clip(coeff * diff[c]) * lr;
                    y.row_mut(i)[c] += step;
                    y.row_mut(j)[c] -= step;
                }
            }
            for _ in 0..NEGATIVE_SAMPLES {
                let k = r.random_range(0..n);
                if k == i {
                    continue;
                }
                let d2 = pull_apart(&y, i, k, &mut diff);
                let coeff = if d2 > 0.0 {
                    2.0 * CURVE_B / ((0.001 + d2) * (CURVE_A * d2.powf(CURVE_B) + 1.0))
                } else {
                    0.0
                };
                for c in 0..d {
                    let step = if coeff > 0.0 { clip(coeff * diff[c]) } else { GRAD_CLIP };
                    y.row_mut(i)[c] += step * lr;
                }
            }
        }
    }
    center_columns(&mut y);
    Ok(y)
}

fn pull_apart(y: &Matrix, i: usize, j: usize, diff: &mut [f64]) -> f64 {
    let (a, b) = (y.row(i), y.row(j));
    let mut d2 = 0.0;
    for c in 0..diff.len() {
        diff[c] = a[c] - b[c];
        d2 += diff[c] * diff[c];
    }
    d2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::embed::{knn_fuzzy_graph, GraphMetric};
    use crate::matrix::euclidean;
    use crate::prep::one_hot_encode;

    fn clique(n: usize, offset: usize) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((offset + i, offset + j, 1.0));
            }
        }
        e
    }

    #[test]
    fn disconnected_cliques_split_by_sign() {
        let mut e = clique(5, 0);
        e.extend(clique(5, 5));
        let g = FuzzyGraph::from_edges(10, e).unwrap();
        let y = spectral_layout(&g, 1).unwrap();
        let s: Vec<bool> = (0..10).map(|i| y.get(i, 0) > 0.0).collect();
        assert!(s[..5].iter().all(|&v| v == s[0]));
        assert!(s[5..].iter().all(|&v| v != s[0]));
        assert!(y.column_means()[0].abs() < 1e-9);
    }

    #[test]
    fn complete_graph_equidistant() {
        let g = FuzzyGraph::from_edges(6, clique(6, 0)).unwrap();
        let y = spectral_layout(&g, 5).unwrap();
        let d01 = euclidean(y.row(0), y.row(1));
        for i in 0..6 {
            for j in i + 1..6 {
                assert!((euclidean(y.row(i), y.row(j)) - d01).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn path_order_matches_fiedler() {
        let g = FuzzyGraph::from_edges(5, (0..4).map(|i| (i, i + 1, 1.0))).unwrap();
        let y = spectral_layout(&g, 1).unwrap();
        let x = y.column(0);
        let up = x.windows(2).all(|w| w[0] < w[1]);
        let down = x.windows(2).all(|w| w[0] > w[1]);
        assert!(up || down, "{x:?}");
    }

    #[test]
    fn relabeling_invariance() {
        let g = FuzzyGraph::from_edges(6, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0), (3, 4, 0.2), (4, 5, 0.9), (5, 0, 0.3)]).unwrap();
        let perm = [3, 5, 0, 1, 4, 2];
        let h = FuzzyGraph::from_edges(6, g.edges().map(|(i, j, w)| (perm[i], perm[j], w))).unwrap();
        let a = spectral_layout(&g, 1).unwrap();
        let b = spectral_layout(&h, 1).unwrap();
        let sign = if (a.get(0, 0) * b.get(perm[0], 0)) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..6 {
            assert!((a.get(i, 0) - sign * b.get(perm[i], 0)).abs() < 1e-9);
        }
    }

    fn blob_ratio(y: &Matrix, truth: &[i32]) -> f64 {
        let (mut inter, mut ni, mut intra, mut na) = (0.0, 0, 0.0, 0);
        for i in 0..y.rows() {
            for j in i + 1..y.rows() {
                let d = euclidean(y.row(i), y.row(j));
                if truth[i] == truth[j] {
                    intra += d;
                    na += 1;
                } else {
                    inter += d;
                    ni += 1;
                }
            }
        }
        (inter / ni as f64) / (intra / na as f64)
    }

    #[test]
    fn refinement_separates_blobs() {
        let (t, truth) = generate_synthetic(&SyntheticSpec::blobs(200, 2, 4, 3.0, 5)).unwrap();
        let m = one_hot_encode(&t).unwrap().values;
        let g = knn_fuzzy_graph(&m, 15, GraphMetric::L2).unwrap();
        let y0 = spectral_layout(&g, 2).unwrap();
        assert_eq!(sgd_refine(&y0, &g, 0, 1).unwrap(), y0);
        let y1 = sgd_refine(&y0, &g, 200, 1).unwrap();
        assert_eq!(y1, sgd_refine(&y0, &g, 200, 1).unwrap());
        assert!(y1.is_finite());
        let (r0, r1) = (blob_ratio(&y0, truth.labels()), blob_ratio(&y1, truth.labels()));
        assert!(r1 > r0, "{r0} -> {r1}");
        assert!(y1.column_means().iter().all(|m| m.abs() < 1e-9));
    }
}
