use super::agglomerative::{Dendrogram, Linkage};
use crate::error::{invalid, Result};
use crate::matrix::{sq_euclidean, Distance, Matrix};

/// Clustering feature: count, linear sum and squared-norm sum.
#[derive(Clone, Debug)]
struct Feature {
    n: f64,
    ls: Vec<f64>,
    ss: f64,
}

impl Feature {
    fn point(x: &[f64]) -> Self {
        Self { n: 1.0, ls: x.to_vec(), ss: x.iter().map(|v| v * v).sum() }
    }

    fn add(&mut self, o: &Feature) {
        self.n += o.n;
        self.ss += o.ss;
        self.ls.iter_mut().zip(&o.ls).for_each(|(a, b)| *a += b);
    }

    fn centroid(&self) -> Vec<f64> {
        self.ls.iter().map(|v| v / self.n).collect()
    }

    fn radius_with(&self, o: &Feature) -> f64 {
        let n = self.n + o.n;
        let ss = self.ss + o.ss;
        let c2: f64 = self.ls.iter().zip(&o.ls).map(|(a, b)| ((a + b) / n).powi(2)).sum();
        (ss / n - c2).max(0.0).sqrt()
    }
}

enum Node {
    Leaf(Vec<Feature>),
    Inner(Vec<(Feature, Node)>),
}

fn summary(entries: &[Feature]) -> Feature {
    let mut f = entries[0].clone();
    entries[1..].iter().for_each(|e| f.add(e));
    f
}

fn closest<'a>(cands: impl Iterator<Item = &'a Feature>, x: &Feature) -> usize {
    let c = x.centroid();
    cands
        .enumerate()
        .map(|(i, f)| (i, sq_euclidean(&f.centroid(), &c)))
        .fold((0, f64::INFINITY), |b, (i, d)| if d < b.1 { (i, d) } else { b })
        .0
}

/// Splits items into two groups seeded by the farthest pair of summaries.
fn split<T>(items: Vec<T>, feat: impl Fn(&T) -> &Feature) -> (Vec<T>, Vec<T>) {
    let cents: Vec<Vec<f64>> = items.iter().map(|t| feat(t).centroid()).collect();
    let (mut sa, mut sb, mut best) = (0, 1, -1.0);
    for i in 0..cents.len() {
        for j in i + 1..cents.len() {
            let d = sq_euclidean(&cents[i], &cents[j]);
            if d > best {
                (sa, sb, best) = (i, j, d);
            }
        }
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, t) in items.into_iter().enumerate() {
        let to_a = i == sa || (i != sb && sq_euclidean(&cents[i], &cents[sa]) <= sq_euclidean(&cents[i], &cents[sb]));
        if to_a { a.push(t) } else { b.push(t) }
    }
    (a, b)
}

impl Node {
    /// Inserts and returns a sibling when this node overflowed.
    fn insert(&mut self, x: Feature, threshold: f64, branching: usize) -> Option<(Feature, Node)> {
        match self {
            Node::Leaf(entries) => {
                if !entries.is_empty() {
                    let i = closest(entries.iter(), &x);
                    if entries[i].radius_with(&x) <= threshold {
                        entries[i].add(&x);
                        return None;
                    }
                }
                entries.push(x);
                if entries.len() <= branching {
                    return None;
                }
                let (a, b) = split(std::mem::take(entries), |f| f);
                *entries = a;
                Some((summary(&b), Node::Leaf(b)))
            }
            Node::Inner(children) => {
                let i = closest(children.iter().map(|c| &c.0), &x);
                children[i].0.add(&x);
                let sibling = children[i].1.insert(x, threshold, branching)?;
                children[i].0 = children[i].1.summary();
                children.push(sibling);
                if children.len() <= branching {
                    return None;
                }
                let (a, b) = split(std::mem::take(children), |c| &c.0);
                *children = a;
                let s = summary(&b.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
                Some((s, Node::Inner(b)))
            }
        }
    }

    fn summary(&self) -> Feature {
        match self {
            Node::Leaf(e) => summary(e),
            Node::Inner(c) => summary(&c.iter().map(|c| c.0.clone()).collect::<Vec<_>>()),
        }
    }

    fn leaves(self, out: &mut Vec<Feature>) {
        match self {
            Node::Leaf(e) => out.extend(e),
            Node::Inner(c) => c.into_iter().for_each(|(_, n)| n.leaves(out)),
        }
    }
}

/// CF-tree summarization, then ward agglomeration of the leaf subcluster
/// centroids down to `k`; points take the label of their nearest subcluster.
pub fn birch(m: &Matrix, k: usize, threshold: f64, branching: usize) -> Result<Vec<usize>> {
    if !(threshold > 0.0) || branching < 2 {
        return invalid("birch needs threshold > 0 and branching >= 2");
    }
    let n = m.rows();
    if k == 0 || k > n {
        return invalid(format!("k={k} outside [1, {n}]"));
    }
    let mut root = Node::Leaf(Vec::new());
    for i in 0..n {
        if let Some(sibling) = root.insert(Feature::point(m.row(i)), threshold, branching) {
            let old = std::mem::replace(&mut root, Node::Leaf(Vec::new()));
            root = Node::Inner(vec![(old.summary(), old), sibling]);
        }
    }
    let mut leaves = Vec::new();
    root.leaves(&mut leaves);
    let cents: Vec<Vec<f64>> = leaves.iter().map(Feature::centroid).collect();
    let cm = Matrix::from_rows(&cents)?;
    let k_eff = k.min(cents.len());
    let sub = Dendrogram::build(&cm, Linkage::Ward, Distance::L2)?.cut(k_eff)?;
    Ok((0..n)
        .map(|i| {
            let j = (0..cents.len())
                .map(|j| (j, sq_euclidean(m.row(i), &cents[j])))
                .fold((0, f64::INFINITY), |b, (j, d)| if d < b.1 { (j, d) } else { b })
                .0;
            sub[j]
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
    fn recovers_blobs_with_small_branching() {
        let (t, truth) = generate_synthetic(&SyntheticSpec::blobs(400, 3, 2, 10.0, 2)).unwrap();
        let m = one_hot_encode(&t).unwrap().values;
        let p = Partition::from_usize(&birch(&m, 3, 0.5, 4).unwrap());
        assert!(ami(&p, &truth).unwrap() > 0.98);
    }

    #[test]
    fn huge_threshold_collapses_to_one() {
        let m = Matrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(Partition::from_usize(&birch(&m, 2, 100.0, 3).unwrap()).k(), 1);
    }
}
