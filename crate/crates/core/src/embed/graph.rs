use crate::error::{invalid, Error, Result};

/// Sparse symmetric membership graph with weights in (0,1].
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

fn sorted_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|e| e.0);
    row
}

impl FuzzyGraph {
    /// Symmetric graph from undirected edges; repeated edges keep the last weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut adj: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return invalid(format!("edge ({i},{j}) outside {n} vertices"));
            }
            if i == j || !(w > 0.0 && w <= 1.0) {
                if i == j {
                    return invalid("self-loop");
                }
                return invalid(format!("edge weight {w} outside (0,1]"));
            }
            adj[i].insert(j, w);
            adj[j].insert(i, w);
        }
        Ok(Self {
            adj: adj.into_iter().map(|m| m.into_iter().collect()).collect(),
        })
    }

    /// Fuzzy union `w + wᵀ − w∘wᵀ` of a directed weight list.
    pub fn from_directed(directed: &[Vec<(usize, f64)>]) -> Self {
        let n = directed.len();
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for (i, out) in directed.iter().enumerate() {
            for &(j, w) in out {
                if i != j && w > 0.0 {
                    rows[i].insert(j, w.min(1.0));
                }
            }
        }
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for (&j, &a) in &rows[i] {
                let b = rows[j].get(&i).copied().unwrap_or(0.0);
                if b > 0.0 && j < i {
                    continue;
                }
                let w = (a + b - a * b).min(1.0);
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        Self {
            adj: adj.into_iter().map(sorted_row).collect(),
        }
    }

    /// One direction of every edge (`i < j`); feeding it back through
    /// [`from_directed`](Self::from_directed) reproduces the graph.
    pub fn as_directed(&self) -> Vec<Vec<(usize, f64)>> {
        self.adj
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().filter(|e| e.0 > i).copied().collect())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let row = &self.adj[i];
        row.binary_search_by_key(&j, |e| e.0).ok().map(|p| row[p].1)
    }

    /// Undirected edges with `i < j`, in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |e| e.0 > i).map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|e| e.1).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, row)| {
            row.iter().all(|&(j, w)| self.weight(j, i) == Some(w))
        })
    }

    /// Connected components, each sorted, ordered by their smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &(u, _) in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub(crate) fn require_same_size(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::LengthMismatch(self.n(), other.n()));
        }
        Ok(())
    }
}

/// Floor weight for an edge present in only one input.
pub const ONE_SIDED_WEIGHT: f64 = 1e-3;

/// Weighted geometric mean `a^(1−α)·b^α` on the union of both edge sets.
pub fn intersect_graphs(num: &FuzzyGraph, cat: &FuzzyGraph, alpha: f64) -> Result<FuzzyGraph> {
    num.require_same_size(cat)?;
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("mixing weight {alpha} outside [0,1]"));
    }
    let mut adj = Vec::with_capacity(num.n());
    for i in 0..num.n() {
        let (a, b) = (num.neighbors(i), cat.neighbors(i));
        let (mut p, mut q) = (0, 0);
        let mut row = Vec::with_capacity(a.len().max(b.len()));
        while p < a.len() || q < b.len() {
            let ja = a.get(p).map_or(usize::MAX, |e| e.0);
            let jb = b.get(q).map_or(usize::MAX, |e| e.0);
            let j = ja.min(jb);
            let wa = if ja == j { p += 1; a[p - 1].1 } else { ONE_SIDED_WEIGHT };
            let wb = if jb == j { q += 1; b[q - 1].1 } else { ONE_SIDED_WEIGHT };
            let w = wa.powf(1.0 - alpha) * wb.powf(alpha);
            row.push((j, w.clamp(f64::MIN_POSITIVE, 1.0)));
        }
        adj.push(row);
    }
    Ok(FuzzyGraph { adj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn union_algebra() {
        let g = FuzzyGraph::from_directed(&[vec![(1, 1.0)], vec![]]);
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(1, 0), Some(1.0));
        let g = FuzzyGraph::from_directed(&[vec![(1, 0.5)], vec![(0, 0.5)]]);
        assert_eq!(g.weight(0, 1), Some(0.75));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn geometric_mean_example() {
        let a = FuzzyGraph::from_edges(2, [(0, 1, 0.9)]).unwrap();
        let b = FuzzyGraph::from_edges(2, [(0, 1, 0.4)]).unwrap();
        let g = intersect_graphs(&a, &b, 0.5).unwrap();
        assert!((g.weight(0, 1).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn extreme_mixing_weights() {
        let a = FuzzyGraph::from_edges(3, [(0, 1, 0.9), (1, 2, 0.3)]).unwrap();
        let b = FuzzyGraph::from_edges(3, [(0, 1, 0.4), (0, 2, 0.7)]).unwrap();
        let g0 = intersect_graphs(&a, &b, 0.0).unwrap();
        assert_eq!(g0.weight(0, 1), Some(0.9));
        assert_eq!(g0.weight(1, 2), Some(0.3));
        assert_eq!(g0.weight(0, 2), Some(ONE_SIDED_WEIGHT));
        let g1 = intersect_graphs(&a, &b, 1.0).unwrap();
        assert_eq!(g1.weight(0, 1), Some(0.4));
        assert_eq!(g1.weight(0, 2), Some(0.7));
        assert_eq!(g1.weight(1, 2), Some(ONE_SIDED_WEIGHT));
        assert!(g1.is_symmetric());
        let c = FuzzyGraph::from_edges(4, [(0, 1, 0.5)]).unwrap();
        assert!(intersect_graphs(&a, &c, 0.5).is_err());
    }

    fn arb_graph(n: usize) -> impl Strategy<Value = FuzzyGraph> {
        prop::collection::vec((0..n, 0..n, 0.001f64..=1.0), 1..30).prop_map(move |e| {
            FuzzyGraph::from_edges(n, e.into_iter().filter(|(i, j, _)| i != j)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn symmetrization_idempotent(g in arb_graph(8)) {
            let again = FuzzyGraph::from_directed(&g.as_directed());
            prop_assert!(again.is_symmetric());
            prop_assert_eq!(&again, &g);
            prop_assert_eq!(FuzzyGraph::from_directed(&again.as_directed()), again);
        }

        #[test]
        fn intersection_between_inputs(a in arb_graph(6), b in arb_graph(6), alpha in 0.0f64..=1.0) {
            let g = intersect_graphs(&a, &b, alpha).unwrap();
            prop_assert!(g.is_symmetric());
            for (i, j, w) in g.edges() {
                prop_assert!(w > 0.0 && w <= 1.0);
                if let (Some(x), Some(y)) = (a.weight(i, j), b.weight(i, j)) {
                    prop_assert!(w >= x.min(y) - 1e-12 && w <= x.max(y) + 1e-12);
                }
            }
        }
    }
}
