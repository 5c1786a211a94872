use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::{Condensed, Distance, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Ward => "ward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }

    /// Lance–Williams update of the distance from `k` to the union of `i` and `j`.
    fn update(self, dki: f64, dkj: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
        match self {
            Linkage::Single => dki.min(dkj),
            Linkage::Complete => dki.max(dkj),
            Linkage::Average => (ni * dki + nj * dkj) / (ni + nj),
            Linkage::Ward => ((ni + nk) * dki + (nj + nk) * dkj - nk * dij) / (ni + nj + nk),
        }
    }
}

/// One merge step: the two cluster ids joined, their distance and new size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Full merge history; cuts at any cluster count are cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Nearest-neighbor-chain construction. Ward operates on squared
    /// Euclidean distances and is only valid with L2.
    pub fn build(m: &Matrix, linkage: Linkage, distance: Distance) -> Result<Self> {
        if linkage == Linkage::Ward && distance != Distance::L2 {
            return invalid("ward linkage requires L2 distance");
        }
        let n = m.rows();
        if n == 0 {
            return invalid("cannot cluster zero points");
        }
        let mut d = Condensed::from_points(m, distance);
        if linkage == Linkage::Ward {
            for i in 0..n {
                for j in i + 1..n {
                    let v = d.get(i, j);
                    d.set(i, j, v * v);
                }
            }
        }
        let mut size = vec![1usize; n];
        let mut active = vec![true; n];
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        let mut chain: Vec<usize> = Vec::new();
        while merges.len() + 1 < n {
            if chain.is_empty() {
                chain.push(active.iter().position(|&a| a).expect("active cluster"));
            }
            loop {
                let x = *chain.last().expect("non-empty chain");
                let prev = chain.len().checked_sub(2).map(|p| chain[p]);
                // nearest active neighbor; prefer the chain predecessor on ties
                let mut best = prev.map(|p| (d.get(x, p), p));
                for y in 0..n {
                    if y == x || !active[y] {
                        continue;
                    }
                    let dy = d.get(x, y);
                    if best.is_none_or(|(bd, _)| dy < bd) {
                        best = Some((dy, y));
                    }
                }
                let (dist, y) = best.expect("two active clusters");
                if Some(y) == prev {
                    chain.pop();
                    chain.pop();
                    let (a, b) = (x.min(y), x.max(y));
                    let (na, nb) = (size[a] as f64, size[b] as f64);
                    for k in 0..n {
                        if k == a || k == b || !active[k] {
                            continue;
                        }
                        let v = linkage.update(d.get(k, a), d.get(k, b), dist, na, nb, size[k] as f64);
                        d.set(k, a, v);
                    }
                    active[b] = false;
                    size[a] += size[b];
                    let height = if linkage == Linkage::Ward { dist.max(0.0).sqrt() } else { dist };
                    merges.push(Merge { a, b, height, size: size[a] });
                    break;
                }
                chain.push(y);
            }
        }
        // chain order is not height order; a stable sort restores the hierarchy
        merges.sort_by(|p, q| p.height.total_cmp(&q.height));
        Ok(Self { n, merges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Flat labels after applying the first `n − k` merges.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return invalid(format!("k={k} outside [1, {}]", self.n));
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for mg in &self.merges[..self.n - k] {
            let (ra, rb) = (find(&mut parent, mg.a), find(&mut parent, mg.b));
            parent[ra.max(rb)] = ra.min(rb);
        }
        Ok((0..self.n).map(|i| find(&mut parent, i)).collect())
    }
}
