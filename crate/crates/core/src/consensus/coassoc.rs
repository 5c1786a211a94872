use crate::clusterers::EnsembleLibrary;
use crate::partition::Partition;

/// Fraction of members placing two points in the same non-noise cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct CoassociationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CoassociationMatrix {
    pub fn from_partitions(parts: &[&Partition]) -> Self {
        let n = parts.first().map_or(0, |p| p.len());
        let mut data = vec![0.0; n * n];
        for p in parts {
            for members in p.members() {
                for (a, &i) in members.iter().enumerate() {
                    for &j in &members[a + 1..] {
                        data[i * n + j] += 1.0;
                    }
                }
            }
        }
        let m = parts.len().max(1) as f64;
        for i in 0..n {
            data[i * n + i] = 1.0;
            for j in i + 1..n {
                let v = data[i * n + j] / m;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Row-major `n x n` values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Connected components of the graph of positive off-diagonal entries,
    /// each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n;
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
                for u in 0..n {
                    if !seen[u] && self.data[v * n + u] > 0.0 {
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
}

pub fn coassociation(lib: &EnsembleLibrary) -> CoassociationMatrix {
    CoassociationMatrix::from_partitions(&lib.partitions())
}
