use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Label reserved for points not assigned to any cluster.
pub const NOISE: i32 = -1;

/// Assignment of `n` points to clusters `0..k`, with [`NOISE`] for unassigned points.
///
/// Labels are compacted on construction in order of first appearance, so two
/// partitions that differ only by a permutation of label ids become equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<i32>", into = "Vec<i32>")]
pub struct Partition {
    labels: Vec<i32>,
    k: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels. Any negative label is noise.
    pub fn new(raw: impl IntoIterator<Item = i64>) -> Self {
        let mut map: HashMap<i64, i32> = HashMap::new();
        let labels = raw
            .into_iter()
            .map(|l| {
                if l < 0 {
                    NOISE
                } else {
                    let next = map.len() as i32;
                    *map.entry(l).or_insert(next)
                }
            })
            .collect();
        Self { labels, k: map.len() }
    }

    pub fn from_usize(raw: &[usize]) -> Self {
        Self::new(raw.iter().map(|&l| l as i64))
    }

    pub fn from_i32(raw: &[i32]) -> Self {
        Self::new(raw.iter().map(|&l| l as i64))
    }

    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn discrete(n: usize) -> Self {
        Self {
            labels: (0..n as i32).collect(),
            k: n,
        }
    }

    pub fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![NOISE; n],
            k: 0,
        }
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct non-noise clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Point indices per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }

    /// Labels with each noise point given its own fresh cluster id.
    pub fn noise_as_singletons(&self) -> Vec<usize> {
        let mut next = self.k;
        self.labels
            .iter()
            .map(|&l| {
                if l >= 0 {
                    l as usize
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect()
    }

    /// Restricts the partition to the listed points.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self::new(idx.iter().map(|&i| self.labels[i] as i64))
    }
}

impl From<Vec<i32>> for Partition {
    fn from(v: Vec<i32>) -> Self {
        Self::from_i32(&v)
    }
}

impl From<Partition> for Vec<i32> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}
