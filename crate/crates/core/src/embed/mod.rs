//! Mixed-type graph embedding: smooth-kNN graphs per feature block, fuzzy
//! intersection, spectral layout and optional stochastic refinement.

mod graph;
mod knn;
mod layout;

pub use graph::{intersect_graphs, FuzzyGraph, ONE_SIDED_WEIGHT};
pub use knn::{dice_distance, knn_fuzzy_graph, smooth_knn_sigma, GraphMetric, DEFAULT_NEIGHBORS};
pub use layout::{sgd_refine, spectral_layout, standardize_columns, Layout};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::prep::EncodedMatrix;

/// A provider that maps an encoded matrix to low-dimensional coordinates.
pub trait Embedder {
    fn name(&self) -> &str;
    fn embed(&self, m: &EncodedMatrix, seed: u64) -> Result<Layout>;
}

/// Graph-intersection embedding of the numeric and categorical blocks; the
/// output columns are standardized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphEmbedding {
    pub neighbors: usize,
    pub dims: usize,
    pub epochs: usize,
    /// Categorical mixing weight; defaults to the categorical column share.
    pub alpha: Option<f64>,
}

impl Default for GraphEmbedding {
    fn default() -> Self {
        Self {
            neighbors: DEFAULT_NEIGHBORS,
            dims: 2,
            epochs: 200,
            alpha: None,
        }
    }
}

impl GraphEmbedding {
    /// The intersected graph the layout is computed from.
    pub fn graph(&self, m: &EncodedMatrix) -> Result<FuzzyGraph> {
        let k = self.neighbors.min(m.values.rows().saturating_sub(1));
        let num = (!m.numeric_block.is_empty())
            .then(|| knn_fuzzy_graph(&m.numeric(), k, GraphMetric::L2))
            .transpose()?;
        let cat = (!m.categorical_block.is_empty())
            .then(|| knn_fuzzy_graph(&m.categorical(), k, GraphMetric::Dice))
            .transpose()?;
        match (num, cat) {
            (Some(a), Some(b)) => intersect_graphs(&a, &b, self.alpha.unwrap_or_else(|| m.categorical_share())),
            (Some(g), None) | (None, Some(g)) => Ok(g),
            (None, None) => invalid("matrix has no columns to embed"),
        }
    }
}

impl Embedder for GraphEmbedding {
    fn name(&self) -> &str {
        "graph"
    }

    fn embed(&self, m: &EncodedMatrix, seed: u64) -> Result<Layout> {
        let g = self.graph(m)?;
        let y = spectral_layout(&g, self.dims)?;
        let mut y = sgd_refine(&y, &g, self.epochs, seed)?;
        standardize_columns(&mut y);
        Ok(y)
    }
}
