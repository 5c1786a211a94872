//! Internal validity indices, information-theoretic partition comparison,
//! distribution divergences and score binning/scaling.

mod binning;
mod divergence;
mod info;
mod internal;
mod sdbw;

pub use binning::{fd_bin, fd_bin_in_range, scale_unit, scale_unit_with_sentinels, BinnedVector};
pub use divergence::{jsd, kl_divergence};
pub use info::{
    aami, ami, anmi, entropy, expected_mutual_information, mutual_information, nmi, pairwise_ami,
};
pub use internal::{calinski_harabasz, davies_bouldin, dunn, silhouette, DunnSeparation};
pub use sdbw::{sdbw, SdbwVariant};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "SI")]
    Si,
    #[serde(rename = "DI")]
    Di,
    #[serde(rename = "CHI")]
    Chi,
    #[serde(rename = "DB")]
    Db,
    #[serde(rename = "SDbw_Halkidi")]
    SdbwHalkidi,
    #[serde(rename = "SDbw_Kim")]
    SdbwKim,
    #[serde(rename = "SDbw_Tong")]
    SdbwTong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    MaxBetter,
    MinBetter,
}

impl MetricId {
    pub const ALL: [MetricId; 7] = [
        MetricId::Si,
        MetricId::Di,
        MetricId::Chi,
        MetricId::Db,
        MetricId::SdbwHalkidi,
        MetricId::SdbwKim,
        MetricId::SdbwTong,
    ];

    pub fn orientation(self) -> Orientation {
        match self {
            MetricId::Si | MetricId::Di | MetricId::Chi => Orientation::MaxBetter,
            _ => Orientation::MinBetter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Si => "SI",
            MetricId::Di => "DI",
            MetricId::Chi => "CHI",
            MetricId::Db => "DB",
            MetricId::SdbwHalkidi => "SDbw_Halkidi",
            MetricId::SdbwKim => "SDbw_Kim",
            MetricId::SdbwTong => "SDbw_Tong",
        }
    }

    /// `true` when `a` is a strictly better score than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self.orientation() {
            Orientation::MaxBetter => a > b,
            Orientation::MinBetter => a < b,
        }
    }

    pub fn evaluate(self, matrix: &Matrix, partition: &Partition) -> Result<f64> {
        match self {
            MetricId::Si => silhouette(matrix, partition),
            MetricId::Di => dunn(matrix, partition, DunnSeparation::Centroid),
            MetricId::Chi => calinski_harabasz(matrix, partition),
            MetricId::Db => davies_bouldin(matrix, partition),
            MetricId::SdbwHalkidi => sdbw(matrix, partition, SdbwVariant::Halkidi),
            MetricId::SdbwKim => sdbw(matrix, partition, SdbwVariant::Kim),
            MetricId::SdbwTong => sdbw(matrix, partition, SdbwVariant::Tong),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

/// One raw metric value with its fixed orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: MetricId,
    pub value: f64,
}

impl MetricScore {
    pub fn orientation(&self) -> Orientation {
        self.metric.orientation()
    }
}

/// Non-noise points grouped by cluster, with centroids.
pub(crate) struct Clusters {
    pub members: Vec<Vec<usize>>,
    pub centroids: Vec<Vec<f64>>,
}

impl Clusters {
    pub fn new(matrix: &Matrix, partition: &Partition) -> Result<Self> {
        if matrix.rows() != partition.len() {
            return Err(Error::LengthMismatch(matrix.rows(), partition.len()));
        }
        let members: Vec<Vec<usize>> = partition
            .members()
            .into_iter()
            .filter(|m| !m.is_empty())
            .collect();
        let d = matrix.cols();
        let centroids = members
            .iter()
            .map(|idx| {
                let mut c = vec![0.0; d];
                for &i in idx {
                    for (a, b) in c.iter_mut().zip(matrix.row(i)) {
                        *a += b;
                    }
                }
                c.iter_mut().for_each(|v| *v /= idx.len() as f64);
                c
            })
            .collect();
        Ok(Self { members, centroids })
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn n(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    pub fn require_two(&self, name: &'static str) -> Result<()> {
        if self.k() < 2 {
            Err(Error::TooFewClusters(name))
        } else {
            Ok(())
        }
    }
}
