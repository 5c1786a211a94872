//! Base clustering algorithms behind one configuration type, and ensemble
//! library generation over a hyperparameter grid.

mod affinity;
mod agglomerative;
mod birch;
mod config;
mod dbscan;
mod gmm;
mod hdbscan;
mod kmeans;
mod spectral;

pub use affinity::affinity_propagation;
pub use agglomerative::{Dendrogram, Linkage, Merge};
pub use birch::birch;
pub use config::{default_grid, Algorithm, ClustererConfig, GridProfile, DEFAULT_BRANCHING, DEFAULT_GAMMA};
pub use dbscan::dbscan;
pub use gmm::{gmm, Covariance};
pub use hdbscan::hdbscan;
pub use kmeans::{kmeans, kmeans_restarts, KMeansFit};
pub use spectral::SpectralBasis;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{Distance, Matrix};
use crate::partition::Partition;

/// Structures shared by several configs on the same matrix.
#[derive(Default)]
struct FitCache {
    dendrograms: BTreeMap<(Linkage, Distance), Dendrogram>,
    spectral: BTreeMap<u64, SpectralBasis>,
}

impl FitCache {
    fn prepare(m: &Matrix, grid: &[ClustererConfig]) -> Self {
        let mut cache = FitCache::default();
        for c in grid {
            match c.algorithm {
                Algorithm::Agglomerative { linkage, distance, .. } if !cache.dendrograms.contains_key(&(linkage, distance)) => {
                    if let Ok(d) = Dendrogram::build(m, linkage, distance) {
                        cache.dendrograms.insert((linkage, distance), d);
                    }
                }
                Algorithm::Spectral { gamma, .. } if !cache.spectral.contains_key(&gamma.to_bits()) => {
                    if let Ok(b) = SpectralBasis::build(m, gamma) {
                        cache.spectral.insert(gamma.to_bits(), b);
                    }
                }
                _ => {}
            }
        }
        cache
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        return invalid(format!("k={k} exceeds {n} points"));
    }
    Ok(())
}

fn fit_with(config: &ClustererConfig, m: &Matrix, cache: Option<&FitCache>) -> Result<Partition> {
    config.validate()?;
    if !m.is_finite() {
        return invalid("matrix contains non-finite values");
    }
    let n = m.rows();
    if n == 0 {
        return invalid("cannot cluster zero points");
    }
    if let Some(k) = config.algorithm.k() {
        check_k(k, n)?;
    }
    let seed = config.seed;
    Ok(match config.algorithm {
        Algorithm::KMeans { k } => Partition::from_usize(&kmeans(m, k, seed)?.labels),
        Algorithm::Agglomerative { k, linkage, distance } => {
            let cut = match cache.and_then(|c| c.dendrograms.get(&(linkage, distance))) {
                Some(d) => d.cut(k)?,
                None => Dendrogram::build(m, linkage, distance)?.cut(k)?,
            };
            Partition::from_usize(&cut)
        }
        Algorithm::Dbscan { eps, min_points, distance } => Partition::from_i32(&dbscan(m, eps, min_points, distance)),
        Algorithm::Gmm { k, covariance } => Partition::from_usize(&gmm(m, k, covariance, seed)?),
        Algorithm::Spectral { k, gamma } => {
            let labels = match cache.and_then(|c| c.spectral.get(&gamma.to_bits())) {
                Some(b) => b.cluster(k, seed)?,
                None => SpectralBasis::build(m, gamma)?.cluster(k, seed)?,
            };
            Partition::from_usize(&labels)
        }
        Algorithm::Birch { k, threshold, branching } => Partition::from_usize(&birch(m, k, threshold, branching)?),
        Algorithm::Hdbscan { min_cluster_size, min_samples } => {
            Partition::from_i32(&hdbscan(m, min_cluster_size, min_samples, Distance::L2)?)
        }
        Algorithm::Affinity { damping, preference } => {
            Partition::from_usize(&affinity_propagation(m, damping, preference, seed)?)
        }
    })
}

/// Fits one configuration. Deterministic for a fixed config and matrix.
pub fn fit(config: &ClustererConfig, m: &Matrix) -> Result<Partition> {
    fit_with(config, m, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub config: ClustererConfig,
    pub partition: Partition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub config: ClustererConfig,
    pub error: String,
}

/// Ordered library of fitted members over the same points.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleLibrary {
    members: Vec<Member>,
    failures: Vec<FitFailure>,
}

impl EnsembleLibrary {
    pub fn new(members: Vec<Member>) -> Result<Self> {
        Self::with_failures(members, Vec::new())
    }

    fn with_failures(members: Vec<Member>, failures: Vec<FitFailure>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("ensemble library"));
        }
        let n = members[0].partition.len();
        let mut seen = HashSet::new();
        for m in &members {
            if m.partition.len() != n {
                return Err(Error::LengthMismatch(n, m.partition.len()));
            }
            if !seen.insert(m.config.canonical()) {
                return invalid(format!("duplicate config `{}`", m.config));
            }
        }
        Ok(Self { members, failures })
    }

    /// Library of bare partitions with placeholder k-means configs; for tests
    /// and ad-hoc ensembles.
    pub fn from_partitions(parts: Vec<Partition>) -> Result<Self> {
        Self::new(
            parts
                .into_iter()
                .enumerate()
                .map(|(i, partition)| Member {
                    config: ClustererConfig::new(Algorithm::KMeans { k: partition.k().max(1) }, i as u64),
                    partition,
                })
                .collect(),
        )
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn failures(&self) -> &[FitFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.members[0].partition.len()
    }

    pub fn partitions(&self) -> Vec<&Partition> {
        self.members.iter().map(|m| &m.partition).collect()
    }

    /// Members at the given library positions, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.members[i].clone()).collect())
    }

    /// One JSON record per member: canonical config text and labels.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for m in &self.members {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut members = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            members.push(serde_json::from_str(t)?);
        }
        Self::new(members)
    }
}

/// Fits every grid config; failures are recorded and skipped. Members keep
/// grid order.
pub fn generate_library(m: &Matrix, grid: &[ClustererConfig]) -> Result<EnsembleLibrary> {
    if grid.is_empty() {
        return Err(Error::Empty("clusterer grid"));
    }
    let cache = FitCache::prepare(m, grid);
    let one = |c: &ClustererConfig| fit_with(c, m, Some(&cache));
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Partition>> = grid.par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Partition>> = grid.iter().map(one).collect();
    let mut members = Vec::new();
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    for (c, r) in grid.iter().zip(results) {
        if !seen.insert(c.canonical()) {
            failures.push(FitFailure { config: c.clone(), error: "duplicate config".into() });
            continue;
        }
        match r {
            Ok(partition) => members.push(Member { config: c.clone(), partition }),
            Err(e) => failures.push(FitFailure { config: c.clone(), error: e.to_string() }),
        }
    }
    if members.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    EnsembleLibrary::with_failures(members, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::prep::one_hot_encode;
    use crate::validity::ami;

    fn blobs(n: usize, seed: u64) -> (Matrix, Partition) {
        let (t, truth) = generate_synthetic(&SyntheticSpec::blobs(n, 3, 2, 8.0, seed)).unwrap();
        let mut m = one_hot_encode(&t).unwrap().values;
        crate::embed::standardize_columns(&mut m);
        (m, truth)
    }

    #[test]
    fn kmeans_grid_has_29_members() {
        let (m, _) = blobs(120, 1);
        let grid: Vec<_> = (2..=30).map(|k| ClustererConfig::new(Algorithm::KMeans { k }, 0)).collect();
        assert_eq!(generate_library(&m, &grid).unwrap().len(), 29);
    }

    #[test]
    fn invalid_config_recorded() {
        let (m, _) = blobs(60, 2);
        let mut grid: Vec<_> = (2..=5).map(|k| ClustererConfig::new(Algorithm::KMeans { k }, 0)).collect();
        grid.insert(2, ClustererConfig::new(Algorithm::KMeans { k: 500 }, 0));
        let lib = generate_library(&m, &grid).unwrap();
        assert_eq!(lib.len(), 4);
        assert_eq!(lib.failures().len(), 1);
        assert_eq!(lib.members()[2].config.algorithm, Algorithm::KMeans { k: 4 });
        let bad = [ClustererConfig::new(Algorithm::KMeans { k: 500 }, 0)];
        assert!(matches!(generate_library(&m, &bad), Err(Error::AllFitsFailed)));
        assert!(generate_library(&m, &[]).is_err());
    }

    #[test]
    fn seeds_make_distinct_members() {
        let (m, _) = blobs(60, 3);
        let grid: Vec<_> = (0..3).map(|s| ClustererConfig::new(Algorithm::KMeans { k: 7 }, s)).collect();
        let lib = generate_library(&m, &grid).unwrap();
        assert_eq!(lib.len(), 3);
        for (c, mem) in grid.iter().zip(lib.members()) {
            assert_eq!(fit(c, &m).unwrap(), mem.partition);
        }
    }

    #[test]
    fn every_small_kind_finds_blobs_and_fits_are_deterministic() {
        let (m, truth) = blobs(300, 4);
        // the small grid has no three-component mixture, so add one
        let mut grid = default_grid(GridProfile::Small, 5);
        grid.push(ClustererConfig::new(Algorithm::Gmm { k: 3, covariance: Covariance::Full }, 5));
        let lib = generate_library(&m, &grid).unwrap();
        for kind in ["kmeans", "agglomerative", "dbscan", "gmm"] {
            let best = lib
                .members()
                .iter()
                .filter(|mm| mm.config.algorithm.kind() == kind)
                .map(|mm| ami(&mm.partition, &truth).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(best >= 0.95, "{kind}: {best}");
        }
        for mm in lib.members().iter().step_by(7) {
            assert_eq!(fit(&mm.config, &m).unwrap(), mm.partition);
        }
    }

    #[test]
    fn agglomerative_extremes() {
        let (m, _) = blobs(30, 5);
        for linkage in Linkage::ALL {
            let c = |k| ClustererConfig::new(Algorithm::Agglomerative { k, linkage, distance: Distance::L2 }, 0);
            assert_eq!(fit(&c(30), &m).unwrap(), Partition::discrete(30));
            assert_eq!(fit(&c(1), &m).unwrap(), Partition::single(30));
        }
    }

    #[test]
    fn dbscan_degenerate_eps_is_all_noise() {
        let (m, _) = blobs(30, 6);
        let c = ClustererConfig::new(Algorithm::Dbscan { eps: 1e-9, min_points: 2, distance: Distance::L2 }, 0);
        assert_eq!(fit(&c, &m).unwrap(), Partition::all_noise(30));
    }

    #[test]
    fn jsonl_round_trip() {
        let (m, _) = blobs(40, 7);
        let lib = generate_library(&m, &default_grid(GridProfile::Small, 1)).unwrap();
        let mut buf = Vec::new();
        lib.write_jsonl(&mut buf).unwrap();
        let back = EnsembleLibrary::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.members(), lib.members());
    }
}
