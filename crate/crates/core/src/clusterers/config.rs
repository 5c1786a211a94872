use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::agglomerative::Linkage;
use super::gmm::Covariance;
use crate::error::{Error, Result};
use crate::matrix::Distance;

pub const DEFAULT_BRANCHING: usize = 50;
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Algorithm kind with its hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    KMeans { k: usize },
    Agglomerative { k: usize, linkage: Linkage, distance: Distance },
    Dbscan { eps: f64, min_points: usize, distance: Distance },
    Gmm { k: usize, covariance: Covariance },
    Spectral { k: usize, gamma: f64 },
    Birch { k: usize, threshold: f64, branching: usize },
    Hdbscan { min_cluster_size: usize, min_samples: usize },
    Affinity { damping: f64, preference: Option<f64> },
}

impl Algorithm {
    pub fn kind(&self) -> &'static str {
        match self {
            Algorithm::KMeans { .. } => "kmeans",
            Algorithm::Agglomerative { .. } => "agglomerative",
            Algorithm::Dbscan { .. } => "dbscan",
            Algorithm::Gmm { .. } => "gmm",
            Algorithm::Spectral { .. } => "spectral",
            Algorithm::Birch { .. } => "birch",
            Algorithm::Hdbscan { .. } => "hdbscan",
            Algorithm::Affinity { .. } => "affinity",
        }
    }

    /// Requested cluster count, for kinds that take one.
    pub fn k(&self) -> Option<usize> {
        match *self {
            Algorithm::KMeans { k }
            | Algorithm::Agglomerative { k, .. }
            | Algorithm::Gmm { k, .. }
            | Algorithm::Spectral { k, .. }
            | Algorithm::Birch { k, .. } => Some(k),
            _ => None,
        }
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        match self {
            Algorithm::KMeans { k } => vec![("k", k.to_string())],
            Algorithm::Agglomerative { k, linkage, distance } => vec![
                ("k", k.to_string()),
                ("linkage", linkage.name().into()),
                ("distance", distance.name().into()),
            ],
            Algorithm::Dbscan { eps, min_points, distance } => vec![
                ("eps", eps.to_string()),
                ("min_points", min_points.to_string()),
                ("distance", distance.name().into()),
            ],
            Algorithm::Gmm { k, covariance } => vec![("k", k.to_string()), ("covariance", covariance.name().into())],
            Algorithm::Spectral { k, gamma } => vec![("k", k.to_string()), ("gamma", gamma.to_string())],
            Algorithm::Birch { k, threshold, branching } => vec![
                ("k", k.to_string()),
                ("threshold", threshold.to_string()),
                ("branching", branching.to_string()),
            ],
            Algorithm::Hdbscan { min_cluster_size, min_samples } => vec![
                ("min_cluster_size", min_cluster_size.to_string()),
                ("min_samples", min_samples.to_string()),
            ],
            Algorithm::Affinity { damping, preference } => {
                let mut v = vec![("damping", damping.to_string())];
                if let Some(p) = preference {
                    v.push(("preference", p.to_string()));
                }
                v
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("{}: {m}", self.kind())));
        if let Some(0) = self.k() {
            return bad("k must be at least 1".into());
        }
        match *self {
            Algorithm::Agglomerative { linkage: Linkage::Ward, distance: Distance::L1, .. } => {
                bad("ward linkage requires L2".into())
            }
            Algorithm::Dbscan { eps, min_points, .. } if !(eps > 0.0 && eps.is_finite()) || min_points == 0 => {
                bad(format!("eps={eps} min_points={min_points}"))
            }
            Algorithm::Spectral { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => bad(format!("gamma={gamma}")),
            Algorithm::Birch { threshold, branching, .. } if !(threshold > 0.0 && threshold.is_finite()) || branching < 2 => {
                bad(format!("threshold={threshold} branching={branching}"))
            }
            Algorithm::Hdbscan { min_cluster_size, min_samples } if min_cluster_size < 2 || min_samples == 0 => {
                bad(format!("min_cluster_size={min_cluster_size} min_samples={min_samples}"))
            }
            Algorithm::Affinity { damping, preference } if !(0.5..1.0).contains(&damping) || preference.is_some_and(|p| !p.is_finite()) => {
                bad(format!("damping={damping}"))
            }
            _ => Ok(()),
        }
    }
}

/// A clusterer configuration; its canonical text is `kind:key=value,...,seed=s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClustererConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl ClustererConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self { algorithm, seed }
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Canonical text without the seed: equal for configs that differ only by seed.
    pub fn hyperparameters(&self) -> String {
        let p: Vec<String> = self.algorithm.params().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}:{}", self.algorithm.kind(), p.join(","))
    }

    pub fn validate(&self) -> Result<()> {
        self.algorithm.validate()
    }
}

impl fmt::Display for ClustererConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},seed={}", self.hyperparameters(), self.seed)
    }
}

impl FromStr for ClustererConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("config `{s}`: {m}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing `kind:`"))?;
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            kv.insert(k.trim(), v.trim());
        }
        let mut take = |key: &str| kv.remove(key).ok_or_else(|| bad(&format!("missing `{key}`")));
        fn num<T: FromStr>(v: &str, s: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidArgument(format!("config `{s}`: bad number `{v}`")))
        }
        let dist = |v: &str| match v {
            "L1" | "l1" => Ok(Distance::L1),
            "L2" | "l2" => Ok(Distance::L2),
            _ => Err(bad("distance must be L1 or L2")),
        };
        let seed = num(take("seed")?, s)?;
        let algorithm = match kind {
            "kmeans" => Algorithm::KMeans { k: num(take("k")?, s)? },
            "agglomerative" => Algorithm::Agglomerative {
                k: num(take("k")?, s)?,
                linkage: Linkage::parse(take("linkage")?).ok_or_else(|| bad("unknown linkage"))?,
                distance: dist(take("distance")?)?,
            },
            "dbscan" => Algorithm::Dbscan {
                eps: num(take("eps")?, s)?,
                min_points: num(take("min_points")?, s)?,
                distance: dist(take("distance")?)?,
            },
            "gmm" => Algorithm::Gmm {
                k: num(take("k")?, s)?,
                covariance: Covariance::parse(take("covariance")?).ok_or_else(|| bad("unknown covariance"))?,
            },
            "spectral" => Algorithm::Spectral { k: num(take("k")?, s)?, gamma: num(take("gamma")?, s)? },
            "birch" => Algorithm::Birch {
                k: num(take("k")?, s)?,
                threshold: num(take("threshold")?, s)?,
                branching: num(take("branching")?, s)?,
            },
            "hdbscan" => Algorithm::Hdbscan {
                min_cluster_size: num(take("min_cluster_size")?, s)?,
                min_samples: num(take("min_samples")?, s)?,
            },
            "affinity" => Algorithm::Affinity {
                damping: num(take("damping")?, s)?,
                preference: kv.remove("preference").map(|v| num(v, s)).transpose()?,
            },
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(bad(&format!("unexpected key `{k}`")));
        }
        let cfg = ClustererConfig { algorithm, seed };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Serialize for ClustererConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for ClustererConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridProfile {
    #[default]
    Small,
    Full,
}

/// Default hyperparameter grid; all configs share `seed`.
pub fn default_grid(profile: GridProfile, seed: u64) -> Vec<ClustererConfig> {
    let max_k = match profile {
        GridProfile::Small => 10,
        GridProfile::Full => 30,
    };
    let mut a = Vec::new();
    a.extend((2..=max_k).map(|k| Algorithm::KMeans { k }));
    let agg_ks: Vec<usize> = match profile {
        GridProfile::Small => vec![2, 5, 10],
        GridProfile::Full => (2..=30).collect(),
    };
    let distances: &[Distance] = match profile {
        GridProfile::Small => &[Distance::L2],
        GridProfile::Full => &[Distance::L1, Distance::L2],
    };
    for linkage in Linkage::ALL {
        for &distance in distances {
            if linkage == Linkage::Ward && distance == Distance::L1 {
                continue;
            }
            a.extend(agg_ks.iter().map(|&k| Algorithm::Agglomerative { k, linkage, distance }));
        }
    }
    let (eps, pts): (&[f64], &[usize]) = match profile {
        GridProfile::Small => (&[0.1, 0.2, 0.4], &[5, 10]),
        GridProfile::Full => (&[0.05, 0.1, 0.2, 0.3, 0.4], &[5, 10, 20]),
    };
    for &e in eps {
        for &p in pts {
            a.push(Algorithm::Dbscan { eps: e, min_points: p, distance: Distance::L2 });
        }
    }
    match profile {
        GridProfile::Small => {
            a.extend([2, 5, 10].map(|k| Algorithm::Gmm { k, covariance: Covariance::Full }));
        }
        GridProfile::Full => {
            a.extend((2..=30).map(|k| Algorithm::Gmm { k, covariance: Covariance::Full }));
            a.extend((2..=30).map(|k| Algorithm::Spectral { k, gamma: DEFAULT_GAMMA }));
            a.extend((2..=30).map(|k| Algorithm::Birch { k, threshold: 0.2, branching: DEFAULT_BRANCHING }));
            a.extend([5, 10, 20, 40].map(|m| Algorithm::Hdbscan { min_cluster_size: m, min_samples: 5 }));
            a.extend([0.5, 0.7, 0.9].map(|d| Algorithm::Affinity { damping: d, preference: None }));
        }
    }
    a.into_iter().map(|algorithm| ClustererConfig { algorithm, seed }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let small = default_grid(GridProfile::Small, 0);
        assert_eq!(small.len(), 30);
        let count = |g: &[ClustererConfig], kind: &str| g.iter().filter(|c| c.algorithm.kind() == kind).count();
        assert_eq!(count(&small, "kmeans"), 9);
        assert_eq!(count(&small, "agglomerative"), 12);
        assert_eq!(count(&small, "dbscan"), 6);
        assert_eq!(count(&small, "gmm"), 3);
        let full = default_grid(GridProfile::Full, 0);
        assert!(full.iter().any(|c| c.algorithm
            == Algorithm::Agglomerative { k: 30, linkage: Linkage::Ward, distance: Distance::L2 }));
        assert!(count(&full, "spectral") > 0 && count(&full, "birch") > 0);
        for c in small.iter().chain(&full) {
            c.validate().unwrap();
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        for c in default_grid(GridProfile::Full, 42) {
            let text = c.canonical();
            assert_eq!(text.parse::<ClustererConfig>().unwrap(), c, "{text}");
        }
        let c: ClustererConfig = "affinity:damping=0.7,preference=-3.5,seed=1".parse().unwrap();
        assert_eq!(c.algorithm, Algorithm::Affinity { damping: 0.7, preference: Some(-3.5) });
        assert_eq!(c.hyperparameters(), "affinity:damping=0.7,preference=-3.5");
        assert!("kmeans:k=0,seed=1".parse::<ClustererConfig>().is_err());
        assert!("agglomerative:k=3,linkage=ward,distance=L1,seed=1".parse::<ClustererConfig>().is_err());
        assert!("kmeans:k=3,seed=1,extra=2".parse::<ClustererConfig>().is_err());
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"affinity:damping=0.7,preference=-3.5,seed=1\"");
    }
}
