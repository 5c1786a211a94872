use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clusterers::GridProfile;
use crate::consensus::{KPolicy, Reference};
use crate::data::{is_month_tag, ColumnKind, ColumnSchema};
use crate::embed::GraphEmbedding;
use crate::error::{invalid, Result};
use crate::strategy::{Pruning, SamplingStrategy, StrategyId, DEFAULT_KEEP};
use crate::temporal::{MatchMode, DEFAULT_THRESHOLD};
use crate::validity::MetricId;

/// Everything a run depends on. Deserializes from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 means one per logical core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub input: InputConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub embedding: GraphEmbedding,
    #[serde(default)]
    pub grid: GridProfile,
    #[serde(default)]
    pub consensus: ConsensusConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub drift: Option<DriftConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("ensclust-out")
}

fn default_metrics() -> Vec<String> {
    MetricId::ALL.iter().map(|m| m.name().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// One table per month, CSV or JSON lines.
    pub paths: Vec<PathBuf>,
    /// Month tags matching `paths`; defaults to each table's file stem.
    #[serde(default)]
    pub months: Vec<String>,
    pub schema: Vec<ColumnSchema>,
    /// Subject id column; never used as a clustering feature.
    #[serde(default)]
    pub subject: Option<String>,
    /// Further columns kept out of the features.
    #[serde(default)]
    pub ignore: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub size: usize,
    pub strategy: SamplingStrategy,
    pub stratum: Option<String>,
    /// Optional sample-size search, reported alongside the run.
    pub search: Option<SearchConfig>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { size: 1000, strategy: SamplingStrategy::Random, stratum: None, search: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_search_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_search_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_search_ks() -> Vec<usize> {
    (2..=30).collect()
}

fn default_search_seeds() -> Vec<u64> {
    vec![0]
}

fn default_restarts() -> usize {
    3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsensusConfig {
    pub k: KPolicy,
    pub reference: Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub pruning: Pruning,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self { pruning: Pruning::Keep(DEFAULT_KEEP) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub threshold: f64,
    /// Which strategy's partition is profiled.
    pub strategy: String,
    pub exclude_features: Vec<String>,
    /// Numeric percentile-rank columns bucketed as Low/Mid/High.
    pub ranked: Vec<String>,
    pub mode: MatchMode,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            strategy: "HM-Stg1".into(),
            exclude_features: Vec::new(),
            ranked: Vec::new(),
            mode: MatchMode::Averaged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub category: String,
    /// Defaults to the input subject column.
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub breakdowns: Vec<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Input paths are taken relative to `base` unless absolute.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in &mut self.input.paths {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.output.is_relative() {
            self.output = base.join(&self.output);
        }
    }

    pub fn metric_ids(&self) -> Result<Vec<MetricId>> {
        self.metrics.iter().map(|m| m.parse()).collect()
    }

    pub fn stability_strategy(&self) -> Result<StrategyId> {
        self.stability.strategy.parse()
    }

    pub fn month_tags(&self) -> Vec<String> {
        if !self.input.months.is_empty() {
            return self.input.months.clone();
        }
        self.input
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("month{}", i + 1))
            })
            .collect()
    }

    fn schema_kind(&self, name: &str) -> Option<ColumnKind> {
        self.input.schema.iter().find(|s| s.name == name).map(|s| s.kind)
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.input.paths.is_empty() {
            return invalid("input.paths is empty");
        }
        if self.input.schema.is_empty() {
            return invalid("input.schema is empty");
        }
        let months = self.month_tags();
        if months.len() != self.input.paths.len() {
            return invalid(format!("{} months for {} input paths", months.len(), self.input.paths.len()));
        }
        if months.iter().collect::<BTreeSet<_>>().len() != months.len() {
            return invalid("month tags are not unique");
        }
        if let Some(bad) = months.iter().find(|m| !m.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))) {
            return invalid(format!("month tag `{bad}` is not usable in a file name"));
        }
        if !self.input.months.is_empty() {
            if let Some(bad) = months.iter().find(|m| !is_month_tag(m)) {
                return invalid(format!("month `{bad}` is not YYYY-MM"));
            }
        }
        for name in self.input.subject.iter().chain(&self.input.ignore) {
            if self.schema_kind(name).is_none() {
                return invalid(format!("column `{name}` is not in the schema"));
            }
        }
        let excluded: BTreeSet<&String> = self.input.subject.iter().chain(&self.input.ignore).collect();
        if self.input.schema.iter().all(|s| excluded.contains(&s.name)) {
            return invalid("no feature columns left after removing subject and ignored columns");
        }
        if self.sampling.size < 10 {
            return invalid(format!("sampling.size {} is below 10", self.sampling.size));
        }
        if self.sampling.strategy == SamplingStrategy::Stratified {
            match &self.sampling.stratum {
                None => return invalid("stratified sampling needs sampling.stratum"),
                Some(s) if !matches!(self.schema_kind(s), Some(ColumnKind::Categorical | ColumnKind::Ordinal)) => {
                    return invalid(format!("stratum `{s}` is not a categorical column"))
                }
                _ => {}
            }
        }
        if let Some(s) = &self.sampling.search {
            if s.sizes.len() < 2 || s.sizes.iter().any(|&n| n < 10) {
                return invalid("sampling.search.sizes needs at least two sizes of 10 or more");
            }
            if s.ks.is_empty() || s.ks.contains(&0) || s.ks.contains(&1) || s.seeds.is_empty() || s.restarts == 0 {
                return invalid("sampling.search needs ks >= 2, seeds and restarts");
            }
        }
        let e = &self.embedding;
        if e.neighbors < 2 || e.dims == 0 {
            return invalid("embedding needs neighbors >= 2 and dims >= 1");
        }
        if let Some(a) = e.alpha {
            if !(0.0..=1.0).contains(&a) {
                return invalid(format!("embedding.alpha {a} is outside [0, 1]"));
            }
        }
        if let KPolicy::Fixed(0) = self.consensus.k {
            return invalid("consensus k must be at least 1");
        }
        match self.strategy.pruning {
            Pruning::Keep(k) if k < 2 => return invalid("strategy keep must be at least 2"),
            Pruning::AamiCut(c) if !c.is_finite() => return invalid("strategy AAMI cut must be finite"),
            _ => {}
        }
        let metrics = self.metric_ids()?;
        if metrics.is_empty() {
            return invalid("metrics list is empty");
        }
        if metrics.iter().collect::<BTreeSet<_>>().len() != metrics.len() {
            return invalid("metrics list has duplicates");
        }
        if !self.stability.threshold.is_finite() {
            return invalid("stability.threshold must be finite");
        }
        self.stability_strategy()?;
        for r in &self.stability.ranked {
            if self.schema_kind(r) != Some(ColumnKind::Numeric) {
                return invalid(format!("ranked column `{r}` is not numeric"));
            }
        }
        if let Some(d) = &self.drift {
            let subject = d.subject.as_ref().or(self.input.subject.as_ref());
            let Some(subject) = subject else {
                return invalid("drift needs a subject column");
            };
            for c in std::iter::once(subject).chain([&d.category]).chain(&d.breakdowns) {
                if !matches!(self.schema_kind(c), Some(ColumnKind::Categorical | ColumnKind::Ordinal)) {
                    return invalid(format!("drift column `{c}` is not categorical"));
                }
            }
        }
        Ok(())
    }

    /// Checks that every input file exists; the message lists all missing ones.
    pub fn check_inputs(&self) -> Result<()> {
        let missing: Vec<String> = self
            .input
            .paths
            .iter()
            .filter(|p| !p.is_file())
            .map(|p| p.display().to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            invalid(format!("missing input files: {}", missing.join(", ")))
        }
    }

    /// SHA-256 of the canonical JSON form. The output directory and the
    /// worker count do not change results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        c.workers = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        config_hash(json.as_bytes())
    }
}

/// Hex SHA-256 of arbitrary bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> RunConfig {
        RunConfig::from_json(
            r#"{"input": {"paths": ["a.csv", "b.csv"], "months": ["2020-01", "2020-02"],
                "schema": [{"name": "x0", "kind": "numeric"}, {"name": "c0", "kind": "categorical"},
                           {"name": "subject", "kind": "categorical"}],
                "subject": "subject"}}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_validate() {
        let c = sample();
        c.validate().unwrap();
        assert_eq!(c.metric_ids().unwrap(), MetricId::ALL.to_vec());
        assert_eq!(c.stability_strategy().unwrap().to_string(), "HM-Stg1");
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = sample();
        let mut b = a.clone();
        b.output = "elsewhere".into();
        b.workers = 3;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn known_digest() {
        assert_eq!(config_hash(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn rejects_bad_fields() {
        let mut c = sample();
        c.metrics = vec!["XYZ".into()];
        assert!(c.validate().is_err());
        let mut c = sample();
        c.input.months = vec!["2020-01".into()];
        assert!(c.validate().is_err());
        let mut c = sample();
        c.sampling.strategy = SamplingStrategy::Stratified;
        assert!(c.validate().is_err());
        c.sampling.stratum = Some("x0".into());
        assert!(c.validate().is_err());
        c.sampling.stratum = Some("c0".into());
        c.validate().unwrap();
        let mut c = sample();
        c.stability.strategy = "HM-Stg3".into();
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json(r#"{"input": {"paths": [], "schema": []}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn missing_inputs_are_listed() {
        let c = sample();
        let e = c.check_inputs().unwrap_err().to_string();
        assert!(e.contains("a.csv") && e.contains("b.csv"), "{e}");
    }
}
