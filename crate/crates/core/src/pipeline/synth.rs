use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::{config_hash, DriftConfig, InputConfig, RunConfig, SamplingConfig, StrategyConfig};
use super::output::OutputDir;
use crate::data::{generate_monthly, write_csv, MonthlySpec, SyntheticSpec};
use crate::error::Result;
use crate::strategy::Pruning;

/// Files written by [`write_synthetic`].
#[derive(Clone, Debug)]
pub struct SynthFiles {
    pub hash: String,
    pub tables: Vec<PathBuf>,
    pub truths: Vec<PathBuf>,
    pub config: RunConfig,
}

/// Synthetic run settings: the monthly generator plus the member count
/// the companion config keeps in the decreased ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRequest {
    pub spec: MonthlySpec,
    pub keep: usize,
}

impl SynthRequest {
    pub fn new(months: usize, k: usize, n: usize, seed: u64) -> Self {
        let mut base = SyntheticSpec::blobs(n, k, 3, 4.0, seed);
        base.categorical_levels = vec![4, 3];
        base.subjects = (n / 5).max(1);
        Self { spec: MonthlySpec { base, months, preserved: 1, start: "2020-01".into() }, keep: 20 }
    }

    pub fn hash(&self) -> String {
        config_hash(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }
}

/// Writes `<month>.csv` and `<month>_truth.csv` per month and returns a run
/// config whose relative input paths point at them.
pub fn write_synthetic(req: &SynthRequest, out: &OutputDir) -> Result<SynthFiles> {
    let draws = generate_monthly(&req.spec)?;
    let mut tables = Vec::new();
    let mut truths = Vec::new();
    let mut months = Vec::new();
    for (d, tag) in draws.iter().zip(req.spec.month_tags()) {
        let name = format!("{tag}.csv");
        tables.push(out.csv_with(&name, |w| write_csv(&d.table, w))?);
        let rows: Vec<Vec<String>> =
            d.truth.labels().iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]).collect();
        truths.push(out.csv(&format!("{tag}_truth.csv"), &["id", "label"], &rows)?);
        months.push(tag);
    }
    let schema = draws[0].table.schema().to_vec();
    let has_subject = req.spec.base.subjects > 0;
    let cats: Vec<String> = schema.iter().filter(|s| s.name.starts_with('c')).map(|s| s.name.clone()).collect();
    let config = RunConfig {
        seed: req.spec.base.seed,
        workers: 0,
        output: PathBuf::from("out"),
        input: InputConfig {
            paths: months.iter().map(|m| PathBuf::from(format!("{m}.csv"))).collect(),
            months: months.clone(),
            schema,
            subject: has_subject.then(|| "subject".to_string()),
            ignore: Vec::new(),
        },
        sampling: SamplingConfig { size: req.spec.base.n, ..SamplingConfig::default() },
        embedding: Default::default(),
        grid: Default::default(),
        consensus: Default::default(),
        strategy: StrategyConfig { pruning: Pruning::Keep(req.keep) },
        metrics: crate::validity::MetricId::ALL.iter().map(|m| m.name().to_string()).collect(),
        stability: Default::default(),
        drift: (has_subject && !cats.is_empty()).then(|| DriftConfig {
            category: cats[0].clone(),
            subject: None,
            breakdowns: cats[1..].to_vec(),
        }),
    };
    Ok(SynthFiles { hash: out.hash().to_string(), tables, truths, config })
}
