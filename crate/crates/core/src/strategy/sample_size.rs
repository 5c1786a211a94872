use serde::{Deserialize, Serialize};

use crate::clusterers::kmeans_restarts;
use crate::data::DataTable;
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::partition::Partition;
use crate::prep::{fit_transform, one_hot_encode, random_indices, stratified_indices};
use crate::rng::derive_seed;
use crate::validity::{ami, fd_bin, scale_unit_with_sentinels, MetricId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingStrategy {
    Random,
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSearchParams {
    pub sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub metrics: Vec<MetricId>,
    pub strategies: Vec<SamplingStrategy>,
    /// Stratum column for stratified sampling.
    pub stratum: Option<String>,
    pub seeds: Vec<u64>,
    pub restarts: usize,
}

impl Default for SampleSearchParams {
    fn default() -> Self {
        Self {
            sizes: (5000..=30000).step_by(1000).collect(),
            ks: (2..=30).collect(),
            metrics: vec![MetricId::Si, MetricId::Chi, MetricId::Db, MetricId::Di],
            strategies: vec![SamplingStrategy::Random, SamplingStrategy::Stratified],
            stratum: None,
            seeds: vec![0],
            restarts: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeAami {
    pub strategy: SamplingStrategy,
    pub size: usize,
    pub metric: MetricId,
    /// One value per seed replicate.
    pub per_seed: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSearchReport {
    pub rows: Vec<SizeAami>,
    pub skipped: Vec<usize>,
    pub notes: Vec<String>,
}

impl SampleSearchReport {
    /// Mean AAMI per size for one strategy and metric, in size order.
    pub fn series(&self, strategy: SamplingStrategy, metric: MetricId) -> Vec<f64> {
        self.rows.iter().filter(|r| r.strategy == strategy && r.metric == metric).map(|r| r.mean).collect()
    }
}

/// Encoded, power-transformed feature matrix of a table.
pub fn transformed_features(table: &DataTable) -> Result<Matrix> {
    Ok(fit_transform(&one_hot_encode(table)?)?.0.values)
}

fn sample_indices(table: &DataTable, strategy: SamplingStrategy, stratum: Option<&str>, size: usize, seed: u64) -> Result<Vec<usize>> {
    match strategy {
        SamplingStrategy::Random => random_indices(table.n_rows(), size, seed),
        SamplingStrategy::Stratified => {
            let Some(col) = stratum else {
                return invalid("stratified sampling needs a stratum column");
            };
            stratified_indices(table.categorical(col)?, size, seed)
        }
    }
}

/// Raw scores per metric over `ks`; failures are NaN.
fn score_sample(m: &Matrix, ks: &[usize], metrics: &[MetricId], restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let fits: Vec<Option<Partition>> = ks
        .iter()
        .map(|&k| kmeans_restarts(m, k, derive_seed(seed, &format!("k{k}")), restarts).ok().map(|f| Partition::from_usize(&f.labels)))
        .collect();
    metrics
        .iter()
        .map(|metric| fits.iter().map(|p| p.as_ref().and_then(|p| metric.evaluate(m, p).ok()).unwrap_or(f64::NAN)).collect())
        .collect()
}

/// One Freedman–Diaconis plan over all scaled scores of a group; missing
/// scores get their own label.
fn binned(scaled: &[Option<f64>]) -> Result<Vec<usize>> {
    let finite: Vec<f64> = scaled.iter().flatten().copied().collect();
    if finite.len() < 2 {
        return Ok(scaled.iter().map(|v| usize::from(v.is_none())).collect());
    }
    let b = fd_bin(&finite)?;
    let mut it = b.labels.into_iter();
    Ok(scaled.iter().map(|v| if v.is_some() { it.next().expect("label") } else { b.edges.len() }).collect())
}

/// AAMI of every size's binned score vector against the other sizes.
///
/// Scores are scaled and binned jointly over all sizes and ks within one
/// (strategy, seed, metric) group.
pub fn sample_size_search(
    table: &DataTable,
    params: &SampleSearchParams,
    features: &(dyn Fn(&DataTable) -> Result<Matrix> + Sync),
) -> Result<SampleSearchReport> {
    if params.ks.is_empty() || params.metrics.is_empty() || params.seeds.is_empty() || params.strategies.is_empty() {
        return invalid("sample size search needs ks, metrics, seeds and strategies");
    }
    if params.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("sample sizes must be strictly ascending");
    }
    let rows = table.n_rows();
    let sizes: Vec<usize> = params.sizes.iter().copied().filter(|&s| s <= rows).collect();
    let skipped: Vec<usize> = params.sizes.iter().copied().filter(|&s| s > rows).collect();
    let mut notes: Vec<String> = skipped.iter().map(|s| format!("size {s} exceeds {rows} rows; skipped")).collect();
    if sizes.len() < 2 {
        return invalid(format!("need at least two usable sample sizes, have {}", sizes.len()));
    }

    let mut jobs: Vec<(SamplingStrategy, u64, usize)> = Vec::new();
    for &st in &params.strategies {
        for &seed in &params.seeds {
            jobs.extend(sizes.iter().map(|&size| (st, seed, size)));
        }
    }
    let run = |&(st, seed, size): &(SamplingStrategy, u64, usize)| -> Result<Vec<Vec<f64>>> {
        let stage = format!("{st:?}/{seed}/{size}");
        let idx = sample_indices(table, st, params.stratum.as_deref(), size, derive_seed(seed, &stage))?;
        let m = features(&table.select_rows(&idx))?;
        Ok(score_sample(&m, &params.ks, &params.metrics, params.restarts, derive_seed(seed, &format!("fit/{st:?}"))))
    };
    #[cfg(feature = "parallel")]
    let grids: Vec<Result<Vec<Vec<f64>>>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let grids: Vec<Result<Vec<Vec<f64>>>> = jobs.iter().map(run).collect();
    let grids: Vec<Vec<Vec<f64>>> = grids.into_iter().collect::<Result<_>>()?;

    let ns = sizes.len();
    let nk = params.ks.len();
    let mut out = Vec::new();
    for (si, &st) in params.strategies.iter().enumerate() {
        let mut per: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); ns]; params.metrics.len()];
        for (ri, _) in params.seeds.iter().enumerate() {
            let base = (si * params.seeds.len() + ri) * ns;
            for (mi, &metric) in params.metrics.iter().enumerate() {
                let flat: Vec<f64> = (0..ns).flat_map(|z| grids[base + z][mi].iter().copied()).collect();
                let (scaled, missing) = scale_unit_with_sentinels(&flat, metric.orientation())?;
                if !missing.is_empty() {
                    notes.push(format!("{st:?} seed {ri} {metric}: {} failed scores", missing.len()));
                }
                let labels = binned(&scaled)?;
                let bins: Vec<Partition> = labels.chunks(nk).map(Partition::from_usize).collect();
                for z in 0..ns {
                    let mut sum = 0.0;
                    for w in (0..ns).filter(|&w| w != z) {
                        sum += ami(&bins[z], &bins[w])?;
                    }
                    per[mi][z].push(sum / (ns - 1) as f64);
                }
            }
        }
        for (z, &size) in sizes.iter().enumerate() {
            for (mi, &metric) in params.metrics.iter().enumerate() {
                let v = per[mi][z].clone();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                out.push(SizeAami { strategy: st, size, metric, per_seed: v, mean });
            }
        }
    }
    Ok(SampleSearchReport { rows: out, skipped, notes })
}

/// Sample variance of a series.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
