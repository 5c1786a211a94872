use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::{fmt_f64, OutputDir};
use crate::clusterers::{default_grid, generate_library, EnsembleLibrary};
use crate::data::{load_table, validate_schema, DataTable};
use crate::embed::Embedder;
use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::prep::{correlation_screen, fit_transform, hopkins, one_hot_encode, random_indices, stratified_indices, EncodedMatrix, ScreenReport};
use crate::rng::derive_seed;
use crate::strategy::{
    optimal_candidates, rank_strategies, sample_size_search, select_metric_by_variance, transformed_features,
    OptimalCandidate, Ranking, RankInput, SampleSearchParams, SampleSearchReport, SamplingStrategy, Selection,
    StrategyParams, StrategyRun, OPTIMAL_TOP,
};
use crate::validity::{scale_unit_with_sentinels, MetricId};

/// Absolute correlation above which a feature pair is reported.
pub const CORRELATION_CUTOFF: f64 = 0.9;

/// One month's input table.
#[derive(Clone, Debug)]
pub struct MonthInput {
    pub tag: String,
    pub table: DataTable,
}

/// Loads and validates every configured month. All of this counts as input
/// checking: nothing is computed yet.
pub fn load_months(cfg: &RunConfig) -> Result<Vec<MonthInput>> {
    cfg.validate()?;
    cfg.check_inputs()?;
    cfg.month_tags()
        .into_iter()
        .zip(&cfg.input.paths)
        .map(|(tag, path)| {
            let table = load_table(path, &cfg.input.schema)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
                .with_period(None);
            let report = validate_schema(&table);
            if let Some(v) = report.violations.first() {
                return invalid(format!("{}: {v} ({} violations)", path.display(), report.violations.len()));
            }
            if table.n_rows() < 10 {
                return invalid(format!("{}: only {} rows", path.display(), table.n_rows()));
            }
            Ok(MonthInput { tag, table })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Prep,
    Sampling,
    Embed,
    Library,
    Strategies,
    Metrics,
    Ranking,
    Output,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricScore {
    pub config: String,
    pub metric: MetricId,
    pub raw: f64,
    pub scaled: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MonthReport {
    pub tag: String,
    pub rows: usize,
    /// Row indices of the sample in the month table.
    pub sample: Vec<usize>,
    pub hopkins: f64,
    pub screen: ScreenReport,
    pub layout: Matrix,
    pub library: EnsembleLibrary,
    pub run: StrategyRun,
    pub scores: Vec<MetricScore>,
    pub selected_metric: MetricId,
    pub optimal: Vec<OptimalCandidate>,
    pub ranking: Ranking,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonthFailure {
    pub stage: Stage,
    pub error: String,
}

/// Outcome of one month, with its stage seeds and wall-clock timings.
#[derive(Clone, Debug)]
pub struct MonthRun {
    pub tag: String,
    pub seeds: BTreeMap<String, u64>,
    pub timings_ms: BTreeMap<String, f64>,
    pub result: std::result::Result<MonthReport, MonthFailure>,
}

#[derive(Clone, Debug)]
pub struct PipelineSummary {
    pub hash: String,
    pub months: Vec<MonthRun>,
    pub search: Option<std::result::Result<SampleSearchReport, String>>,
    pub files: Vec<PathBuf>,
}

impl PipelineSummary {
    pub fn failed(&self) -> Vec<(&str, &MonthFailure)> {
        self.months
            .iter()
            .filter_map(|m| m.result.as_ref().err().map(|f| (m.tag.as_str(), f)))
            .collect()
    }
}

struct Tracker {
    seeds: BTreeMap<String, u64>,
    timings_ms: BTreeMap<String, f64>,
    root: u64,
    tag: String,
}

impl Tracker {
    fn seed(&mut self, stage: &str) -> u64 {
        let s = derive_seed(self.root, &format!("{}/{stage}", self.tag));
        self.seeds.insert(stage.into(), s);
        s
    }

    fn time<T>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> Result<T>) -> std::result::Result<T, MonthFailure> {
        let t = Instant::now();
        let r = f(self);
        let key = serde_json::to_value(stage).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        *self.timings_ms.entry(key).or_default() += t.elapsed().as_secs_f64() * 1e3;
        r.map_err(|e| MonthFailure { stage, error: e.to_string() })
    }
}

fn feature_table(cfg: &RunConfig, table: &DataTable) -> DataTable {
    let drop: Vec<&String> = cfg.input.subject.iter().chain(&cfg.input.ignore).collect();
    table.drop_columns(&drop)
}

fn select_encoded(enc: &EncodedMatrix, rows: &[usize]) -> EncodedMatrix {
    EncodedMatrix { values: enc.values.select_rows(rows), ..enc.clone() }
}

fn sample_rows(cfg: &RunConfig, table: &DataTable, seed: u64, notes: &mut Vec<String>) -> Result<Vec<usize>> {
    let n = table.n_rows();
    if cfg.sampling.size >= n {
        notes.push(format!("sample size {} covers all {n} rows", cfg.sampling.size));
        return Ok((0..n).collect());
    }
    let mut idx = match cfg.sampling.strategy {
        SamplingStrategy::Random => random_indices(n, cfg.sampling.size, seed)?,
        SamplingStrategy::Stratified => {
            let col = cfg.sampling.stratum.as_deref().unwrap_or_default();
            stratified_indices(table.categorical(col)?, cfg.sampling.size, seed)?
        }
    };
    idx.sort_unstable();
    Ok(idx)
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    return items.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    items.iter().map(f).collect()
}

fn score_library(layout: &Matrix, lib: &EnsembleLibrary, metrics: &[MetricId]) -> Result<Vec<MetricScore>> {
    let raw: Vec<Vec<f64>> = par_map(lib.members(), |m| {
        metrics.iter().map(|id| id.evaluate(layout, &m.partition).unwrap_or(f64::NAN)).collect()
    });
    let mut scores = Vec::with_capacity(lib.len() * metrics.len());
    let mut scaled_cols = Vec::new();
    for (j, id) in metrics.iter().enumerate() {
        let col: Vec<f64> = raw.iter().map(|r| r[j]).collect();
        scaled_cols.push(scale_unit_with_sentinels(&col, id.orientation())?.0);
    }
    for (i, m) in lib.members().iter().enumerate() {
        for (j, &id) in metrics.iter().enumerate() {
            scores.push(MetricScore { config: m.config.canonical(), metric: id, raw: raw[i][j], scaled: scaled_cols[j][i] });
        }
    }
    Ok(scores)
}

fn run_month(cfg: &RunConfig, input: &MonthInput, out: &OutputDir) -> MonthRun {
    let mut tr = Tracker { seeds: BTreeMap::new(), timings_ms: BTreeMap::new(), root: cfg.seed, tag: input.tag.clone() };
    let result = month_stages(cfg, input, out, &mut tr);
    MonthRun { tag: input.tag.clone(), seeds: tr.seeds, timings_ms: tr.timings_ms, result }
}

fn month_stages(
    cfg: &RunConfig,
    input: &MonthInput,
    out: &OutputDir,
    tr: &mut Tracker,
) -> std::result::Result<MonthReport, MonthFailure> {
    let tag = &input.tag;
    let table = &input.table;
    let mut notes = Vec::new();
    let metrics = cfg.metric_ids().map_err(|e| MonthFailure { stage: Stage::Prep, error: e.to_string() })?;
    let (enc, screen) = tr.time(Stage::Prep, |_| {
        let (enc, _) = fit_transform(&one_hot_encode(&feature_table(cfg, table))?)?;
        let screen = correlation_screen(&enc, CORRELATION_CUTOFF)?;
        Ok((enc, screen))
    })?;
    for p in &screen.flagged {
        notes.push(format!("correlated features {} and {} (r = {:.3})", p.a, p.b, p.r));
    }
    let (sample, sampled, hopkins_stat) = tr.time(Stage::Sampling, |tr| {
        let s = tr.seed("sample");
        let h = tr.seed("hopkins");
        let rows = sample_rows(cfg, table, s, &mut notes)?;
        let sampled = select_encoded(&enc, &rows);
        let stat = hopkins(&sampled.values, None, h)?;
        Ok((rows, sampled, stat))
    })?;
    let layout = tr.time(Stage::Embed, |tr| {
        let s = tr.seed("embed");
        let y = cfg.embedding.embed(&sampled, s)?;
        let rows: Vec<Vec<String>> = sample
            .iter()
            .enumerate()
            .map(|(i, &id)| std::iter::once(id.to_string()).chain(y.row(i).iter().map(|&v| fmt_f64(v))).collect())
            .collect();
        let mut header = vec!["id".to_string()];
        header.extend(["x", "y", "z"].iter().map(|s| s.to_string()).take(y.cols()));
        header.extend((3..y.cols()).map(|j| format!("d{j}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.csv(&format!("layout_{tag}.csv"), &header, &rows)?;
        Ok(y)
    })?;
    let library = tr.time(Stage::Library, |tr| {
        let s = tr.seed("grid");
        let lib = generate_library(&layout, &default_grid(cfg.grid, s))?;
        out.jsonl(&format!("library_{tag}.jsonl"), lib.members())?;
        Ok(lib)
    })?;
    for f in library.failures() {
        notes.push(format!("{} failed: {}", f.config.canonical(), f.error));
    }
    let run = tr.time(Stage::Strategies, |tr| {
        let params = StrategyParams {
            pruning: cfg.strategy.pruning,
            k: cfg.consensus.k,
            reference: cfg.consensus.reference,
            seed: tr.seed("strategies"),
        };
        let run = crate::strategy::run_strategies(&library, &params)?;
        let mut header = vec!["id".to_string()];
        header.extend(run.outcomes.iter().map(|o| o.id.to_string()));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = sample
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                std::iter::once(id.to_string())
                    .chain(run.outcomes.iter().map(|o| o.partition.labels()[i].to_string()))
                    .collect()
            })
            .collect();
        out.csv(&format!("partitions_{tag}.csv"), &header, &rows)?;
        Ok(run)
    })?;
    let (scores, selected) = tr.time(Stage::Metrics, |_| {
        let scores = score_library(&layout, &library, &metrics)?;
        let mut lists = Vec::new();
        for &id in &metrics {
            let v: Vec<f64> = scores.iter().filter(|s| s.metric == id).filter_map(|s| s.scaled).collect();
            if v.len() >= 2 {
                lists.push((id, v));
            } else {
                notes.push(format!("{id} has fewer than two finite scores and is not eligible"));
            }
        }
        let selected = select_metric_by_variance(&lists)?;
        Ok((scores, selected))
    })?;
    let (optimal, ranking) = tr.time(Stage::Ranking, |_| {
        let pairs: Vec<_> = library
            .members()
            .iter()
            .zip(scores.iter().filter(|s| s.metric == selected))
            .map(|(m, s)| (m.config.clone(), s.raw))
            .collect();
        let optimal = optimal_candidates(&pairs, selected, OPTIMAL_TOP);
        let inputs: Vec<RankInput> = par_map(&run.outcomes, |o| RankInput {
            id: o.id,
            config: o.config.clone(),
            value: selected.evaluate(&layout, &o.partition).unwrap_or(f64::NAN),
        });
        Ok((optimal.clone(), rank_strategies(&optimal, &inputs)?))
    })?;
    notes.extend(ranking.notes.iter().cloned());
    Ok(MonthReport {
        tag: tag.clone(),
        rows: table.n_rows(),
        sample,
        hopkins: hopkins_stat,
        screen,
        layout,
        library,
        run,
        scores,
        selected_metric: selected,
        optimal,
        ranking,
        notes,
    })
}

fn outcome_label(m: &MonthReport, i: usize) -> String {
    let o = &m.run.outcomes[i];
    match (&o.config, o.id.selection) {
        (Some(c), _) => c.canonical(),
        (None, Selection::Consensus) => o.consensus.function.to_string(),
        (None, _) => String::new(),
    }
}

fn write_reports(cfg: &RunConfig, out: &OutputDir, summary: &mut PipelineSummary, started: Instant) -> Result<()> {
    let ok: Vec<&MonthReport> = summary.months.iter().filter_map(|m| m.result.as_ref().ok()).collect();
    let mut eval = Vec::new();
    let mut optimal = Vec::new();
    let mut metric_rows = Vec::new();
    for m in &ok {
        for (i, r) in m.ranking.rows.iter().enumerate() {
            eval.push(vec![
                m.tag.clone(),
                r.id.to_string(),
                outcome_label(m, i),
                m.run.outcomes[i].partition.k().to_string(),
                m.selected_metric.name().to_string(),
                fmt_f64(r.value),
                r.exact_match.to_string(),
                fmt_f64(r.closeness),
                r.rank_weighted.to_string(),
                fmt_f64(r.weight),
                r.rank.to_string(),
            ]);
        }
        for c in &m.optimal {
            optimal.push(vec![m.tag.clone(), c.rank.to_string(), c.config.canonical(), m.selected_metric.name().into(), fmt_f64(c.value)]);
        }
        for s in &m.scores {
            metric_rows.push(vec![
                m.tag.clone(),
                s.config.clone(),
                s.metric.name().to_string(),
                fmt_f64(s.raw),
                s.scaled.map_or_else(String::new, fmt_f64),
            ]);
        }
    }
    let mut files = Vec::new();
    files.push(out.csv(
        "evaluation.csv",
        &["dataset", "strategy", "outcome", "clusters", "metric", "value", "exact_match", "closeness", "rank_weighted", "weight", "rank"],
        &eval,
    )?);
    files.push(out.csv("optimal.csv", &["dataset", "rank", "config", "metric", "value"], &optimal)?);
    files.push(out.csv("metrics.csv", &["dataset", "config", "metric", "raw", "scaled"], &metric_rows)?);
    if let Some(Ok(search)) = &summary.search {
        let rows: Vec<Vec<String>> = search
            .rows
            .iter()
            .map(|r| {
                let st = serde_json::to_value(r.strategy).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                vec![st, r.size.to_string(), r.metric.name().to_string(), fmt_f64(r.mean)]
            })
            .collect();
        files.push(out.csv("sample_search.csv", &["strategy", "size", "metric", "aami"], &rows)?);
    }
    for m in &summary.months {
        if m.result.is_ok() {
            for f in [format!("layout_{}.csv", m.tag), format!("library_{}.jsonl", m.tag), format!("partitions_{}.csv", m.tag)] {
                files.push(out.path(&f));
            }
        }
    }
    summary.files = files;
    let months: Vec<serde_json::Value> = summary
        .months
        .iter()
        .map(|m| {
            let mut v = json!({ "month": m.tag, "seeds": m.seeds, "timings_ms": m.timings_ms });
            match &m.result {
                Ok(r) => {
                    v["status"] = "ok".into();
                    v["rows"] = r.rows.into();
                    v["sample_size"] = r.sample.len().into();
                    v["hopkins"] = json!(r.hopkins);
                    v["correlation"] = json!(r.screen);
                    v["library_size"] = r.library.len().into();
                    v["selected_metric"] = r.selected_metric.name().into();
                    v["stages"] = r
                        .run
                        .stages
                        .iter()
                        .map(|s| {
                            json!({
                                "stage": format!("{:?}", s.stage),
                                "library_size": s.library_size,
                                "k": s.k,
                                "consensus": s.consensus.iter().map(|c| json!({"function": c.function.to_string(), "aami": c.aami_vs_set, "clusters": c.partition.k()})).collect::<Vec<_>>(),
                                "failures": s.failures,
                            })
                        })
                        .collect();
                    v["notes"] = json!(r.notes);
                }
                Err(f) => {
                    v["status"] = "failed".into();
                    v["failure_stage"] = json!(f.stage);
                    v["error"] = f.error.clone().into();
                }
            }
            v
        })
        .collect();
    let search = match &summary.search {
        None => serde_json::Value::Null,
        Some(Ok(s)) => json!({ "skipped": s.skipped, "notes": s.notes }),
        Some(Err(e)) => json!({ "error": e }),
    };
    let manifest = json!({
        "config": cfg,
        "workers": cfg.workers,
        "months": months,
        "sample_search": search,
        "files": summary.files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "total_ms": started.elapsed().as_secs_f64() * 1e3,
    });
    summary.files.push(out.json("manifest.json", &manifest)?);
    Ok(())
}

fn search_report(cfg: &RunConfig, months: &[MonthInput]) -> Option<std::result::Result<SampleSearchReport, String>> {
    let s = cfg.sampling.search.as_ref()?;
    let table = &months.first()?.table;
    let params = SampleSearchParams {
        sizes: s.sizes.clone(),
        ks: s.ks.clone(),
        metrics: cfg.metric_ids().ok()?.into_iter().filter(|m| !matches!(m, MetricId::SdbwHalkidi | MetricId::SdbwKim | MetricId::SdbwTong)).collect(),
        strategies: vec![cfg.sampling.strategy],
        stratum: cfg.sampling.stratum.clone(),
        seeds: s.seeds.iter().map(|&x| derive_seed(cfg.seed, &format!("search/{x}"))).collect(),
        restarts: s.restarts,
    };
    let features = |t: &DataTable| transformed_features(&feature_table(cfg, t));
    Some(sample_size_search(table, &params, &features).map_err(|e| e.to_string()))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}

/// Runs every month on a pool of `cfg.workers` threads and writes the
/// reports. Month failures are recorded, not returned; `Err` means the
/// reports themselves could not be written.
pub fn run_pipeline(cfg: &RunConfig, months: &[MonthInput], out: &OutputDir) -> Result<PipelineSummary> {
    let started = Instant::now();
    let (runs, search) = with_pool(cfg.workers, || {
        let runs = par_map(months, |m| run_month(cfg, m, out));
        (runs, search_report(cfg, months))
    })?;
    let mut summary = PipelineSummary { hash: out.hash().to_string(), months: runs, search, files: Vec::new() };
    write_reports(cfg, out, &mut summary, started)?;
    Ok(summary)
}
