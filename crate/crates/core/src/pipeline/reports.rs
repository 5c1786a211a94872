use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::RunConfig;
use super::output::{bar_chart_svg, fmt_f64, heatmap_svg, OutputDir};
use super::run::MonthInput;
use crate::data::DataTable;
use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use crate::strategy::StrategyId;
use crate::temporal::{
    cluster_profile, cohort_drift, recurrence_report, stability_match, BinPlan, DriftParams, DriftReport, RecurrenceRow,
    StabilityMatch, OVERALL,
};

/// A month's pipeline partition: the sampled row ids and their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthPartition {
    pub ids: Vec<usize>,
    pub partition: Partition,
}

fn read_partition(path: &Path, strategy: StrategyId) -> Result<MonthPartition> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(File::open(path)?);
    let header = rdr.headers()?.clone();
    let col = header
        .iter()
        .position(|h| h == strategy.to_string())
        .ok_or_else(|| Error::InvalidArgument(format!("{}: no `{strategy}` column", path.display())))?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<i64> {
            rec.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse {
                row,
                column: header.get(i).unwrap_or_default().to_string(),
                message: "not an integer".into(),
            })
        };
        ids.push(usize::try_from(parse(0)?).map_err(|_| Error::InvalidArgument(format!("{}: negative id", path.display())))?);
        labels.push(parse(col)?);
    }
    Ok(MonthPartition { ids, partition: Partition::new(labels) })
}

pub fn partition_path(dir: &Path, tag: &str) -> PathBuf {
    dir.join(format!("partitions_{tag}.csv"))
}

/// Reads the pipeline partitions of every month; the error lists each
/// month whose file is absent.
pub fn load_partitions(dir: &Path, months: &[MonthInput], strategy: StrategyId) -> Result<Vec<MonthPartition>> {
    let missing: Vec<&str> = months.iter().filter(|m| !partition_path(dir, &m.tag).is_file()).map(|m| m.tag.as_str()).collect();
    if !missing.is_empty() {
        return invalid(format!("no pipeline partitions for months: {}", missing.join(", ")));
    }
    months
        .iter()
        .map(|m| {
            let p = read_partition(&partition_path(dir, &m.tag), strategy)?;
            if let Some(&bad) = p.ids.iter().find(|&&i| i >= m.table.n_rows()) {
                return invalid(format!("month {}: partition row {bad} beyond {} rows", m.tag, m.table.n_rows()));
            }
            Ok(p)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct StabilitySummary {
    pub features: Vec<String>,
    pub matches: Vec<StabilityMatch>,
    pub recurrence: Vec<RecurrenceRow>,
    pub files: Vec<PathBuf>,
}

impl StabilitySummary {
    pub fn matched(&self) -> usize {
        self.matches.iter().filter(|m| m.matched).count()
    }
}

/// Profiles each month's clusters on one pooled bin plan and scores every
/// cluster pair of every month pair.
pub fn run_stability(cfg: &RunConfig, months: &[MonthInput], parts: &[MonthPartition], out: &OutputDir) -> Result<StabilitySummary> {
    if months.len() < 2 {
        return invalid("stability needs at least two months");
    }
    let st = &cfg.stability;
    let tables: Vec<DataTable> = months.iter().zip(parts).map(|(m, p)| m.table.select_rows(&p.ids)).collect();
    let mut skip: Vec<String> = cfg.input.subject.iter().chain(&cfg.input.ignore).cloned().collect();
    skip.extend(st.exclude_features.iter().cloned());
    let refs: Vec<&DataTable> = tables.iter().collect();
    let plan = BinPlan::fit(&refs, &st.ranked, &skip)?;
    let features: Vec<String> = plan.features.keys().cloned().collect();
    if features.is_empty() {
        return invalid("no features left to profile");
    }
    let profiles: Vec<_> = months
        .iter()
        .zip(parts)
        .zip(&tables)
        .map(|((m, p), t)| cluster_profile(&p.partition, t, &plan, &m.tag))
        .collect::<Result<_>>()?;
    let mut matches = Vec::new();
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            matches.extend(stability_match(&profiles[i], &profiles[j], st.threshold, &st.exclude_features, st.mode)?);
        }
    }
    let recurrence = recurrence_report(&matches);
    let mut files = Vec::new();
    let rows: Vec<Vec<String>> = matches
        .iter()
        .map(|m| {
            vec![
                m.month_a.clone(),
                m.cluster_a.to_string(),
                m.month_b.clone(),
                m.cluster_b.to_string(),
                fmt_f64(m.mean_ami),
                m.matched.to_string(),
            ]
        })
        .collect();
    files.push(out.csv("stability_pairs.csv", &["month_a", "cluster_a", "month_b", "cluster_b", "mean_ami", "matched"], &rows)?);
    files.push(out.jsonl("stability_matches.jsonl", matches.iter().filter(|m| m.matched))?);
    let rows: Vec<Vec<String>> = recurrence
        .iter()
        .map(|r| vec![r.month.clone(), r.cluster.to_string(), r.matches.to_string(), r.partner_months.to_string()])
        .collect();
    files.push(out.csv("recurrence.csv", &["month", "cluster", "matches", "partner_months"], &rows)?);
    let labels: Vec<(String, i32)> =
        profiles.iter().flat_map(|ps| ps.iter().map(|p| (p.month.clone(), p.cluster))).collect();
    let pos: BTreeMap<(String, i32), usize> = labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
    let mut cells = vec![vec![f64::NAN; labels.len()]; labels.len()];
    for m in &matches {
        let a = pos[&(m.month_a.clone(), m.cluster_a)];
        let b = pos[&(m.month_b.clone(), m.cluster_b)];
        cells[a][b] = m.mean_ami;
        cells[b][a] = m.mean_ami;
    }
    let names: Vec<String> = labels.iter().map(|(m, c)| format!("{m}:{c}")).collect();
    files.push(out.svg("stability_heatmap.svg", &heatmap_svg("Mean feature AMI between clusters", &names, &cells))?);
    let manifest = json!({
        "strategy": st.strategy,
        "threshold": st.threshold,
        "mode": st.mode,
        "months": months.iter().map(|m| &m.tag).collect::<Vec<_>>(),
        "features": features,
        "excluded": st.exclude_features,
        "pairs": matches.len(),
        "matched": matches.iter().filter(|m| m.matched).count(),
    });
    files.push(out.json("stability_manifest.json", &manifest)?);
    Ok(StabilitySummary { features, matches, recurrence, files })
}

#[derive(Clone, Debug)]
pub struct DriftSummary {
    pub reports: Vec<DriftReport>,
    pub files: Vec<PathBuf>,
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

/// Cohort drift of the whole population and of each breakdown column.
pub fn run_drift(cfg: &RunConfig, months: &[MonthInput], out: &OutputDir) -> Result<DriftSummary> {
    let Some(d) = &cfg.drift else {
        return invalid("config has no [drift] section");
    };
    if months.len() < 2 {
        return invalid(format!("drift needs at least two months, got {}", months.len()));
    }
    let subject = d.subject.clone().or_else(|| cfg.input.subject.clone()).unwrap_or_default();
    let tables: Vec<DataTable> = months.iter().map(|m| m.table.clone().with_period(Some(m.tag.clone()))).collect();
    let breakdowns: Vec<Option<String>> = std::iter::once(None).chain(d.breakdowns.iter().cloned().map(Some)).collect();
    let mut reports = Vec::new();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for b in &breakdowns {
        let params = DriftParams { subject: subject.clone(), category: d.category.clone(), breakdown: b.clone() };
        let r = cohort_drift(&tables, &params)?;
        rows.extend(r.rows.iter().map(|c| {
            vec![
                c.breakdown.clone(),
                c.level.clone(),
                c.cohort.to_string(),
                c.subjects.to_string(),
                c.comparisons.to_string(),
                fmt_f64(c.mean_jsd),
                fmt_f64(c.share),
            ]
        }));
        let cohorts: Vec<usize> = r.rows.iter().map(|c| c.cohort).collect::<BTreeSet<_>>().into_iter().collect();
        let levels: Vec<String> = r.rows.iter().map(|c| c.level.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let series: Vec<(String, Vec<f64>)> = levels
            .iter()
            .map(|l| {
                let v = cohorts
                    .iter()
                    .map(|&k| r.rows.iter().find(|c| &c.level == l && c.cohort == k).map_or(f64::NAN, |c| c.mean_jsd))
                    .collect();
                (l.clone(), v)
            })
            .collect();
        let name = b.as_deref().unwrap_or(OVERALL);
        let groups: Vec<String> = cohorts.iter().map(|k| format!("{k} month(s)")).collect();
        let title = format!("Mean JSD by cohort: {name}");
        files.push(out.svg(&format!("drift_{}.svg", file_stem(name)), &bar_chart_svg(&title, "mean JSD", &groups, &series))?);
        reports.push(r);
    }
    files.insert(
        0,
        out.csv("drift.csv", &["breakdown", "level", "cohort", "subjects", "comparisons", "mean_jsd", "share"], &rows)?,
    );
    let notes: Vec<&String> = reports.iter().flat_map(|r| &r.notes).collect();
    files.push(out.json(
        "drift_manifest.json",
        &json!({ "subject": subject, "category": d.category, "breakdowns": d.breakdowns, "categories": reports.first().map(|r| &r.categories), "notes": notes }),
    )?);
    Ok(DriftSummary { reports, files })
}
