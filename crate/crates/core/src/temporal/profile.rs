use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, DataTable};
use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use crate::validity::{ami, fd_bin};

/// Low/Mid/High bucket of a 1..100 rank.
pub fn rank_category(rank: f64) -> Result<&'static str> {
    if !(1.0..=100.0).contains(&rank) {
        return invalid(format!("rank {rank} outside 1..=100"));
    }
    Ok(if rank <= 33.0 {
        "Low"
    } else if rank <= 66.0 {
        "Mid"
    } else {
        "High"
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FeatureBinning {
    /// Interior edges; values below the first edge go to bin 0.
    Numeric { edges: Vec<f64> },
    Ranked,
    Categorical,
}

/// How each profiled feature is turned into a discrete support.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BinPlan {
    pub features: BTreeMap<String, FeatureBinning>,
}

impl BinPlan {
    /// Fits Freedman–Diaconis edges on the pooled values of every table.
    /// `ranked` columns use the Low/Mid/High buckets; `skip` columns are left out.
    pub fn fit(tables: &[&DataTable], ranked: &[String], skip: &[String]) -> Result<Self> {
        let Some(first) = tables.first() else {
            return Err(Error::Empty("tables for bin plan"));
        };
        let mut features = BTreeMap::new();
        for s in first.schema() {
            if skip.contains(&s.name) {
                continue;
            }
            let binning = match first.column(&s.name).map(|c| c.1) {
                Some(ColumnData::Numeric(_)) if ranked.contains(&s.name) => FeatureBinning::Ranked,
                Some(ColumnData::Numeric(_)) => {
                    let mut pooled = Vec::new();
                    for t in tables {
                        pooled.extend_from_slice(t.numeric(&s.name)?);
                    }
                    let b = fd_bin(&pooled)?;
                    FeatureBinning::Numeric { edges: b.edges[1..b.edges.len() - 1].to_vec() }
                }
                _ => FeatureBinning::Categorical,
            };
            features.insert(s.name.clone(), binning);
        }
        Ok(Self { features })
    }

    fn keys(&self, feature: &str, table: &DataTable) -> Result<Vec<String>> {
        match self.features.get(feature) {
            Some(FeatureBinning::Numeric { edges }) => Ok(table
                .numeric(feature)?
                .iter()
                .map(|&v| format!("bin{:03}", edges.partition_point(|&e| e <= v)))
                .collect()),
            Some(FeatureBinning::Ranked) => {
                table.numeric(feature)?.iter().map(|&v| rank_category(v).map(str::to_string)).collect()
            }
            Some(FeatureBinning::Categorical) => Ok(table.categorical(feature)?.to_vec()),
            None => invalid(format!("feature `{feature}` not in bin plan")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    pub feature: String,
    pub support: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: i32,
    pub month: String,
    pub size: usize,
    pub features: Vec<FeatureDistribution>,
}

impl ClusterProfile {
    pub fn feature(&self, name: &str) -> Option<&FeatureDistribution> {
        self.features.iter().find(|f| f.feature == name)
    }
}

/// Per-cluster distributions of every planned feature; noise rows are left out.
pub fn cluster_profile(partition: &Partition, table: &DataTable, plan: &BinPlan, month: &str) -> Result<Vec<ClusterProfile>> {
    if partition.len() != table.n_rows() {
        return Err(Error::LengthMismatch(partition.len(), table.n_rows()));
    }
    let members = partition.members();
    let keyed: Vec<(String, Vec<String>)> =
        plan.features.keys().map(|f| plan.keys(f, table).map(|k| (f.clone(), k))).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (c, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let features = keyed
            .iter()
            .map(|(name, keys)| {
                let support: BTreeSet<&str> = keys.iter().map(String::as_str).collect();
                let mut counts: BTreeMap<&str, usize> = support.iter().map(|s| (*s, 0)).collect();
                for &r in rows {
                    *counts.get_mut(keys[r].as_str()).expect("key in support") += 1;
                }
                FeatureDistribution {
                    feature: name.clone(),
                    support: counts.keys().map(|s| s.to_string()).collect(),
                    probs: counts.values().map(|&n| n as f64 / rows.len() as f64).collect(),
                }
            })
            .collect();
        out.push(ClusterProfile { cluster: c as i32, month: month.to_string(), size: rows.len(), features });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// AMI per feature, averaged.
    #[default]
    Averaged,
    /// One AMI over all features' vectors laid end to end.
    Concatenated,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityMatch {
    pub month_a: String,
    pub cluster_a: i32,
    pub month_b: String,
    pub cluster_b: i32,
    pub mean_ami: f64,
    pub matched: bool,
}

/// Both vectors on the union support, in a fixed order.
fn aligned(a: &FeatureDistribution, b: &FeatureDistribution) -> (Vec<f64>, Vec<f64>) {
    let support: BTreeSet<&str> = a.support.iter().chain(&b.support).map(String::as_str).collect();
    let lookup = |f: &FeatureDistribution, s: &str| f.support.iter().position(|x| x == s).map_or(0.0, |i| f.probs[i]);
    support.iter().map(|s| (lookup(a, s), lookup(b, s))).unzip()
}

/// AMI between two value vectors after binning them with one plan fitted on both.
pub fn binned_ami(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Ok(f64::from(u8::from(a == b)));
    }
    let joined: Vec<f64> = a.iter().chain(b).copied().collect();
    let labels = fd_bin(&joined)?.labels;
    let (la, lb) = labels.split_at(a.len());
    ami(&Partition::from_usize(la), &Partition::from_usize(lb))
}

/// Feature names both profile sets carry, minus the excluded ones.
pub fn shared_features(a: &[ClusterProfile], b: &[ClusterProfile], exclude: &[String]) -> Result<Vec<String>> {
    let names = |p: &[ClusterProfile]| -> BTreeSet<String> {
        p.first().map(|c| c.features.iter().map(|f| f.feature.clone()).collect()).unwrap_or_default()
    };
    let (na, nb) = (names(a), names(b));
    let shared: Vec<String> = na.intersection(&nb).filter(|f| !exclude.contains(f)).cloned().collect();
    if shared.is_empty() {
        return invalid("no shared features to compare");
    }
    Ok(shared)
}

fn get<'a>(p: &'a ClusterProfile, f: &str) -> Result<&'a FeatureDistribution> {
    p.feature(f).ok_or_else(|| Error::InvalidArgument(format!("profile lacks feature `{f}`")))
}

pub fn pair_score(a: &ClusterProfile, b: &ClusterProfile, features: &[String], mode: MatchMode) -> Result<f64> {
    match mode {
        MatchMode::Averaged => {
            let mut sum = 0.0;
            for f in features {
                let (x, y) = aligned(get(a, f)?, get(b, f)?);
                sum += binned_ami(&x, &y)?;
            }
            Ok(sum / features.len() as f64)
        }
        MatchMode::Concatenated => {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for f in features {
                let (x, y) = aligned(get(a, f)?, get(b, f)?);
                xs.extend(x);
                ys.extend(y);
            }
            binned_ami(&xs, &ys)
        }
    }
}

/// Scores every cluster pair across two months; `matched` means the mean AMI
/// exceeds the threshold.
pub fn stability_match(
    a: &[ClusterProfile],
    b: &[ClusterProfile],
    threshold: f64,
    exclude: &[String],
    mode: MatchMode,
) -> Result<Vec<StabilityMatch>> {
    let features = shared_features(a, b, exclude)?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for pa in a {
        for pb in b {
            let mean_ami = pair_score(pa, pb, &features, mode)?;
            out.push(StabilityMatch {
                month_a: pa.month.clone(),
                cluster_a: pa.cluster,
                month_b: pb.month.clone(),
                cluster_b: pb.cluster,
                mean_ami,
                matched: mean_ami > threshold,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub month: String,
    pub cluster: i32,
    pub matches: usize,
    pub partner_months: usize,
}

/// Match tallies per (month, cluster), most recurrent first.
pub fn recurrence_report(matches: &[StabilityMatch]) -> Vec<RecurrenceRow> {
    let mut tally: BTreeMap<(String, i32), (usize, BTreeSet<String>)> = BTreeMap::new();
    for m in matches {
        for (month, cluster, other) in [(&m.month_a, m.cluster_a, &m.month_b), (&m.month_b, m.cluster_b, &m.month_a)] {
            let e = tally.entry((month.clone(), cluster)).or_default();
            if m.matched {
                e.0 += 1;
                e.1.insert(other.clone());
            }
        }
    }
    let mut rows: Vec<RecurrenceRow> = tally
        .into_iter()
        .map(|((month, cluster), (matches, partners))| RecurrenceRow { month, cluster, matches, partner_months: partners.len() })
        .collect();
    rows.sort_by(|x, y| {
        (y.matches, y.partner_months).cmp(&(x.matches, x.partner_months)).then_with(|| (&x.month, x.cluster).cmp(&(&y.month, y.cluster)))
    });
    rows
}
