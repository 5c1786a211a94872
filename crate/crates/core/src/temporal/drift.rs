use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{invalid, Error, Result};
use crate::validity::jsd;

/// Normalized category counts.
pub fn interest_distribution(counts: &[f64]) -> Result<Vec<f64>> {
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return invalid("counts must be finite and non-negative");
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::Empty("interest counts"));
    }
    Ok(counts.iter().map(|c| c / total).collect())
}

/// A subject's (or the whole month's) interest distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterestDistribution {
    pub subject: String,
    pub month: String,
    pub probs: Vec<f64>,
}

pub const OVERALL: &str = "Overall";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub subject: String,
    pub category: String,
    /// Compare against each level of this column instead of the whole month.
    #[serde(default)]
    pub breakdown: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    /// `overall` or the breakdown column.
    pub breakdown: String,
    pub level: String,
    /// Number of distinct months the subjects appear in.
    pub cohort: usize,
    pub subjects: usize,
    /// Subject-month comparisons averaged into `mean_jsd`.
    pub comparisons: usize,
    pub mean_jsd: f64,
    /// Fraction of the level's subjects that belong to this cohort.
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub categories: Vec<String>,
    pub rows: Vec<CohortRow>,
    pub notes: Vec<String>,
}

pub fn month_label(table: &DataTable, index: usize) -> String {
    table.period().map_or_else(|| format!("month{}", index + 1), str::to_string)
}

/// Mean JSD between subjects' monthly interests and the comparison
/// distribution, grouped by how many months each subject appears in.
pub fn cohort_drift(tables: &[DataTable], params: &DriftParams) -> Result<DriftReport> {
    if tables.len() < 2 {
        return invalid(format!("drift needs at least two months, got {}", tables.len()));
    }
    let mut categories = BTreeSet::new();
    let mut months_seen: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (t, table) in tables.iter().enumerate() {
        categories.extend(table.categorical(&params.category)?.iter().map(String::as_str));
        for s in table.categorical(&params.subject)? {
            months_seen.entry(s.as_str()).or_default().insert(t);
        }
    }
    let cat_index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let nc = categories.len();
    let cohort_of = |s: &str| months_seen[s].len();

    // (level, cohort) -> (jsd sum, comparisons, subjects)
    let mut acc: BTreeMap<(String, usize), (f64, usize, BTreeSet<String>)> = BTreeMap::new();
    let mut level_subjects: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for table in tables {
        let subjects = table.categorical(&params.subject)?;
        let cats = table.categorical(&params.category)?;
        let levels: Vec<&str> = match &params.breakdown {
            Some(col) => table.categorical(col)?.iter().map(String::as_str).collect(),
            None => vec![OVERALL; table.n_rows()],
        };
        let mut reference: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut units: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
        for ((s, c), l) in subjects.iter().zip(cats).zip(&levels) {
            let ci = cat_index[c.as_str()];
            reference.entry(l).or_insert_with(|| vec![0.0; nc])[ci] += 1.0;
            units.entry((l, s.as_str())).or_insert_with(|| vec![0.0; nc])[ci] += 1.0;
        }
        let reference: BTreeMap<&str, Vec<f64>> =
            reference.into_iter().map(|(l, c)| interest_distribution(&c).map(|d| (l, d))).collect::<Result<_>>()?;
        for ((l, s), counts) in units {
            let d = jsd(&interest_distribution(&counts)?, &reference[l])?;
            let e = acc.entry((l.to_string(), cohort_of(s))).or_insert_with(|| (0.0, 0, BTreeSet::new()));
            e.0 += d;
            e.1 += 1;
            e.2.insert(s.to_string());
            level_subjects.entry(l.to_string()).or_default().insert(s.to_string());
        }
    }

    let breakdown = params.breakdown.clone().unwrap_or_else(|| "overall".into());
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (level, subs) in &level_subjects {
        for cohort in 1..=tables.len() {
            match acc.get(&(level.clone(), cohort)) {
                Some((sum, n, members)) => rows.push(CohortRow {
                    breakdown: breakdown.clone(),
                    level: level.clone(),
                    cohort,
                    subjects: members.len(),
                    comparisons: *n,
                    mean_jsd: sum / *n as f64,
                    share: members.len() as f64 / subs.len() as f64,
                }),
                None => notes.push(format!("{breakdown}={level}: cohort {cohort} is empty")),
            }
        }
    }
    Ok(DriftReport { categories: categories.into_iter().map(str::to_string).collect(), rows, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnData, ColumnSchema};
    use proptest::prelude::*;

    fn month(period: &str, rows: &[(&str, &str, &str)]) -> DataTable {
        let col = |j: usize| ColumnData::Categorical(rows.iter().map(|r| [r.0, r.1, r.2][j].to_string()).collect());
        DataTable::new(
            vec![ColumnSchema::categorical("user"), ColumnSchema::categorical("lead"), ColumnSchema::categorical("device")],
            vec![col(0), col(1), col(2)],
            Some(period.into()),
        )
        .unwrap()
    }

    fn params(breakdown: Option<&str>) -> DriftParams {
        DriftParams { subject: "user".into(), category: "lead".into(), breakdown: breakdown.map(Into::into) }
    }

    #[test]
    fn normalization() {
        assert_eq!(interest_distribution(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(interest_distribution(&[0.0, 2.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(interest_distribution(&[0.0, 0.0]).is_err());
        assert!(interest_distribution(&[-1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn matches_direct_division(counts in proptest::collection::vec(0u32..50, 1..10)) {
            let c: Vec<f64> = counts.iter().map(|&x| f64::from(x)).collect();
            let total: f64 = c.iter().sum();
            prop_assume!(total > 0.0);
            let d = interest_distribution(&c).unwrap();
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (a, b) in d.iter().zip(&c) {
                prop_assert!((a - b / total).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identical_distributions_give_zero() {
        let rows = [("a", "x", "m"), ("a", "y", "m"), ("b", "x", "d"), ("b", "y", "d")];
        let t = [month("2020-01", &rows), month("2020-02", &rows[..2])];
        let r = cohort_drift(&t, &params(None)).unwrap();
        assert!(r.rows.iter().all(|row| row.mean_jsd.abs() < 1e-12));
        let shares: f64 = r.rows.iter().map(|row| row.share).sum();
        assert!((shares - 1.0).abs() < 1e-12);
        assert_eq!(r.rows.len(), 2);
    }

    #[test]
    fn divergent_returning_subjects_raise_the_second_cohort() {
        let m1 = month("2020-01", &[("a", "x", "m"), ("a", "y", "m"), ("b", "x", "m"), ("b", "y", "m"), ("c", "x", "m"), ("c", "y", "m")]);
        let m2 = month("2020-02", &[("a", "x", "m"), ("a", "x", "m"), ("d", "x", "m"), ("d", "y", "m"), ("e", "y", "m"), ("e", "x", "m")]);
        let r = cohort_drift(&[m1, m2], &params(None)).unwrap();
        let get = |c: usize| r.rows.iter().find(|row| row.cohort == c).unwrap();
        assert!(get(2).mean_jsd > get(1).mean_jsd);
        // oracle: month 2 overall is (4/6, 2/6); subject a is (1, 0)
        let overall = [4.0 / 6.0, 2.0 / 6.0];
        let expected = jsd(&[1.0, 0.0], &overall).unwrap() / 2.0;
        assert!((get(2).mean_jsd - expected).abs() < 1e-12);
        assert!((get(1).share - 0.8).abs() < 1e-12 && (get(2).share - 0.2).abs() < 1e-12);
    }

    #[test]
    fn breakdown_levels_and_empty_cohorts() {
        let m1 = month("2020-01", &[("a", "x", "m"), ("b", "y", "d")]);
        let m2 = month("2020-02", &[("c", "x", "m"), ("b", "y", "d")]);
        let r = cohort_drift(&[m1.clone(), m2], &params(Some("device"))).unwrap();
        assert!(r.rows.iter().all(|row| row.breakdown == "device" && row.mean_jsd.abs() < 1e-12));
        assert!(r.notes.iter().any(|n| n.contains("device=m: cohort 2")));
        for level in ["m", "d"] {
            let s: f64 = r.rows.iter().filter(|row| row.level == level).map(|row| row.share).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(cohort_drift(&[m1], &params(None)).is_err());
    }
}
