use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ColumnData, ColumnSchema, DataTable};
use crate::error::{invalid, Result};
use crate::partition::{Partition, NOISE};
use crate::rng::rng;

/// Planted-partition generator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub k_true: usize,
    pub numeric_dims: usize,
    /// Level count of each categorical column.
    #[serde(default)]
    pub categorical_levels: Vec<usize>,
    /// Spacing between neighbouring centroids, in within-cluster standard deviations.
    pub separation: f64,
    #[serde(default)]
    pub noise_fraction: f64,
    /// Probability that a row takes its cluster's preferred categorical level.
    #[serde(default = "default_bias")]
    pub category_bias: f64,
    /// Number of distinct subject ids; 0 omits the `subject` column.
    #[serde(default)]
    pub subjects: usize,
    #[serde(default)]
    pub period: Option<String>,
    pub seed: u64,
}

fn default_bias() -> f64 {
    0.7
}

impl SyntheticSpec {
    pub fn blobs(n: usize, k_true: usize, numeric_dims: usize, separation: f64, seed: u64) -> Self {
        Self {
            n,
            k_true,
            numeric_dims,
            categorical_levels: Vec::new(),
            separation,
            noise_fraction: 0.0,
            category_bias: default_bias(),
            subjects: 0,
            period: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.n < self.k_true {
            return invalid(format!("need n >= k_true >= 1 (n={}, k_true={})", self.n, self.k_true));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return invalid("separation must be positive");
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return invalid(format!("noise_fraction {} outside [0, 1]", self.noise_fraction));
        }
        if !(0.0..=1.0).contains(&self.category_bias) {
            return invalid("category_bias outside [0, 1]");
        }
        if self.numeric_dims == 0 && self.categorical_levels.is_empty() {
            return invalid("spec has no feature columns");
        }
        if self.categorical_levels.contains(&0) {
            return invalid("categorical column with zero levels");
        }
        Ok(())
    }

    /// Planted centroid of cluster `c`.
    ///
    /// Centroids sit on a regular polygon in the first two numeric dimensions
    /// (or a line when there is only one), with neighbouring centroids
    /// `separation` apart.
    pub fn centroid(&self, c: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.numeric_dims];
        if self.numeric_dims == 0 || self.k_true == 1 {
            return v;
        }
        if self.numeric_dims == 1 || self.k_true == 2 {
            v[0] = self.separation * c as f64;
            return v;
        }
        let k = self.k_true as f64;
        let radius = self.separation / (2.0 * (PI / k).sin());
        let angle = 2.0 * PI * c as f64 / k;
        v[0] = radius * angle.cos();
        v[1] = radius * angle.sin();
        v
    }
}

/// Draws a mixed-type table with Gaussian numeric blobs and cluster-biased
/// categorical levels, returning the planted partition alongside it.
///
/// Rows are shuffled; noise rows are uniform in the padded centroid box and
/// carry the noise label in the returned partition.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(DataTable, Partition)> {
    spec.validate()?;
    let mut r = rng(spec.seed);
    let n_noise = (spec.noise_fraction * spec.n as f64).round() as usize;
    let n_clustered = spec.n - n_noise;
    let k = spec.k_true;

    let mut truth: Vec<i32> = (0..n_clustered).map(|i| (i % k) as i32).collect();
    truth.extend(std::iter::repeat_n(NOISE, n_noise));
    truth.shuffle(&mut r);

    let centroids: Vec<Vec<f64>> = (0..k).map(|c| spec.centroid(c)).collect();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..spec.numeric_dims)
        .map(|j| {
            let vals = centroids.iter().map(|c| c[j]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min) - 3.0;
            let hi = vals.fold(f64::NEG_INFINITY, f64::max) + 3.0;
            (lo, hi)
        })
        .unzip();

    let mut numeric = vec![Vec::with_capacity(spec.n); spec.numeric_dims];
    let mut categorical = vec![Vec::with_capacity(spec.n); spec.categorical_levels.len()];
    let mut subjects = Vec::with_capacity(if spec.subjects > 0 { spec.n } else { 0 });
    for &label in &truth {
        for j in 0..spec.numeric_dims {
            let x = if label == NOISE {
                r.random_range(lo[j]..hi[j])
            } else {
                let z: f64 = StandardNormal.sample(&mut r);
                centroids[label as usize][j] + z
            };
            numeric[j].push(x);
        }
        for (j, &levels) in spec.categorical_levels.iter().enumerate() {
            let level = if label != NOISE && r.random_bool(spec.category_bias) {
                (label as usize + j) % levels
            } else {
                r.random_range(0..levels)
            };
            categorical[j].push(format!("l{level}"));
        }
        if spec.subjects > 0 {
            // subjects are tied to a home cluster so their visits share its profile
            let home = if label == NOISE { r.random_range(0..k) } else { label as usize };
            let per_cluster = spec.subjects.div_ceil(k);
            let mut id = home + k * r.random_range(0..per_cluster);
            if id >= spec.subjects {
                id = home % spec.subjects;
            }
            subjects.push(format!("u{id:05}"));
        }
    }

    let mut schema = Vec::new();
    let mut columns = Vec::new();
    if spec.subjects > 0 {
        schema.push(ColumnSchema::categorical("subject"));
        columns.push(ColumnData::Categorical(subjects));
    }
    for (j, v) in numeric.into_iter().enumerate() {
        schema.push(ColumnSchema::numeric(format!("x{j}")));
        columns.push(ColumnData::Numeric(v));
    }
    for (j, v) in categorical.into_iter().enumerate() {
        schema.push(ColumnSchema::categorical(format!("c{j}")));
        columns.push(ColumnData::Categorical(v));
    }
    let table = DataTable::new(schema, columns, spec.period.clone())?;
    Ok((table, Partition::from_i32(&truth)))
}

/// Several months drawn around one spec.
///
/// The first `preserved` clusters keep their centroid and categorical level
/// weights in every month. The remaining clusters swap centroid slots and
/// redraw their level weights each month, so their signatures do not recur.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthlySpec {
    pub base: SyntheticSpec,
    pub months: usize,
    #[serde(default = "default_preserved")]
    pub preserved: usize,
    /// First month tag, `YYYY-MM`.
    #[serde(default = "default_start")]
    pub start: String,
}

fn default_preserved() -> usize {
    1
}

fn default_start() -> String {
    "2020-01".into()
}

impl MonthlySpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.months == 0 {
            return invalid("months must be at least 1");
        }
        if self.preserved > self.base.k_true {
            return invalid(format!("preserved {} exceeds k_true {}", self.preserved, self.base.k_true));
        }
        if !super::is_month_tag(&self.start) {
            return invalid(format!("start `{}` is not YYYY-MM", self.start));
        }
        Ok(())
    }

    pub fn month_tags(&self) -> Vec<String> {
        let (y, m) = self.start.split_at(4);
        let (y, m): (usize, usize) = (y.parse().unwrap_or(2020), m[1..].parse().unwrap_or(1));
        (0..self.months)
            .map(|i| {
                let z = y * 12 + (m - 1) + i;
                format!("{:04}-{:02}", z / 12, z % 12 + 1)
            })
            .collect()
    }
}

/// Peaked random level weights.
fn level_weights(levels: usize, r: &mut crate::rng::Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..levels).map(|_| r.random::<f64>().powi(4) + 1e-3).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

fn sample_level(weights: &[f64], r: &mut crate::rng::Rng) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// One generated month.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthDraw {
    pub table: DataTable,
    pub truth: Partition,
    /// Labels of the preserved clusters in `truth`, in generator order.
    pub preserved: Vec<i32>,
}

pub fn generate_monthly(spec: &MonthlySpec) -> Result<Vec<MonthDraw>> {
    spec.validate()?;
    let base = &spec.base;
    let k = base.k_true;
    let mut fixed = rng(crate::rng::derive_seed(base.seed, "preserved"));
    let kept_weights: Vec<Vec<Vec<f64>>> = (0..spec.preserved)
        .map(|_| base.categorical_levels.iter().map(|&l| level_weights(l, &mut fixed)).collect())
        .collect();
    let mut out = Vec::with_capacity(spec.months);
    for (t, tag) in spec.month_tags().into_iter().enumerate() {
        let mut r = rng(crate::rng::derive_seed(base.seed, &tag));
        let mut slots: Vec<usize> = (spec.preserved..k).collect();
        if t > 0 {
            slots.shuffle(&mut r);
        }
        let centroids: Vec<Vec<f64>> =
            (0..k).map(|c| base.centroid(if c < spec.preserved { c } else { slots[c - spec.preserved] })).collect();
        let weights: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|c| {
                if c < spec.preserved {
                    kept_weights[c].clone()
                } else {
                    base.categorical_levels.iter().map(|&l| level_weights(l, &mut r)).collect()
                }
            })
            .collect();
        let n_noise = (base.noise_fraction * base.n as f64).round() as usize;
        let mut truth: Vec<i32> = (0..base.n - n_noise).map(|i| (i % k) as i32).collect();
        truth.extend(std::iter::repeat_n(NOISE, n_noise));
        truth.shuffle(&mut r);
        let mut numeric = vec![Vec::with_capacity(base.n); base.numeric_dims];
        let mut categorical = vec![Vec::with_capacity(base.n); base.categorical_levels.len()];
        let mut subjects = Vec::new();
        for &label in &truth {
            let c = if label == NOISE { r.random_range(0..k) } else { label as usize };
            for (j, col) in numeric.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut r);
                let spread = if label == NOISE { 3.0 } else { 1.0 };
                col.push(centroids[c][j] + spread * z);
            }
            for (j, col) in categorical.iter_mut().enumerate() {
                let level = if label == NOISE {
                    r.random_range(0..base.categorical_levels[j])
                } else {
                    sample_level(&weights[c][j], &mut r)
                };
                col.push(format!("l{level}"));
            }
            if base.subjects > 0 {
                let per_cluster = base.subjects.div_ceil(k);
                let id = (c + k * r.random_range(0..per_cluster)).min(base.subjects - 1);
                subjects.push(format!("u{id:05}"));
            }
        }
        let mut schema = Vec::new();
        let mut columns = Vec::new();
        if base.subjects > 0 {
            schema.push(ColumnSchema::categorical("subject"));
            columns.push(ColumnData::Categorical(subjects));
        }
        for (j, v) in numeric.into_iter().enumerate() {
            schema.push(ColumnSchema::numeric(format!("x{j}")));
            columns.push(ColumnData::Numeric(v));
        }
        for (j, v) in categorical.into_iter().enumerate() {
            schema.push(ColumnSchema::categorical(format!("c{j}")));
            columns.push(ColumnData::Categorical(v));
        }
        let partition = Partition::from_i32(&truth);
        let preserved = (0..spec.preserved as i32)
            .filter_map(|c| truth.iter().position(|&l| l == c).map(|i| partition.labels()[i]))
            .collect();
        out.push(MonthDraw { table: DataTable::new(schema, columns, Some(tag))?, truth: partition, preserved });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_has_identical_labels() {
        let (t, p) = generate_synthetic(&SyntheticSpec::blobs(100, 1, 2, 8.0, 1)).unwrap();
        assert_eq!(t.n_rows(), 100);
        assert_eq!(p.k(), 1);
        assert!(p.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let mut spec = SyntheticSpec::blobs(200, 3, 2, 4.0, 11);
        spec.categorical_levels = vec![3, 5];
        spec.subjects = 20;
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        spec.seed = 12;
        assert_ne!(a.0, generate_synthetic(&spec).unwrap().0);
    }

    #[test]
    fn noise_fraction_produces_noise_labels() {
        let mut spec = SyntheticSpec::blobs(100, 2, 2, 8.0, 3);
        spec.noise_fraction = 0.2;
        let (_, p) = generate_synthetic(&spec).unwrap();
        assert_eq!(p.noise_count(), 20);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SyntheticSpec::blobs(10, 3, 2, 8.0, 3);
        spec.noise_fraction = 1.5;
        assert!(generate_synthetic(&spec).is_err());
        assert!(generate_synthetic(&SyntheticSpec::blobs(2, 3, 2, 8.0, 3)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::blobs(10, 3, 2, 0.0, 3)).is_err());
    }

    #[test]
    fn monthly_tags_and_determinism() {
        let mut base = SyntheticSpec::blobs(60, 3, 2, 6.0, 9);
        base.categorical_levels = vec![4, 4];
        base.subjects = 12;
        let spec = MonthlySpec { base, months: 14, preserved: 1, start: "2019-11".into() };
        let tags = spec.month_tags();
        assert_eq!(tags[0], "2019-11");
        assert_eq!(tags[2], "2020-01");
        assert_eq!(tags[13], "2020-12");
        let a = generate_monthly(&spec).unwrap();
        assert_eq!(a, generate_monthly(&spec).unwrap());
        assert_eq!(a.len(), 14);
        assert_eq!(a[3].table.period(), Some("2020-02"));
        assert_eq!(a[0].preserved.len(), 1);
        let bad = MonthlySpec { preserved: 4, ..spec.clone() };
        assert!(generate_monthly(&bad).is_err());
    }

    #[test]
    fn neighbouring_centroids_are_separation_apart() {
        let spec = SyntheticSpec::blobs(30, 5, 3, 6.0, 0);
        let a = spec.centroid(0);
        let b = spec.centroid(1);
        let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((d - 6.0).abs() < 1e-9);
    }
}
