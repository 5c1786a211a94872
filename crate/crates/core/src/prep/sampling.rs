use std::collections::BTreeMap;

use rand::seq::index::sample;

use crate::data::DataTable;
use crate::error::{invalid, Result};
use crate::rng::rng;

/// Sorted indices of a uniform sample without replacement.
pub fn random_indices(rows: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > rows {
        return invalid(format!("sample size {n} outside [1, {rows}]"));
    }
    let mut idx = sample(&mut rng(seed), rows, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

pub fn sample_random(table: &DataTable, n: usize, seed: u64) -> Result<DataTable> {
    Ok(table.select_rows(&random_indices(table.n_rows(), n, seed)?))
}

/// Largest-remainder apportionment of `n` over strata of the given sizes.
/// Ties in the remainder go to the earlier stratum.
pub fn stratified_quotas(sizes: &[usize], n: usize) -> Result<Vec<usize>> {
    let total: usize = sizes.iter().sum();
    if n > total {
        return invalid(format!("sample size {n} exceeds {total} rows"));
    }
    if total == 0 {
        return Ok(vec![0; sizes.len()]);
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| s * n / total).collect();
    let mut rem: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s * n % total, i))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - quotas.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(short) {
        quotas[i] += 1;
    }
    Ok(quotas)
}

/// Proportional per-stratum sample; strata are ordered by level name.
pub fn stratified_indices(strata: &[String], n: usize, seed: u64) -> Result<Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let quotas = stratified_quotas(&sizes, n)?;
    let mut g = rng(seed);
    let mut out = Vec::with_capacity(n);
    for (members, q) in groups.values().zip(quotas) {
        out.extend(sample(&mut g, members.len(), q).into_iter().map(|j| members[j]));
    }
    out.sort_unstable();
    Ok(out)
}

pub fn sample_stratified(table: &DataTable, n: usize, stratum: &str, seed: u64) -> Result<DataTable> {
    let strata = table.categorical(stratum)?;
    Ok(table.select_rows(&stratified_indices(strata, n, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use proptest::prelude::*;

    #[test]
    fn quota_examples() {
        assert_eq!(stratified_quotas(&[60, 40], 10).unwrap(), vec![6, 4]);
        assert_eq!(stratified_quotas(&[70, 20, 10], 10).unwrap(), vec![7, 2, 1]);
        assert_eq!(stratified_quotas(&[1, 1, 1], 2).unwrap(), vec![1, 1, 0]);
        assert!(stratified_quotas(&[3], 4).is_err());
    }

    #[test]
    fn full_and_repeated_samples() {
        let (t, _) = generate_synthetic(&SyntheticSpec::blobs(80, 2, 2, 4.0, 1)).unwrap();
        assert_eq!(sample_random(&t, 80, 9).unwrap(), t);
        assert_eq!(sample_random(&t, 20, 9).unwrap(), sample_random(&t, 20, 9).unwrap());
        assert!(sample_random(&t, 81, 9).is_err());
        assert!(sample_random(&t, 0, 9).is_err());
    }

    #[test]
    fn stratified_full_and_missing() {
        let mut spec = SyntheticSpec::blobs(90, 3, 2, 4.0, 2);
        spec.categorical_levels = vec![3];
        let (t, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(sample_stratified(&t, 90, "c0", 1).unwrap(), t);
        assert!(sample_stratified(&t, 10, "nope", 1).is_err());
        let s = sample_stratified(&t, 30, "c0", 1).unwrap();
        assert_eq!(s.n_rows(), 30);
    }

    #[test]
    fn random_sample_preserves_proportions() {
        let mut spec = SyntheticSpec::blobs(50_000, 4, 2, 4.0, 3);
        spec.categorical_levels = vec![4];
        let (t, _) = generate_synthetic(&spec).unwrap();
        let share = |tab: &DataTable, level: &str| {
            let c = tab.categorical("c0").unwrap();
            c.iter().filter(|v| *v == level).count() as f64 / c.len() as f64
        };
        for seed in 0..5 {
            let s = sample_random(&t, 5000, seed).unwrap();
            for l in 0..4 {
                let level = format!("l{l}");
                assert!((share(&s, &level) - share(&t, &level)).abs() < 0.03);
            }
        }
    }

    proptest! {
        #[test]
        fn quotas_sum_and_stay_close(sizes in prop::collection::vec(0usize..200, 1..8), frac in 0.0f64..1.0) {
            let total: usize = sizes.iter().sum();
            let n = (total as f64 * frac) as usize;
            let q = stratified_quotas(&sizes, n).unwrap();
            prop_assert_eq!(q.iter().sum::<usize>(), n);
            for (s, q) in sizes.iter().zip(&q) {
                let exact = (*s * n) as f64 / total.max(1) as f64;
                prop_assert!((*q as f64 - exact).abs() < 1.0);
            }
        }
    }
}
