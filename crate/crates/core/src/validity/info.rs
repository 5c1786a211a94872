use std::collections::HashMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Contingency table between two labelings. Noise is treated as one more label.
struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Non-zero cells as (row, col, count).
    cells: Vec<(usize, usize, usize)>,
}

fn dense_labels(p: &Partition) -> (Vec<usize>, usize) {
    let k = p.k();
    let has_noise = p.labels().iter().any(|&l| l < 0);
    let labels = p
        .labels()
        .iter()
        .map(|&l| if l < 0 { k } else { l as usize })
        .collect();
    (labels, k + usize::from(has_noise))
}

impl Contingency {
    fn new(u: &Partition, v: &Partition) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch(u.len(), v.len()));
        }
        let (lu, ku) = dense_labels(u);
        let (lv, kv) = dense_labels(v);
        let mut rows = vec![0; ku];
        let mut cols = vec![0; kv];
        for (&a, &b) in lu.iter().zip(&lv) {
            rows[a] += 1;
            cols[b] += 1;
        }
        let cells = if ku.saturating_mul(kv) <= 4 * u.len() + 4096 {
            let mut t = vec![0usize; ku * kv];
            for (&a, &b) in lu.iter().zip(&lv) {
                t[a * kv + b] += 1;
            }
            t.into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(idx, c)| (idx / kv, idx % kv, c))
                .collect()
        } else {
            let mut t: HashMap<(usize, usize), usize> = HashMap::new();
            for (&a, &b) in lu.iter().zip(&lv) {
                *t.entry((a, b)).or_default() += 1;
            }
            let mut cells: Vec<_> = t.into_iter().map(|((a, b), c)| (a, b, c)).collect();
            cells.sort_unstable();
            cells
        };
        Ok(Self {
            n: u.len(),
            rows,
            cols,
            cells,
        })
    }

    /// True when the two labelings are equal up to a permutation of ids.
    fn is_bijection(&self) -> bool {
        self.cells.len() == self.rows.len() && self.cells.len() == self.cols.len()
    }

    fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let mi: f64 = self
            .cells
            .iter()
            .map(|&(a, b, c)| {
                let nij = c as f64;
                nij / n * (n * nij / (self.rows[a] as f64 * self.cols[b] as f64)).ln()
            })
            .sum();
        mi.max(0.0)
    }
}

fn entropy_of(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Shannon entropy of a labeling in nats.
pub fn entropy(p: &Partition) -> f64 {
    let (labels, k) = dense_labels(p);
    let mut counts = vec![0; k];
    for l in labels {
        counts[l] += 1;
    }
    entropy_of(&counts, p.len())
}

/// Mutual information between two labelings (natural log).
pub fn mutual_information(u: &Partition, v: &Partition) -> Result<f64> {
    let c = Contingency::new(u, v)?;
    Ok(c.mutual_information())
}

/// Normalised mutual information, `MI / sqrt(H(u) H(v))`.
pub fn nmi(u: &Partition, v: &Partition) -> Result<f64> {
    let c = Contingency::new(u, v)?;
    if c.is_bijection() {
        return Ok(1.0);
    }
    let hu = entropy_of(&c.rows, c.n);
    let hv = entropy_of(&c.cols, c.n);
    if hu <= 0.0 || hv <= 0.0 {
        return Ok(0.0);
    }
    let mi = c.mutual_information();
    Ok((mi / (hu * hv).sqrt()).clamp(0.0, 1.0))
}

fn ln_table(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ln = Vec::with_capacity(n + 1);
    let mut lf = Vec::with_capacity(n + 1);
    ln.push(f64::NEG_INFINITY);
    lf.push(0.0);
    let mut acc = 0.0;
    for i in 1..=n {
        let l = (i as f64).ln();
        acc += l;
        ln.push(l);
        lf.push(acc);
    }
    (ln, lf)
}

fn emi_of(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let (ln, lf) = ln_table(n);
    let nf = n as f64;
    let ln_n = nf.ln();
    let mut emi = 0.0;
    for &a in rows {
        for &b in cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            if lo > hi {
                continue;
            }
            let ln_ab = ln[a] + ln[b];
            let mut log_p = lf[a] + lf[b] + lf[n - a] + lf[n - b]
                - lf[n]
                - lf[lo]
                - lf[a - lo]
                - lf[b - lo]
                - lf[n + lo - a - b];
            let mut p = log_p.exp();
            for nij in lo..=hi {
                if nij > lo {
                    // hypergeometric ratio P(nij) / P(nij - 1)
                    let x = nij - 1;
                    let (num1, num2) = (a - x, b - x);
                    let (den1, den2) = (nij, n + nij - a - b);
                    log_p += ln[num1] + ln[num2] - ln[den1] - ln[den2];
                    p = if p > 1e-280 {
                        p * (num1 as f64 * num2 as f64) / (den1 as f64 * den2 as f64)
                    } else {
                        log_p.exp()
                    };
                }
                if p == 0.0 {
                    continue;
                }
                emi += nij as f64 / nf * (ln_n + ln[nij] - ln_ab) * p;
            }
        }
    }
    emi
}

/// Expected mutual information under the hypergeometric permutation model.
pub fn expected_mutual_information(u: &Partition, v: &Partition) -> Result<f64> {
    let c = Contingency::new(u, v)?;
    Ok(emi_of(&c.rows, &c.cols, c.n))
}

/// Adjusted mutual information with arithmetic-mean normalisation.
pub fn ami(u: &Partition, v: &Partition) -> Result<f64> {
    let c = Contingency::new(u, v)?;
    if c.is_bijection() {
        return Ok(1.0);
    }
    let hu = entropy_of(&c.rows, c.n);
    let hv = entropy_of(&c.cols, c.n);
    let mi = c.mutual_information();
    let emi = emi_of(&c.rows, &c.cols, c.n);
    let denom = 0.5 * (hu + hv) - emi;
    if denom.abs() < f64::EPSILON {
        return Ok(0.0);
    }
    Ok(((mi - emi) / denom).min(1.0))
}

fn average<'a, F>(c: &Partition, ensemble: impl IntoIterator<Item = &'a Partition>, f: F) -> Result<f64>
where
    F: Fn(&Partition, &Partition) -> Result<f64>,
{
    let mut sum = 0.0;
    let mut m = 0usize;
    for p in ensemble {
        sum += f(c, p)?;
        m += 1;
    }
    if m == 0 {
        return Err(Error::Empty("ensemble"));
    }
    Ok(sum / m as f64)
}

/// Average NMI of `c` against every partition of the ensemble.
pub fn anmi<'a>(c: &Partition, ensemble: impl IntoIterator<Item = &'a Partition>) -> Result<f64> {
    average(c, ensemble, nmi)
}

/// Average AMI of `c` against every partition of the ensemble.
pub fn aami<'a>(c: &Partition, ensemble: impl IntoIterator<Item = &'a Partition>) -> Result<f64> {
    average(c, ensemble, ami)
}

/// Symmetric matrix of pairwise AMI values, with ones on the diagonal.
pub fn pairwise_ami(parts: &[&Partition]) -> Result<Vec<Vec<f64>>> {
    let m = parts.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let eval = |&(i, j): &(usize, usize)| ami(parts[i], parts[j]).map(|v| (i, j, v));
    #[cfg(feature = "parallel")]
    let values: Result<Vec<_>> = pairs.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let values: Result<Vec<_>> = pairs.iter().map(eval).collect();
    let mut out = vec![vec![1.0; m]; m];
    for (i, j, v) in values? {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: &[i64]) -> Partition {
        Partition::new(l.iter().copied())
    }

    #[test]
    fn mi_of_identical_balanced_pair_is_ln2() {
        let u = p(&[0, 0, 1, 1]);
        assert!((mutual_information(&u, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mi_with_single_cluster_is_zero() {
        assert_eq!(mutual_information(&p(&[0, 1, 2, 0]), &p(&[0, 0, 0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn mi_of_product_labeling_is_zero() {
        // every (a, b) combination appears equally often
        let u = p(&[0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let v = p(&[0, 1, 2, 0, 1, 2, 0, 1, 2]);
        assert!(mutual_information(&u, &v).unwrap().abs() < 1e-15);
    }

    #[test]
    fn nmi_cases() {
        let u = p(&[0, 0, 1, 1, 2]);
        let w = p(&[7, 7, 3, 3, 9]);
        assert_eq!(nmi(&u, &w).unwrap(), 1.0);
        assert_eq!(nmi(&u, &p(&[0; 5])).unwrap(), 0.0);
        assert!(nmi(&p(&[0, 0, 1, 1]), &p(&[0, 1, 0, 1])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ami_identity_and_length_mismatch() {
        let u = p(&[0, 1, 2, 3, 0, 1]);
        assert_eq!(ami(&u, &u).unwrap(), 1.0);
        assert!(matches!(ami(&u, &p(&[0])), Err(Error::LengthMismatch(6, 1))));
    }

    #[test]
    fn emi_of_single_cluster_is_zero() {
        let u = p(&[0, 0, 0, 0]);
        let v = p(&[0, 1, 0, 1]);
        assert!(expected_mutual_information(&u, &v).unwrap().abs() < 1e-15);
    }

    #[test]
    fn averages_and_pairwise() {
        let a = p(&[0, 0, 1, 1]);
        let b = p(&[0, 1, 0, 1]);
        let ens = [a.clone(), b.clone()];
        let expect = (nmi(&a, &a).unwrap() + nmi(&a, &b).unwrap()) / 2.0;
        assert!((anmi(&a, &ens).unwrap() - expect).abs() < 1e-15);
        assert_eq!(aami(&a, [&a, &a]).unwrap(), 1.0);
        assert!(anmi(&a, std::iter::empty()).is_err());
        let pw = pairwise_ami(&[&a, &b, &a]).unwrap();
        assert_eq!(pw[0][2], 1.0);
        assert_eq!(pw[1][0], pw[0][1]);
    }
}
