use super::coassoc::CoassociationMatrix;
use super::check_k;
use crate::clusterers::{kmeans_restarts, EnsembleLibrary};
use crate::error::Result;
use crate::linalg::{normalize_rows, normalized_affinity, top_eigenvectors};
use crate::partition::Partition;

const RESTARTS: usize = 10;

/// Partition read off connected components when there are at least `k`:
/// the `k − 1` largest keep their own label and the rest share one.
fn from_components(comps: &[Vec<usize>], n: usize, k: usize) -> (Partition, Vec<String>) {
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[b].len().cmp(&comps[a].len()).then(comps[a][0].cmp(&comps[b][0])));
    let mut labels = vec![0usize; n];
    for (rank, &c) in order.iter().enumerate() {
        for &i in &comps[c] {
            labels[i] = rank.min(k - 1);
        }
    }
    let mut notes = Vec::new();
    if comps.len() > k {
        notes.push(format!(
            "co-association graph has {} components for k={k}; {} smallest merged",
            comps.len(),
            comps.len() - k + 1
        ));
    }
    (Partition::from_usize(&labels), notes)
}

/// Spectral partition of the co-association matrix, with any notes raised.
pub fn cspa_report(s: &CoassociationMatrix, k: usize, seed: u64) -> Result<(Partition, Vec<String>)> {
    let n = s.n();
    check_k(k, n)?;
    if k == 1 {
        return Ok((Partition::single(n), Vec::new()));
    }
    let comps = s.components();
    if comps.len() >= k {
        return Ok(from_components(&comps, n, k));
    }
    let (a, _) = normalized_affinity(s.as_slice(), n);
    let (_, mut emb) = top_eigenvectors(&a, n, k)?;
    normalize_rows(&mut emb);
    let fit = kmeans_restarts(&emb, k, seed, RESTARTS)?;
    Ok((Partition::from_usize(&fit.labels), Vec::new()))
}

pub fn cspa(lib: &EnsembleLibrary, k: usize, seed: u64) -> Result<Partition> {
    Ok(cspa_report(&super::coassociation(lib), k, seed)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_extra_components_by_size() {
        let p = Partition::from_i32(&[0, 0, 0, 1, 1, 2, 3]);
        let s = CoassociationMatrix::from_partitions(&[&p]);
        let (q, notes) = cspa_report(&s, 2, 0).unwrap();
        assert_eq!(q, Partition::from_i32(&[0, 0, 0, 1, 1, 1, 1]));
        assert_eq!(notes.len(), 1);
    }
}
