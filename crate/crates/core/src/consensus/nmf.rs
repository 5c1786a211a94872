use rand::Rng as _;

use super::coassoc::CoassociationMatrix;
use super::check_k;
use crate::clusterers::EnsembleLibrary;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::rng;

pub const MAX_ITERATIONS: usize = 500;
pub const TOLERANCE: f64 = 1e-6;
// Step damping of the multiplicative update; 1/4 guarantees monotone descent.
const BETA: f64 = 0.25;

/// Result of a symmetric factorization `S ≈ HHᵀ`.
#[derive(Clone, Debug)]
pub struct SymNmf {
    /// Row-major `n x k` nonnegative factor.
    pub h: Vec<f64>,
    pub k: usize,
    /// Squared Frobenius residual of the initial factor and after each update.
    pub residuals: Vec<f64>,
}

impl SymNmf {
    pub fn labels(&self) -> Vec<usize> {
        self.h
            .chunks(self.k)
            .map(|r| (0..self.k).fold(0, |b, c| if r[c] > r[b] { c } else { b }))
            .collect()
    }

    pub fn residual(&self) -> f64 {
        *self.residuals.last().expect("at least one residual")
    }
}

fn products(s: &[f64], h: &[f64], n: usize, k: usize, sh: &mut [f64], hth: &mut [f64]) {
    sh.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let out = &mut sh[i * k..(i + 1) * k];
        for (j, &sij) in s[i * n..(i + 1) * n].iter().enumerate() {
            if sij != 0.0 {
                for c in 0..k {
                    out[c] += sij * h[j * k + c];
                }
            }
        }
    }
    hth.iter_mut().for_each(|v| *v = 0.0);
    for row in h.chunks(k) {
        for a in 0..k {
            for b in 0..k {
                hth[a * k + b] += row[a] * row[b];
            }
        }
    }
}

/// `‖S − HHᵀ‖² = ‖S‖² − 2⟨H, SH⟩ + ‖HᵀH‖²`.
fn residual(s_norm2: f64, h: &[f64], sh: &[f64], hth: &[f64]) -> f64 {
    let cross: f64 = h.iter().zip(sh).map(|(a, b)| a * b).sum();
    let gram: f64 = hth.iter().map(|v| v * v).sum();
    (s_norm2 - 2.0 * cross + gram).max(0.0)
}

/// Multiplicative updates `H ← H ∘ (1 − β + β·SH / HHᵀH)`.
pub fn symmetric_nmf(s: &[f64], n: usize, k: usize, seed: u64) -> Result<SymNmf> {
    check_k(k, n)?;
    let mean = s.iter().sum::<f64>() / (n * n) as f64;
    let scale = (mean / k as f64).sqrt();
    let s_norm2: f64 = s.iter().map(|v| v * v).sum();
    let mut g = rng(seed);
    let mut h: Vec<f64> = (0..n * k).map(|_| g.random::<f64>() * scale).collect();
    let mut residuals = Vec::new();
    let mut sh = vec![0.0; n * k];
    let mut hth = vec![0.0; k * k];
    for it in 0..=MAX_ITERATIONS {
        products(s, &h, n, k, &mut sh, &mut hth);
        let r = residual(s_norm2, &h, &sh, &hth);
        if !r.is_finite() {
            return Err(Error::NonFiniteResidual);
        }
        let prev = residuals.last().copied();
        residuals.push(r);
        let converged = prev.is_some_and(|p: f64| (p - r).abs() <= TOLERANCE * p.max(f64::MIN_POSITIVE));
        if converged || it == MAX_ITERATIONS {
            break;
        }
        for i in 0..n {
            for c in 0..k {
                let denom: f64 = (0..k).map(|b| h[i * k + b] * hth[b * k + c]).sum();
                if denom > 0.0 {
                    h[i * k + c] *= 1.0 - BETA + BETA * sh[i * k + c] / denom;
                }
            }
        }
    }
    Ok(SymNmf { h, k, residuals })
}

pub fn nmf_consensus_matrix(s: &CoassociationMatrix, k: usize, seed: u64) -> Result<Partition> {
    let n = s.n();
    check_k(k, n)?;
    if k == 1 {
        return Ok(Partition::single(n));
    }
    Ok(Partition::from_usize(&symmetric_nmf(s.as_slice(), n, k, seed)?.labels()))
}

pub fn nmf_consensus(lib: &EnsembleLibrary, k: usize, seed: u64) -> Result<Partition> {
    nmf_consensus_matrix(&super::coassociation(lib), k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_factorizes_exactly() {
        let p = Partition::from_i32(&[0, 1, 2, 0, 1, 2, 0, 1, 2, 2]);
        let s = CoassociationMatrix::from_partitions(&[&p]);
        let f = symmetric_nmf(s.as_slice(), 10, 3, 4).unwrap();
        assert!(f.residual() < 1e-3, "{}", f.residual());
        assert_eq!(Partition::from_usize(&f.labels()), p);
    }

    #[test]
    fn residual_never_increases_on_random_input() {
        for seed in 0..5 {
            let mut g = rng(100 + seed);
            let n = 30;
            let mut s = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v: f64 = g.random();
                    s[i * n + j] = v;
                    s[j * n + i] = v;
                }
            }
            let f = symmetric_nmf(&s, n, 4, seed).unwrap();
            assert!(f.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "seed {seed}");
        }
    }

    #[test]
    fn one_cluster() {
        let p = Partition::from_i32(&[0, 1, 0]);
        let lib = EnsembleLibrary::from_partitions(vec![p]).unwrap();
        assert_eq!(nmf_consensus(&lib, 1, 0).unwrap(), Partition::single(3));
    }
}
