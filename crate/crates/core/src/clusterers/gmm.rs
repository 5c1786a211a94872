use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans;
use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-3;
const RETRY_REGULARIZATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Covariance {
    Diagonal,
    Full,
}

impl Covariance {
    pub fn name(self) -> &'static str {
        match self {
            Covariance::Diagonal => "diag",
            Covariance::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "diag" => Some(Covariance::Diagonal),
            "full" => Some(Covariance::Full),
            _ => None,
        }
    }
}

/// Per-component log-density evaluator.
enum Component {
    Diagonal { mean: Vec<f64>, var: Vec<f64>, log_norm: f64 },
    Full { mean: DVector<f64>, chol_l: DMatrix<f64>, log_norm: f64 },
}

impl Component {
    fn fit(m: &Matrix, resp: &[f64], k: usize, c: usize, cov: Covariance, reg: f64) -> Option<(Self, f64)> {
        let (n, d) = (m.rows(), m.cols());
        let w: f64 = (0..n).map(|i| resp[i * k + c]).sum();
        if w <= 0.0 {
            return None;
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            let r = resp[i * k + c];
            for (mu, x) in mean.iter_mut().zip(m.row(i)) {
                *mu += r * x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= w);
        let half_log_2pi = 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
        match cov {
            Covariance::Diagonal => {
                let mut var = vec![0.0; d];
                for i in 0..n {
                    let r = resp[i * k + c];
                    for j in 0..d {
                        var[j] += r * (m.get(i, j) - mean[j]).powi(2);
                    }
                }
                var.iter_mut().for_each(|v| *v = *v / w + reg);
                if var.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return None;
                }
                let log_norm = -half_log_2pi - 0.5 * var.iter().map(|v| v.ln()).sum::<f64>();
                Some((Component::Diagonal { mean, var, log_norm }, w))
            }
            Covariance::Full => {
                let mut s = DMatrix::zeros(d, d);
                for i in 0..n {
                    let r = resp[i * k + c];
                    let x = DVector::from_iterator(d, m.row(i).iter().zip(&mean).map(|(a, b)| a - b));
                    s.ger(r, &x, &x, 1.0);
                }
                s /= w;
                for j in 0..d {
                    s[(j, j)] += reg;
                }
                let chol = s.cholesky()?;
                let l = chol.l();
                let logdet: f64 = (0..d).map(|j| l[(j, j)].ln()).sum::<f64>() * 2.0;
                if !logdet.is_finite() {
                    return None;
                }
                Some((
                    Component::Full {
                        mean: DVector::from_vec(mean),
                        chol_l: l,
                        log_norm: -half_log_2pi - 0.5 * logdet,
                    },
                    w,
                ))
            }
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Component::Diagonal { mean, var, log_norm } => {
                log_norm - 0.5 * x.iter().zip(mean).zip(var).map(|((x, m), v)| (x - m).powi(2) / v).sum::<f64>()
            }
            Component::Full { mean, chol_l, log_norm } => {
                let diff = DVector::from_iterator(x.len(), x.iter().zip(mean.iter()).map(|(a, b)| a - b));
                let z = chol_l.solve_lower_triangular(&diff).expect("cholesky factor is invertible");
                log_norm - 0.5 * z.norm_squared()
            }
        }
    }
}

fn em(m: &Matrix, k: usize, cov: Covariance, init: &[usize], reg: f64) -> Option<Vec<usize>> {
    let n = m.rows();
    let mut resp = vec![0.0; n * k];
    for (i, &l) in init.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    let mut prev = f64::NEG_INFINITY;
    let mut logp = vec![0.0; k];
    for _ in 0..MAX_ITERATIONS {
        let mut comps = Vec::with_capacity(k);
        let mut log_weights = Vec::with_capacity(k);
        for c in 0..k {
            let (comp, w) = Component::fit(m, &resp, k, c, cov, reg)?;
            comps.push(comp);
            log_weights.push((w / n as f64).ln());
        }
        let mut total = 0.0;
        for i in 0..n {
            for c in 0..k {
                logp[c] = log_weights[c] + comps[c].log_density(m.row(i));
            }
            let mx = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + logp.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            if !lse.is_finite() {
                return None;
            }
            total += lse;
            for c in 0..k {
                resp[i * k + c] = (logp[c] - lse).exp();
            }
        }
        let mean_ll = total / n as f64;
        if (mean_ll - prev).abs() < TOLERANCE {
            break;
        }
        prev = mean_ll;
    }
    Some(
        (0..n)
            .map(|i| {
                let row = &resp[i * k..(i + 1) * k];
                (0..k).fold(0, |b, c| if row[c] > row[b] { c } else { b })
            })
            .collect(),
    )
}

/// Gaussian mixture by EM from a k-means start; labels by maximum
/// responsibility. A collapsed covariance triggers one retry with a small
/// diagonal regularization.
pub fn gmm(m: &Matrix, k: usize, cov: Covariance, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > m.rows() {
        return invalid(format!("k={k} outside [1, {}]", m.rows()));
    }
    let init = kmeans(m, k, seed)?.labels;
    em(m, k, cov, &init, 0.0)
        .or_else(|| em(m, k, cov, &init, RETRY_REGULARIZATION))
        .ok_or(Error::CovarianceCollapse)
}
