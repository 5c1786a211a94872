use serde::{Deserialize, Serialize};

use super::Orientation;
use crate::error::{invalid, Error, Result};

/// Integer bin labels for a real sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedVector {
    pub labels: Vec<usize>,
    /// `bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
}

impl BinnedVector {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freedman–Diaconis binning over the data's own range.
pub fn fd_bin(values: &[f64]) -> Result<BinnedVector> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    fd_bin_in_range(values, lo, hi)
}

/// Freedman–Diaconis binning over a caller-supplied `[lo, hi]` range.
///
/// The bin width `2 IQR n^(-1/3)` comes from `values`; values outside the
/// range fall into the first or last bin.
pub fn fd_bin_in_range(values: &[f64], lo: f64, hi: f64) -> Result<BinnedVector> {
    if values.len() < 2 {
        return invalid("fd_bin needs at least two values");
    }
    if values.iter().any(|v| !v.is_finite()) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return invalid("fd_bin needs finite values and lo <= hi");
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let width = 2.0 * iqr * (values.len() as f64).powf(-1.0 / 3.0);
    if iqr <= 0.0 || hi <= lo || width <= 0.0 {
        return Ok(BinnedVector {
            labels: vec![0; values.len()],
            edges: if hi > lo { vec![lo, hi] } else { vec![lo - 0.5, lo + 0.5] },
        });
    }
    let bins = ((hi - lo) / width).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..bins).map(|b| lo + b as f64 * width).collect();
    edges.push(hi.max(lo + bins as f64 * width));
    let labels = values
        .iter()
        .map(|&v| {
            let b = ((v - lo) / width).floor();
            if b < 0.0 {
                0
            } else {
                (b as usize).min(bins - 1)
            }
        })
        .collect();
    Ok(BinnedVector { labels, edges })
}

/// Min-max scaling to `[0, 1]` with 1 always the best score.
///
/// A constant input maps to 0.5 everywhere.
pub fn scale_unit(scores: &[f64], orientation: Orientation) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return invalid("scale_unit requires finite scores");
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![0.5; scores.len()]);
    }
    Ok(scores
        .iter()
        .map(|&v| {
            let s = (v - lo) / (hi - lo);
            match orientation {
                Orientation::MaxBetter => s,
                Orientation::MinBetter => 1.0 - s,
            }
        })
        .collect())
}

/// Scales the finite scores and reports the indices of non-finite ones,
/// which come back as `None`.
pub fn scale_unit_with_sentinels(
    scores: &[f64],
    orientation: Orientation,
) -> Result<(Vec<Option<f64>>, Vec<usize>)> {
    let finite: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    let excluded: Vec<usize> = (0..scores.len()).filter(|&i| !scores[i].is_finite()).collect();
    if finite.is_empty() {
        return Ok((vec![None; scores.len()], excluded));
    }
    let mut scaled = scale_unit(&finite, orientation)?.into_iter();
    let out = scores
        .iter()
        .map(|v| if v.is_finite() { scaled.next() } else { None })
        .collect();
    Ok((out, excluded))
}
