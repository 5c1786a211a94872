use serde::{Deserialize, Serialize};

use super::encode::{ColumnOrigin, EncodedMatrix};
use crate::error::{invalid, Error, Result};

/// Bounds of the exponent search.
pub const LAMBDA_RANGE: (f64, f64) = (-5.0, 5.0);
const TOLERANCE: f64 = 1e-4;

/// Yeo-Johnson power map.
pub fn yeo_johnson_apply(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda == 0.0 {
            x.ln_1p()
        } else {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if lambda == 2.0 {
        -(-x).ln_1p()
    } else {
        -((1.0 - x).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Profile log-likelihood of `lambda`, up to an additive constant.
pub fn yeo_johnson_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let t: Vec<f64> = column.iter().map(|&x| yeo_johnson_apply(x, lambda)).collect();
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !var.is_finite() || var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let jac: f64 = column.iter().map(|&x| x.signum() * x.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jac
}

/// Maximum-likelihood exponent by golden-section search.
pub fn yeo_johnson_fit(column: &[f64]) -> Result<f64> {
    if column.len() < 3 {
        return invalid(format!("need at least 3 values, got {}", column.len()));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return invalid("non-finite value in column");
    }
    let first = column[0];
    if column.iter().all(|&v| v == first) {
        return Err(Error::DegenerateColumn);
    }
    let f = |l: f64| yeo_johnson_log_likelihood(column, l);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = LAMBDA_RANGE;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Fitted transform of one numeric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericTransform {
    pub source: String,
    pub lambda: f64,
    pub mean: f64,
    pub sd: f64,
}

impl NumericTransform {
    pub fn apply(&self, x: f64) -> f64 {
        (yeo_johnson_apply(x, self.lambda) - self.mean) / self.sd
    }
}

/// Replayable numeric transforms, plus the columns dropped as degenerate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub columns: Vec<NumericTransform>,
    pub dropped: Vec<String>,
}

impl TransformParams {
    pub fn get(&self, source: &str) -> Option<&NumericTransform> {
        self.columns.iter().find(|t| t.source == source)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fits and applies a power transform plus standardization to every numeric
/// column. Degenerate columns are dropped and recorded.
pub fn fit_transform(enc: &EncodedMatrix) -> Result<(EncodedMatrix, TransformParams)> {
    let mut params = TransformParams::default();
    let mut out = enc.values.clone();
    let mut keep = Vec::with_capacity(enc.values.cols());
    for j in 0..enc.values.cols() {
        let ColumnOrigin::Numeric { source } = &enc.column_map[j] else {
            keep.push(j);
            continue;
        };
        let column = enc.values.column(j);
        let lambda = match yeo_johnson_fit(&column) {
            Ok(l) => l,
            Err(Error::DegenerateColumn) => {
                params.dropped.push(source.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let t: Vec<f64> = column.iter().map(|&x| yeo_johnson_apply(x, lambda)).collect();
        let (mean, sd) = mean_sd(&t);
        if !(sd > 0.0 && sd.is_finite()) {
            params.dropped.push(source.clone());
            continue;
        }
        let tr = NumericTransform {
            source: source.clone(),
            lambda,
            mean,
            sd,
        };
        for (i, v) in column.iter().enumerate() {
            out.set(i, j, tr.apply(*v));
        }
        params.columns.push(tr);
        keep.push(j);
    }
    let fitted = EncodedMatrix {
        values: out,
        ..enc.clone()
    };
    Ok((fitted.keep_columns(&keep), params))
}

/// Replays fitted transforms on another matrix. Numeric columns without a
/// transform are dropped.
pub fn apply_transform(enc: &EncodedMatrix, params: &TransformParams) -> EncodedMatrix {
    let mut out = enc.values.clone();
    let mut keep = Vec::new();
    for j in 0..enc.values.cols() {
        match &enc.column_map[j] {
            ColumnOrigin::Numeric { source } => {
                if let Some(tr) = params.get(source) {
                    for i in 0..out.rows() {
                        out.set(i, j, tr.apply(enc.values.get(i, j)));
                    }
                    keep.push(j);
                }
            }
            ColumnOrigin::Level { .. } => keep.push(j),
        }
    }
    EncodedMatrix {
        values: out,
        ..enc.clone()
    }
    .keep_columns(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnData, ColumnSchema, DataTable};
    use crate::prep::one_hot_encode;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(n: usize, seed: u64) -> Vec<f64> {
        let mut r = crate::rng::rng(seed);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    // Oracle: dense grid over the interval followed by a fine local grid.
    fn grid_argmax(column: &[f64]) -> f64 {
        let best = |lo: f64, hi: f64, steps: usize| {
            (0..=steps)
                .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
                .map(|l| (l, yeo_johnson_log_likelihood(column, l)))
                .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
                .0
        };
        let coarse = best(-5.0, 5.0, 1000);
        best(coarse - 0.01, coarse + 0.01, 400)
    }

    fn skew(v: &[f64]) -> f64 {
        let (m, s) = mean_sd(v);
        v.iter().map(|x| ((x - m) / s).powi(3)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn piecewise_values() {
        assert_eq!(yeo_johnson_apply(5.0, 1.0), 5.0);
        assert!((yeo_johnson_apply(std::f64::consts::E - 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((yeo_johnson_apply(-0.5, 2.0) + 1.5f64.ln()).abs() < 1e-15);
        assert!((yeo_johnson_apply(-0.5, 2.0) + 0.4055).abs() < 1e-4);
    }

    #[test]
    fn normal_sample_near_identity() {
        let x = normal(1000, 11);
        let l = yeo_johnson_fit(&x).unwrap();
        assert!((0.8..=1.2).contains(&l), "{l}");
        assert!((l - grid_argmax(&x)).abs() < 1e-3);
    }

    #[test]
    fn lognormal_sample_compressed() {
        let x: Vec<f64> = normal(1000, 12).into_iter().map(f64::exp).collect();
        let l = yeo_johnson_fit(&x).unwrap();
        assert!(l < 0.5, "{l}");
        assert!((l - grid_argmax(&x)).abs() < 1e-3);
        let t: Vec<f64> = x.iter().map(|&v| yeo_johnson_apply(v, l)).collect();
        assert!(skew(&t).abs() < skew(&x).abs());
    }

    #[test]
    fn constant_column_is_degenerate() {
        assert!(matches!(yeo_johnson_fit(&[2.0; 10]), Err(Error::DegenerateColumn)));
        assert!(yeo_johnson_fit(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn fit_transform_standardizes_and_drops() {
        let x: Vec<f64> = normal(500, 3).into_iter().map(|v| v.exp() * 4.0).collect();
        let t = DataTable::new(
            vec![
                ColumnSchema::numeric("x"),
                ColumnSchema::numeric("flat"),
                ColumnSchema::categorical("c"),
            ],
            vec![
                ColumnData::Numeric(x.clone()),
                ColumnData::Numeric(vec![1.0; 500]),
                ColumnData::Categorical((0..500).map(|i| format!("l{}", i % 3)).collect()),
            ],
            None,
        )
        .unwrap();
        let enc = one_hot_encode(&t).unwrap();
        let (fitted, params) = fit_transform(&enc).unwrap();
        assert_eq!(params.dropped, vec!["flat".to_string()]);
        assert_eq!(fitted.numeric_block, vec![0]);
        assert_eq!(fitted.categorical_block, vec![1, 2, 3]);
        let (m, s) = mean_sd(&fitted.values.column(0));
        assert!(m.abs() < 1e-9);
        assert!((s * s - 1.0).abs() < 1e-6);

        let json = params.to_json().unwrap();
        let back = TransformParams::from_json(&json).unwrap();
        let replay = apply_transform(&enc, &back);
        assert_eq!(replay, fitted);
    }

    proptest! {
        #[test]
        fn monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, l in -5.0f64..5.0) {
            prop_assume!(a < b);
            prop_assert!(yeo_johnson_apply(a, l) < yeo_johnson_apply(b, l));
        }

        #[test]
        fn exact_exponents_monotone(a in -50.0f64..50.0, d in 1e-3f64..10.0,
                                    l in prop::sample::select(vec![-5.0, 0.0, 2.0, 5.0])) {
            prop_assert!(yeo_johnson_apply(a, l) < yeo_johnson_apply(a + d, l));
        }

        #[test]
        fn unit_exponent_is_identity(x in -1e3f64..1e3) {
            prop_assert!((yeo_johnson_apply(x, 1.0) - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
