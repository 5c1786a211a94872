use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

fn check(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("distribution entries must be finite and >= 0".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

fn kl_unchecked(u: &[f64], m: &[f64]) -> f64 {
    u.iter()
        .zip(m)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a * (a / b).log2() } else { f64::INFINITY })
        .sum()
}

/// Kullback–Leibler divergence `D(u || m)` in bits.
pub fn kl_divergence(u: &[f64], m: &[f64]) -> Result<f64> {
    if u.len() != m.len() {
        return Err(Error::LengthMismatch(u.len(), m.len()));
    }
    check(u)?;
    check(m)?;
    Ok(kl_unchecked(u, m))
}

/// Jensen–Shannon distance (square root of the base-2 divergence), in `[0, 1]`.
pub fn jsd(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    check(u)?;
    check(v)?;
    let m: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let div = 0.5 * (kl_unchecked(u, &m) + kl_unchecked(v, &m));
    Ok(div.max(0.0).sqrt().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(jsd(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalised_rejected() {
        assert!(matches!(jsd(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotNormalized(_))));
        assert!(jsd(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kl_with_missing_support_is_infinite() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
    }

    fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_triangle((u, v, w) in (dist(5), dist(5), dist(5))) {
            let uv = jsd(&u, &v).unwrap();
            prop_assert!((uv - jsd(&v, &u).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&uv));
            let uw = jsd(&u, &w).unwrap();
            let wv = jsd(&w, &v).unwrap();
            prop_assert!(uv <= uw + wv + 1e-12);
        }
    }
}
