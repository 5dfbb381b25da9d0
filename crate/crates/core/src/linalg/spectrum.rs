use super::{LinalgError, Result};

/// Each singular value divided by the sum of all of them.
pub fn normalized_singular_values(sigma: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = sigma.iter().sum();
    if !(total > 0.0) {
        return Err(LinalgError::DegenerateSpectrum);
    }
    Ok(sigma.iter().map(|s| s / total).collect())
}

/// Running sum of the normalized singular values, in percent.
pub fn cumulative_energy(sigma: &[f64]) -> Result<Vec<f64>> {
    let normalized = normalized_singular_values(sigma)?;
    let mut acc = 0.0;
    let mut out: Vec<f64> = normalized
        .iter()
        .map(|s| {
            acc += s;
            acc.min(1.0) * 100.0
        })
        .collect();
    // the running sum can land a few ulps off 100
    if let Some(last) = out.last_mut() {
        *last = 100.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        assert_eq!(normalized_singular_values(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(normalized_singular_values(&[1.0; 4]).unwrap(), vec![0.25; 4]);
        assert_eq!(cumulative_energy(&[3.0, 1.0]).unwrap(), vec![75.0, 100.0]);
        assert_eq!(cumulative_energy(&[1.0]).unwrap(), vec![100.0]);
    }

    #[test]
    fn degenerate_spectrum() {
        assert_eq!(normalized_singular_values(&[0.0, 0.0]), Err(LinalgError::DegenerateSpectrum));
        assert_eq!(cumulative_energy(&[]), Err(LinalgError::DegenerateSpectrum));
    }

    proptest! {
        #[test]
        fn normalized_sums_to_one(sigma in prop::collection::vec(0.0f64..1e3, 1..60)) {
            prop_assume!(sigma.iter().any(|&s| s > 1e-6));
            let n = normalized_singular_values(&sigma).unwrap();
            prop_assert!((n.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let c = cumulative_energy(&sigma).unwrap();
            prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((c.last().unwrap() - 100.0).abs() <= 1e-9);
        }
    }
}
