//! Least-squares power-law fits in log-log coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Empirical exponent γ in E ≈ C ε^γ.
    pub slope: f64,
    /// log C.
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: Vec<f64>,
}

/// Fits log E = intercept + slope · log ε through (ε, E) samples.
pub fn fit_rate(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    for &(epsilon, value) in samples {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveSample { epsilon, value });
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidEpsilon(epsilon.to_string()));
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct epsilon values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit { slope, intercept, r_squared, points_used: samples.iter().map(|s| s.0).collect() })
}

/// Synthetic samples E = ε^γ (1 + noise·ξ) with ξ uniform in [−1, 1], fixed by `seed`.
pub fn noisy_power_law(seed: u64, epsilons: &[f64], gamma: f64, noise: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    epsilons
        .iter()
        .map(|&e| (e, e.powf(gamma) * (1.0 + noise * rng.random_range(-1.0..=1.0))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_square_law() {
        let s: Vec<(f64, f64)> = [5.0, 10.0, 20.0].iter().map(|k| (1.0 / k, 1.0 / (k * k))).collect();
        let f = fit_rate(&s).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_power_with_constant() {
        let s: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0, 32.0].iter().map(|k| (1.0 / k, 3.0 * (1.0 / k).powf(1.5))).collect();
        let f = fit_rate(&s).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejections() {
        assert!(matches!(fit_rate(&[(0.5, 1.0), (0.25, 0.5)]), Err(Error::TooFewSamples(2))));
        assert!(matches!(
            fit_rate(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)]),
            Err(Error::NonPositiveSample { .. })
        ));
    }

    #[test]
    fn five_percent_noise_keeps_slope() {
        let eps: Vec<f64> = [5.0, 8.0, 10.0, 16.0, 20.0, 32.0, 40.0].iter().map(|k| 1.0 / k).collect();
        for seed in 0..20 {
            let f = fit_rate(&noisy_power_law(seed, &eps, 1.0, 0.05)).unwrap();
            assert!((f.slope - 1.0).abs() < 0.1, "seed {seed}: {}", f.slope);
        }
    }

    proptest! {
        #[test]
        fn scaling_changes_intercept_only(gamma in 0.1f64..3.0, c in 0.01f64..100.0) {
            let s: Vec<(f64, f64)> = [3.0f64, 7.0, 11.0, 19.0].iter().map(|k| (1.0 / k, c * (1.0 / k).powf(gamma))).collect();
            let f = fit_rate(&s).unwrap();
            prop_assert!((f.slope - gamma).abs() < 1e-10);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
            prop_assert!(f.r_squared <= 1.0 && f.r_squared >= 0.0);
        }
    }
}
