use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityResult {
    /// Omnibus `K^2 = z_skew^2 + z_kurt^2`.
    pub statistic: f64,
    /// Upper tail of chi-squared with 2 dof.
    pub p_value: f64,
    pub z_skewness: f64,
    pub z_kurtosis: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n: usize,
}

/// D'Agostino–Pearson omnibus test: the sample skewness goes through
/// D'Agostino's Johnson-SU transform, the sample kurtosis through the
/// Anscombe–Glynn transform, and the sum of squared z scores is referred to
/// chi-squared with two degrees of freedom.
pub fn normality_test(values: &[f64]) -> Result<NormalityResult> {
    let n = values.len();
    if n < 8 {
        return Err(Error::SampleTooSmall { needed: 8, got: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);

    // Skewness.
    let y = skewness * ((nf + 1.0) * (nf + 3.0) / (6.0 * (nf - 2.0))).sqrt();
    let beta2 = 3.0 * (nf * nf + 27.0 * nf - 70.0) * (nf + 1.0) * (nf + 3.0)
        / ((nf - 2.0) * (nf + 5.0) * (nf + 7.0) * (nf + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let ya = y / alpha;
    let z_skewness = delta * (ya + (ya * ya + 1.0).sqrt()).ln();

    // Kurtosis.
    let expected = 3.0 * (nf - 1.0) / (nf + 1.0);
    let variance = 24.0 * nf * (nf - 2.0) * (nf - 3.0)
        / ((nf + 1.0).powi(2) * (nf + 3.0) * (nf + 5.0));
    let x = (kurtosis - expected) / variance.sqrt();
    let sqrt_beta1 = 6.0 * (nf * nf - 5.0 * nf + 2.0) / ((nf + 7.0) * (nf + 9.0))
        * (6.0 * (nf + 3.0) * (nf + 5.0) / (nf * (nf - 2.0) * (nf - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term = (1.0 - 2.0 / a) / (1.0 + x * (2.0 / (a - 4.0)).sqrt());
    let z_kurtosis = ((1.0 - 2.0 / (9.0 * a)) - term.cbrt()) / (2.0 / (9.0 * a)).sqrt();

    let statistic = z_skewness * z_skewness + z_kurtosis * z_kurtosis;
    Ok(NormalityResult {
        statistic,
        p_value: (-statistic / 2.0).exp(),
        z_skewness,
        z_kurtosis,
        skewness,
        kurtosis,
        n,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    // Reference values from scipy.stats.{skewtest, kurtosistest, normaltest}.
    #[test]
    fn matches_reference_implementation() {
        let a: Vec<f64> = (0..30).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let r = normality_test(&a).unwrap();
        assert_abs_diff_eq!(r.z_skewness, 0.007555223488298926, epsilon = 1e-10);
        assert_abs_diff_eq!(r.z_kurtosis, -2.347174163394892, epsilon = 1e-10);
        assert_abs_diff_eq!(r.statistic, 5.50928363471047, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, 0.06363180739650834, epsilon = 1e-10);

        let b: Vec<f64> = (0..40).map(|i| (((i * 53) % 97) as f64 / 25.0).exp()).collect();
        let r = normality_test(&b).unwrap();
        assert_abs_diff_eq!(r.z_skewness, 3.1900444952382214, epsilon = 1e-10);
        assert_abs_diff_eq!(r.z_kurtosis, 1.318186331049754, epsilon = 1e-10);
        assert_abs_diff_eq!(r.p_value, 0.0025876645130655704, epsilon = 1e-10);

        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.5];
        let r = normality_test(&c).unwrap();
        assert_abs_diff_eq!(r.z_skewness, 0.608730617837963, epsilon = 1e-10);
        assert_abs_diff_eq!(r.z_kurtosis, -0.04297912983519091, epsilon = 1e-10);
        assert_abs_diff_eq!(r.p_value, 0.8301074860197915, epsilon = 1e-10);
    }

    #[test]
    fn errors() {
        assert_eq!(
            normality_test(&[1.0; 7]),
            Err(Error::SampleTooSmall { needed: 8, got: 7 })
        );
        assert_eq!(normality_test(&[1.0; 8]), Err(Error::ZeroVariance));
    }

    #[test]
    fn normal_samples_pass() {
        let mut passes = 0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
            if normality_test(&x).unwrap().p_value > 0.01 {
                passes += 1;
            }
        }
        // Expected ~99%; binomial sd over 200 seeds is ~0.7%.
        assert!(passes >= 194, "{passes}/200");
    }

    #[test]
    fn lognormal_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..500)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.exp()
            })
            .collect();
        assert!(normality_test(&x).unwrap().p_value < 0.001);
    }

    proptest! {
        #[test]
        fn location_scale_invariant(
            values in prop::collection::vec(-5.0f64..5.0, 8..80),
            a in 0.01f64..100.0,
            b in -100.0f64..100.0,
        ) {
            let base = normality_test(&values);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let moved: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            let r = normality_test(&moved).unwrap();
            prop_assert!((r.p_value - base.p_value).abs() < 1e-7);
        }
    }
}
