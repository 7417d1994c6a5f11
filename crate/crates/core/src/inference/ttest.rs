use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::event::MarketModelFit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub dof: usize,
    /// Upper tail, `P(T >= t)`.
    pub p_one_tail: f64,
    pub p_two_tail: f64,
    pub mean: f64,
    pub std_error: f64,
}

/// Divisors used for the estimation-period residual variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DivisorMode {
    /// `n - 1` for the residual mean and `n - 2` for the variance, with `n`
    /// the actual number of estimation days.
    #[default]
    DegreesOfFreedom,
    /// The fixed 131 and 130 of a 132-day window regardless of `n`.
    StrictLiteral,
}

fn upper_tail(statistic: f64, dof: usize) -> f64 {
    if statistic.is_nan() {
        return f64::NAN;
    }
    if statistic == f64::INFINITY {
        return 0.0;
    }
    if statistic == f64::NEG_INFINITY {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof.max(1) as f64).expect("positive dof");
    dist.sf(statistic)
}

fn finish(mean: f64, std_error: f64, dof: usize) -> TTestResult {
    let statistic = if std_error > 0.0 {
        mean / std_error
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    };
    let p_one_tail = upper_tail(statistic, dof);
    TTestResult {
        statistic,
        dof,
        p_one_tail,
        p_two_tail: (2.0 * p_one_tail.min(1.0 - p_one_tail)).min(1.0),
        mean,
        std_error,
    }
}

/// Residual variance over the estimation window, recomputed from the stored
/// residuals under the chosen divisor convention.
pub fn estimation_variance(fit: &MarketModelFit, mode: DivisorMode) -> Result<f64> {
    let resid = &fit.est_residuals;
    if resid.is_empty() {
        return Err(Error::MissingResiduals);
    }
    let (mean_div, var_div) = match mode {
        DivisorMode::DegreesOfFreedom => {
            if resid.len() < 3 {
                return Err(Error::SampleTooSmall { needed: 3, got: resid.len() });
            }
            ((resid.len() - 1) as f64, (resid.len() - 2) as f64)
        }
        DivisorMode::StrictLiteral => (131.0, 130.0),
    };
    let mean = resid.iter().sum::<f64>() / mean_div;
    Ok(resid.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / var_div)
}

/// Estimation variance from a fit's stored `SSR / (n - 2)` when the
/// residuals themselves are unavailable.
pub fn estimation_variance_from_summary(residual_variance: f64, n_est: usize, mode: DivisorMode) -> f64 {
    match mode {
        DivisorMode::DegreesOfFreedom => residual_variance,
        DivisorMode::StrictLiteral => residual_variance * n_est.saturating_sub(2) as f64 / 130.0,
    }
}

/// Brown–Warner test from per-deal CARs and estimation variances.
///
/// `t = mean(CAR) / ((1/N) * sqrt(sum_i L * s_i^2))`, referred to a Student
/// t with `dof` degrees of freedom.
pub fn brown_warner_t_from_variances(
    cars: &[f64],
    variances: &[f64],
    window_len: usize,
    dof: usize,
) -> Result<TTestResult> {
    if cars.is_empty() {
        return Err(Error::EmptySample);
    }
    if cars.len() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: cars.len() });
    }
    if variances.len() != cars.len() {
        return Err(Error::MissingResiduals);
    }
    let n = cars.len() as f64;
    let mean = cars.iter().sum::<f64>() / n;
    let pooled: f64 = variances.iter().map(|s2| window_len as f64 * s2).sum();
    Ok(finish(mean, pooled.sqrt() / n, dof))
}

/// Brown–Warner test with variances taken from each deal's market-model
/// residuals. Degrees of freedom are the smallest per-deal variance divisor.
pub fn brown_warner_t(
    cars: &[f64],
    fits: &[&MarketModelFit],
    window_len: usize,
    mode: DivisorMode,
) -> Result<TTestResult> {
    if cars.is_empty() || fits.is_empty() {
        return Err(Error::EmptySample);
    }
    if fits.len() != cars.len() {
        return Err(Error::MissingResiduals);
    }
    let variances = fits
        .iter()
        .map(|f| estimation_variance(f, mode))
        .collect::<Result<Vec<_>>>()?;
    let dof = match mode {
        DivisorMode::DegreesOfFreedom => fits
            .iter()
            .map(|f| f.est_residuals.len().saturating_sub(2))
            .min()
            .unwrap_or(1),
        DivisorMode::StrictLiteral => 130,
    };
    brown_warner_t_from_variances(cars, &variances, window_len, dof)
}

/// One-sample t of the mean against zero.
///
/// A sample with zero spread yields an infinite statistic when its mean is
/// non-zero and a zero statistic otherwise.
pub fn cross_sectional_t(values: &[f64]) -> Result<TTestResult> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.len() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: 1 });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(finish(mean, (var / n).sqrt(), values.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fit_with(residuals: Vec<f64>) -> MarketModelFit {
        MarketModelFit {
            alpha: 0.0,
            beta: 1.0,
            alpha_se: 0.0,
            beta_se: 0.0,
            est_offsets: vec![],
            n_est: residuals.len(),
            residual_variance: 0.0,
            est_residuals: residuals,
        }
    }

    #[test]
    fn bw_zero_ars() {
        let t = brown_warner_t_from_variances(&[0.0, 0.0, 0.0], &[1e-4, 2e-4, 3e-4], 2, 130).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_abs_diff_eq!(t.p_two_tail, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bw_hand_example() {
        let t = brown_warner_t_from_variances(&[0.02, 0.04], &[1e-4, 1e-4], 1, 130).unwrap();
        assert_abs_diff_eq!(t.mean, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(t.std_error, 0.5 * 0.0002f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.std_error, 0.007071, epsilon = 1e-6);
        assert_abs_diff_eq!(t.statistic, 4.243, epsilon = 1e-3);
    }

    #[test]
    fn bw_scale_invariance() {
        let resid = vec![0.01, -0.02, 0.015, -0.005, 0.0];
        let fits = [fit_with(resid.clone()), fit_with(resid.iter().rev().cloned().collect())];
        let doubled: Vec<MarketModelFit> = fits
            .iter()
            .map(|f| fit_with(f.est_residuals.iter().map(|e| 2.0 * e).collect()))
            .collect();
        let a = brown_warner_t(&[0.01, 0.03], &[&fits[0], &fits[1]], 3, DivisorMode::default()).unwrap();
        let b = brown_warner_t(&[0.02, 0.06], &[&doubled[0], &doubled[1]], 3, DivisorMode::default())
            .unwrap();
        assert_abs_diff_eq!(a.statistic, b.statistic, epsilon = 1e-12);
    }

    #[test]
    fn bw_errors() {
        assert_eq!(brown_warner_t(&[], &[], 1, DivisorMode::default()), Err(Error::EmptySample));
        let empty = fit_with(vec![]);
        assert_eq!(
            brown_warner_t(&[0.1, 0.2], &[&empty, &empty], 1, DivisorMode::default()),
            Err(Error::MissingResiduals)
        );
    }

    #[test]
    fn divisor_modes() {
        let resid: Vec<f64> = (0..132).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let f = fit_with(resid);
        let dof = estimation_variance(&f, DivisorMode::DegreesOfFreedom).unwrap();
        let lit = estimation_variance(&f, DivisorMode::StrictLiteral).unwrap();
        // Residuals sum to zero, so on a full 132-day window both agree.
        assert_abs_diff_eq!(dof, lit, epsilon = 1e-18);
        assert_abs_diff_eq!(dof, 132.0 * 1e-4 / 130.0, epsilon = 1e-18);

        let short = fit_with(vec![0.01, -0.01, 0.01, -0.01]);
        let dof = estimation_variance(&short, DivisorMode::DegreesOfFreedom).unwrap();
        let lit = estimation_variance(&short, DivisorMode::StrictLiteral).unwrap();
        assert_abs_diff_eq!(dof, 4e-4 / 2.0, epsilon = 1e-18);
        assert_abs_diff_eq!(lit, 4e-4 / 130.0, epsilon = 1e-18);
        let from_summary = |m| estimation_variance_from_summary(2e-4, 4, m);
        assert_abs_diff_eq!(from_summary(DivisorMode::DegreesOfFreedom), dof, epsilon = 1e-18);
        assert_abs_diff_eq!(from_summary(DivisorMode::StrictLiteral), lit, epsilon = 1e-18);
    }

    #[test]
    fn cross_sectional_examples() {
        let t = cross_sectional_t(&[-1.0, 1.0]).unwrap();
        assert_eq!(t.mean, 0.0);
        assert_eq!(t.statistic, 0.0);

        let t = cross_sectional_t(&[0.01, 0.02, 0.03]).unwrap();
        assert_abs_diff_eq!(t.mean, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(t.std_error, 0.005774, epsilon = 1e-6);
        assert_abs_diff_eq!(t.statistic, 3.4641, epsilon = 1e-4);
        assert_eq!(t.dof, 2);
        // Closed-form Student t tail for 2 dof: sf(t) = 1/2 - t / (2 sqrt(t^2 + 2)).
        let closed = 0.5 - t.statistic / (2.0 * (t.statistic.powi(2) + 2.0).sqrt());
        assert_abs_diff_eq!(t.p_one_tail, closed, epsilon = 1e-10);
    }

    #[test]
    fn one_tail_significance_at_table_scale() {
        // Mean 0.013 with se 0.004 over 50 deals clears the 1% one-tail bar.
        let t = finish(0.013, 0.004, 49);
        assert!(t.p_one_tail < 0.01);
    }

    #[test]
    fn zero_variance() {
        let t = cross_sectional_t(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(t.statistic, f64::INFINITY);
        assert_eq!(t.p_one_tail, 0.0);
        assert_eq!(cross_sectional_t(&[]), Err(Error::EmptySample));
        assert!(cross_sectional_t(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn t_rescaling(values in prop::collection::vec(-1.0f64..1.0, 3..40), k in 0.01f64..100.0) {
            let a = cross_sectional_t(&values).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
            let b = cross_sectional_t(&scaled).unwrap();
            prop_assume!(a.std_error > 1e-9);
            prop_assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.abs().max(1.0));
            prop_assert!((0.0..=1.0).contains(&b.p_one_tail));
            prop_assert!((b.p_two_tail - 2.0 * b.p_one_tail.min(1.0 - b.p_one_tail)).abs() < 1e-12);
        }
    }
}
