use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub top_quartile: f64,
    pub bottom_quartile: f64,
    /// Sample standard deviation (`n - 1` divisor), zero for a single value.
    pub std_dev: f64,
    /// `m3 / m2^1.5`; absent below three observations or with zero spread.
    pub skewness: Option<f64>,
    /// Non-excess `m4 / m2^2`; absent below four observations or with zero
    /// spread.
    pub kurtosis: Option<f64>,
}

/// Linear interpolation between closest ranks on sorted data
/// (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn distribution_stats(values: &[f64]) -> Result<DistributionStats> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len();
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
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread = m2 > 0.0;
    Ok(DistributionStats {
        n,
        mean,
        median: quantile_sorted(&sorted, 0.5),
        top_quartile: quantile_sorted(&sorted, 0.75),
        bottom_quartile: quantile_sorted(&sorted, 0.25),
        std_dev: if n > 1 { (ss / (nf - 1.0)).sqrt() } else { 0.0 },
        skewness: (n >= 3 && spread).then(|| m3 / m2.powf(1.5)),
        kurtosis: (n >= 4 && spread).then(|| m4 / (m2 * m2)),
    })
}
