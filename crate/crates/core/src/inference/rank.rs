use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample with an exact signed-rank distribution.
const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest combined size with an exact rank-sum distribution.
const RANK_SUM_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankMethod {
    SignedRank,
    RankSum,
}

impl RankMethod {
    pub fn label(self) -> &'static str {
        match self {
            RankMethod::SignedRank => "wilcoxon signed-rank",
            RankMethod::RankSum => "wilcoxon rank-sum (mann-whitney)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankTestResult {
    /// `W+` for the signed-rank test, `U_a` for the rank-sum test.
    pub statistic: f64,
    /// Two-sided p value.
    pub p_value: f64,
    /// `P(statistic >= observed)` under the null.
    pub p_greater: f64,
    /// `P(statistic <= observed)` under the null.
    pub p_less: f64,
    pub method: RankMethod,
    pub exact: bool,
    /// Observations used (non-zero differences, or combined sample size).
    pub n: usize,
}

impl RankTestResult {
    /// One-sided p value in the direction of the observed statistic.
    pub fn p_one_tail(&self) -> f64 {
        self.p_greater.min(self.p_less)
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of tie groups in `values`.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    sizes
}

fn two_sided(p_greater: f64, p_less: f64) -> f64 {
    (2.0 * p_greater.min(p_less)).min(1.0)
}

fn normal_tails(statistic: f64, mean: f64, variance: f64) -> (f64, f64) {
    if variance <= 0.0 {
        return (1.0, 1.0);
    }
    let sd = variance.sqrt();
    let z = Normal::standard();
    let p_greater = z.sf((statistic - mean - 0.5) / sd);
    let p_less = z.cdf((statistic - mean + 0.5) / sd);
    (p_greater.min(1.0), p_less.min(1.0))
}

/// Wilcoxon signed-rank test of `values` against a hypothesized median.
///
/// Zero differences are dropped. Up to 25 remaining observations the null
/// distribution of `W+` is exact: every one of the `2^n` sign assignments
/// over the (mid)ranks is counted, via a subset-sum recursion on doubled
/// ranks. Larger samples use the tie-corrected normal approximation with a
/// continuity correction.
pub fn wilcoxon_signed_rank(values: &[f64], hypothesized_median: f64) -> Result<RankTestResult> {
    let diffs: Vec<f64> = values
        .iter()
        .map(|v| v - hypothesized_median)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let (p_greater, p_less, exact) = if n <= SIGNED_RANK_EXACT_MAX {
        // Midranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut counts = vec![0u64; total + 1];
        counts[0] = 1;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let observed = (2.0 * w_plus).round() as usize;
        let all = (1u64 << n) as f64;
        let ge: u64 = counts[observed..].iter().sum();
        let le: u64 = counts[..=observed].iter().sum();
        (ge as f64 / all, le as f64 / all, true)
    } else {
        let nf = n as f64;
        let tie_term: f64 = tie_sizes(&abs)
            .iter()
            .map(|&t| (t * t * t - t) as f64)
            .sum::<f64>()
            / 48.0;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let (g, l) = normal_tails(w_plus, mean, var);
        (g, l, false)
    };

    Ok(RankTestResult {
        statistic: w_plus,
        p_value: two_sided(p_greater, p_less),
        p_greater,
        p_less,
        method: RankMethod::SignedRank,
        exact,
        n,
    })
}

/// Wilcoxon rank-sum (Mann–Whitney) test of `sample_a` against `sample_b`.
///
/// The statistic is `U_a = R_a - n_a (n_a + 1) / 2` with midranks for ties.
/// Up to 20 combined observations the null distribution is exact over all
/// `C(n, n_a)` label assignments; beyond that the tie-corrected normal
/// approximation with continuity correction is used.
pub fn wilcoxon_rank_sum(sample_a: &[f64], sample_b: &[f64]) -> Result<RankTestResult> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (na, nb) = (sample_a.len(), sample_b.len());
    let n = na + nb;
    let combined: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let ranks = midranks(&combined);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let offset = (na * (na + 1)) as f64 / 2.0;
    let u_a = rank_sum_a - offset;

    let (p_greater, p_less, exact) = if n <= RANK_SUM_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        // ways[k][s]: subsets of size k with doubled rank sum s.
        let mut ways = vec![vec![0u64; total + 1]; na + 1];
        ways[0][0] = 1;
        for &r in &doubled {
            for k in (1..=na).rev() {
                for s in (r..=total).rev() {
                    let add = ways[k - 1][s - r];
                    if add > 0 {
                        ways[k][s] += add;
                    }
                }
            }
        }
        let observed = (2.0 * rank_sum_a).round() as usize;
        let all: u64 = ways[na].iter().sum();
        let ge: u64 = ways[na][observed..].iter().sum();
        let le: u64 = ways[na][..=observed].iter().sum();
        (ge as f64 / all as f64, le as f64 / all as f64, true)
    } else {
        let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
        let tie: f64 = tie_sizes(&combined)
            .iter()
            .map(|&t| (t * t * t - t) as f64)
            .sum();
        let mean = naf * nbf / 2.0;
        let var = naf * nbf / 12.0 * ((nf + 1.0) - tie / (nf * (nf - 1.0)));
        let (g, l) = normal_tails(u_a, mean, var);
        (g, l, false)
    };

    Ok(RankTestResult {
        statistic: u_a,
        p_value: two_sided(p_greater, p_less),
        p_greater,
        p_less,
        method: RankMethod::RankSum,
        exact,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midrank_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 1.0, 2.0]), vec![4.0, 1.5, 1.5, 3.0]);
        assert_eq!(midranks(&[]), Vec::<f64>::new());
    }

    #[test]
    fn signed_rank_symmetric() {
        let r = wilcoxon_signed_rank(&[-3.0, -1.0, 1.0, 3.0], 0.0).unwrap();
        assert_eq!(r.statistic, 5.0);
        assert_eq!(r.p_value, 1.0);
        assert!(r.exact);
    }

    #[test]
    fn signed_rank_all_positive() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_abs_diff_eq!(r.p_greater, 1.0 / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_one_tail(), 0.03125, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_value, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn signed_rank_single() {
        let r = wilcoxon_signed_rank(&[5.0], 0.0).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_abs_diff_eq!(r.p_greater, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn signed_rank_drops_zeros() {
        let r = wilcoxon_signed_rank(&[2.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(wilcoxon_signed_rank(&[1.0, 1.0], 1.0), Err(Error::EmptySample));
    }

    #[test]
    fn signed_rank_large_sample_uses_normal() {
        let values: Vec<f64> = (1..=40).map(|i| i as f64 - 10.5).collect();
        let r = wilcoxon_signed_rank(&values, 0.0).unwrap();
        assert!(!r.exact);
        assert!(r.p_greater < 0.001);
        // Exact-boundary continuity: n = 25 is still exact.
        let r = wilcoxon_signed_rank(&values[..25], 0.0).unwrap();
        assert!(r.exact);
    }

    #[test]
    fn rank_sum_examples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_less, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_one_tail(), 1.0 / 6.0, epsilon = 1e-15);

        let r = wilcoxon_rank_sum(&[5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 3.0);
        assert_abs_diff_eq!(r.p_greater, 0.25, epsilon = 1e-15);

        let a = [0.1, 0.4, -0.2, 0.3];
        let r = wilcoxon_rank_sum(&a, &a).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);

        assert_eq!(wilcoxon_rank_sum(&[], &[1.0]), Err(Error::EmptySample));
    }

    #[test]
    fn rank_sum_normal_identical() {
        let a: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let r = wilcoxon_rank_sum(&a, &a).unwrap();
        assert!(!r.exact);
        assert_abs_diff_eq!(r.statistic, 112.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }
}
