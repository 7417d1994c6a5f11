//! Significance tests and distributional diagnostics for abnormal returns.

mod moments;
mod normality;
mod rank;
mod ttest;

pub use moments::{distribution_stats, quantile_sorted, DistributionStats};
pub use normality::{normality_test, NormalityResult};
pub use rank::{midranks, wilcoxon_rank_sum, wilcoxon_signed_rank, RankMethod, RankTestResult};
pub use ttest::{
    brown_warner_t, brown_warner_t_from_variances, cross_sectional_t, estimation_variance,
    estimation_variance_from_summary,
    DivisorMode, TTestResult,
};

use serde::Serialize;

/// Which tail convention a report uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Tail {
    /// One-sided in the direction of the observed sign.
    One,
    #[default]
    Two,
}

impl Tail {
    pub fn label(self) -> &'static str {
        match self {
            Tail::One => "one-tail",
            Tail::Two => "two-tail",
        }
    }

    pub fn p_value(self, t: &TTestResult) -> f64 {
        match self {
            Tail::One => t.p_one_tail.min(1.0 - t.p_one_tail),
            Tail::Two => t.p_two_tail,
        }
    }
}

impl std::str::FromStr for Tail {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "one" | "1" => Ok(Tail::One),
            "two" | "2" => Ok(Tail::Two),
            _ => Err(crate::Error::InvalidConfig(format!("unknown tail `{s}`"))),
        }
    }
}

/// `*` p<0.10, `**` p<0.05, `***` p<0.01.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.005), "***");
        assert_eq!(significance_stars(0.01), "**");
        assert_eq!(significance_stars(0.049), "**");
        assert_eq!(significance_stars(0.05), "*");
        assert_eq!(significance_stars(0.0999), "*");
        assert_eq!(significance_stars(0.10), "");
        assert_eq!(significance_stars(f64::NAN), "");
    }
}
