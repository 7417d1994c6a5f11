use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DealStatus {
    Completed,
    Pending,
    Withdrawn,
}

fn default_true() -> bool {
    true
}

/// One M&A transaction. Percentages are in `[0, 100]`, money in millions of
/// USD. Field names double as `deals.csv` headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DealRecord {
    pub deal_id: String,
    pub announcement_date: NaiveDate,
    pub effective_date: Option<NaiveDate>,
    pub status: DealStatus,
    /// Instrument id of the acquirer's stock in `prices.csv`.
    pub acquirer_id: String,
    pub acquirer_nation: String,
    pub acquirer_public: bool,
    pub acquirer_sic: String,
    pub acquirer_market_cap: Option<f64>,
    pub target_nation: String,
    pub target_public: bool,
    pub target_sic: String,
    pub pct_owned_before: Option<f64>,
    pub pct_acquired: Option<f64>,
    pub pct_owned_after: Option<f64>,
    pub transaction_value: Option<f64>,
    /// No confounding event within 15 trading days either side.
    #[serde(default = "default_true")]
    pub clean_event: bool,
}

/// Tolerance between `after - before` and the reported acquired stake.
const OWNERSHIP_TOLERANCE: f64 = 0.5;

impl DealRecord {
    pub const COLUMNS: [&'static str; 17] = [
        "deal_id",
        "announcement_date",
        "effective_date",
        "status",
        "acquirer_id",
        "acquirer_nation",
        "acquirer_public",
        "acquirer_sic",
        "acquirer_market_cap",
        "target_nation",
        "target_public",
        "target_sic",
        "pct_owned_before",
        "pct_acquired",
        "pct_owned_after",
        "transaction_value",
        "clean_event",
    ];

    /// Stake held before the deal; a missing value means none.
    pub fn owned_before(&self) -> f64 {
        self.pct_owned_before.unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| {
            Err(Error::InvalidDeal {
                deal_id: self.deal_id.clone(),
                reason,
            })
        };
        let in_range = |v: f64| (0.0..=100.0).contains(&v);
        for (name, v) in [
            ("pct_owned_before", self.pct_owned_before),
            ("pct_acquired", self.pct_acquired),
            ("pct_owned_after", self.pct_owned_after),
        ] {
            if let Some(v) = v {
                if !in_range(v) {
                    return invalid(format!("{name} = {v} outside [0, 100]"));
                }
            }
        }
        if let (Some(before), Some(after)) = (self.pct_owned_before, self.pct_owned_after) {
            if before > after {
                return invalid(format!("ownership falls from {before} to {after}"));
            }
            if let Some(acquired) = self.pct_acquired {
                if ((after - before) - acquired).abs() > OWNERSHIP_TOLERANCE {
                    return invalid(format!(
                        "acquired {acquired} inconsistent with {before} -> {after}"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn deal(id: &str) -> DealRecord {
        DealRecord {
            deal_id: id.to_string(),
            announcement_date: NaiveDate::from_ymd_opt(2010, 6, 1).unwrap(),
            effective_date: NaiveDate::from_ymd_opt(2010, 9, 1),
            status: DealStatus::Completed,
            acquirer_id: format!("ACQ-{id}"),
            acquirer_nation: "Japan".into(),
            acquirer_public: true,
            acquirer_sic: "2011".into(),
            acquirer_market_cap: Some(1000.0),
            target_nation: "Vietnam".into(),
            target_public: false,
            target_sic: "2015".into(),
            pct_owned_before: Some(0.0),
            pct_acquired: Some(60.0),
            pct_owned_after: Some(60.0),
            transaction_value: Some(50.0),
            clean_event: true,
        }
    }
}
