use std::fmt;

use chrono::Datelike;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::screening::{is_vietnam, DealRecord, IncomeClass};

/// Seven-way industry grouping on the leading two SIC digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sector {
    AgricultureConsumer,
    BasicManufacturing,
    MachineryElectronics,
    UtilitiesTransportation,
    WholesaleRetail,
    FinancialServices,
    TourismMiscellaneous,
}

impl Sector {
    pub const ALL: [Sector; 7] = [
        Sector::AgricultureConsumer,
        Sector::BasicManufacturing,
        Sector::MachineryElectronics,
        Sector::UtilitiesTransportation,
        Sector::WholesaleRetail,
        Sector::FinancialServices,
        Sector::TourismMiscellaneous,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Sector::AgricultureConsumer => "Agriculture and consumer products",
            Sector::BasicManufacturing => "Basic manufacturing",
            Sector::MachineryElectronics => "Machinery and electronics",
            Sector::UtilitiesTransportation => "Utilities and transportation",
            Sector::WholesaleRetail => "Wholesale and retail trade",
            Sector::FinancialServices => "Financial services",
            Sector::TourismMiscellaneous => "Tourism and miscellaneous services",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn check_sic(code: &str) -> Result<&str> {
    let code = code.trim();
    if !(2..=4).contains(&code.len()) || !code.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::MalformedSic(code.to_string()));
    }
    Ok(code)
}

pub fn sic_sector(sic_code: &str) -> Result<Sector> {
    let code = check_sic(sic_code)?;
    let major: u32 = code[..2].parse().expect("checked digits");
    Ok(match major {
        0..=19 => Sector::AgricultureConsumer,
        20..=29 => Sector::BasicManufacturing,
        30..=39 => Sector::MachineryElectronics,
        40..=49 => Sector::UtilitiesTransportation,
        50..=59 => Sector::WholesaleRetail,
        60..=69 => Sector::FinancialServices,
        _ => Sector::TourismMiscellaneous,
    })
}

fn three_digit(code: &str) -> &str {
    &code[..code.len().min(3)]
}

/// Regressors of one deal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DealFeatures {
    pub deal_id: String,
    /// Post-deal stake of at least 50%.
    pub control: bool,
    pub dm_acquirer: bool,
    pub listed_target: bool,
    /// Acquirer and target differ in their three-digit SIC prefix.
    pub diversifying: bool,
    /// Post-deal stake of at least 95%.
    pub dummy95: bool,
    /// Announcement year minus 2005.
    pub time_trend: i32,
    pub log_mv: Option<f64>,
    pub log_post_ownership: Option<f64>,
    pub log_transaction_value: Option<f64>,
    pub acquirer_sector: Sector,
    pub target_sector: Sector,
}

/// Feature names accepted by [`DealFeatures::value`]. Interactions are
/// written `a*b`.
pub const FEATURE_NAMES: [&str; 10] = [
    "control",
    "dm",
    "listed",
    "diversifying",
    "non_diversified",
    "dummy95",
    "time_trend",
    "mv",
    "log_post_ownership",
    "log_transaction_value",
];

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl DealFeatures {
    /// Value of a named feature, `None` when the underlying datum is absent.
    pub fn value(&self, name: &str) -> Result<Option<f64>> {
        let v = match name.trim() {
            "control" => Some(flag(self.control)),
            "dm" | "dm_acquirer" => Some(flag(self.dm_acquirer)),
            "listed" | "listed_target" => Some(flag(self.listed_target)),
            "diversifying" => Some(flag(self.diversifying)),
            "non_diversified" => Some(flag(!self.diversifying)),
            "dummy95" => Some(flag(self.dummy95)),
            "time_trend" => Some(self.time_trend as f64),
            "mv" | "log_mv" => self.log_mv,
            "log_post_ownership" => self.log_post_ownership,
            "log_transaction_value" => self.log_transaction_value,
            other => {
                if let Some((a, b)) = other.split_once('*') {
                    return Ok(self.value(a)?.zip(self.value(b)?).map(|(x, y)| x * y));
                }
                return Err(Error::UnknownFeature(other.to_string()));
            }
        };
        Ok(v)
    }
}

fn positive_ln(v: Option<f64>) -> Option<f64> {
    v.filter(|x| *x > 0.0).map(f64::ln)
}

pub fn derive_features(deal: &DealRecord, acquirer_class: IncomeClass) -> Result<DealFeatures> {
    let after = deal.pct_owned_after.ok_or_else(|| Error::MissingOwnership {
        deal_id: deal.deal_id.clone(),
    })?;
    let acquirer_sic = check_sic(&deal.acquirer_sic)?;
    let target_sic = check_sic(&deal.target_sic)?;
    Ok(DealFeatures {
        deal_id: deal.deal_id.clone(),
        control: after >= 50.0,
        dm_acquirer: acquirer_class == IncomeClass::H && !is_vietnam(&deal.acquirer_nation),
        listed_target: deal.target_public,
        diversifying: three_digit(acquirer_sic) != three_digit(target_sic),
        dummy95: after >= 95.0,
        time_trend: deal.announcement_date.year() - 2005,
        log_mv: positive_ln(deal.acquirer_market_cap),
        log_post_ownership: positive_ln(Some(after)),
        log_transaction_value: positive_ln(deal.transaction_value),
        acquirer_sector: sic_sector(acquirer_sic)?,
        target_sector: sic_sector(target_sic)?,
    })
}

pub const POST_BUCKETS: [&str; 3] = ["0-50%", "50-95%", "95-100%"];
pub const PRE_BUCKETS: [&str; 5] = ["No", "Yes", "<20%", "20-40%", "40-50%"];

/// Post-acquisition (rows) by pre-acquisition (columns) ownership counts.
/// The `Yes` column is the sum of the three minority sub-columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OwnershipMatrix {
    pub counts: [[usize; 5]; 3],
}

impl OwnershipMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().map(|r| r[0] + r[1]).sum()
    }
}

/// Tallies deals into post buckets `[0,50)`, `[50,95)`, `[95,100]` and pre
/// buckets none, `(0,20)`, `[20,40)`, `[40,50)`. Deals without a post stake
/// or with a prior controlling stake are not counted.
pub fn ownership_transition_matrix<'a>(
    deals: impl IntoIterator<Item = &'a DealRecord>,
) -> OwnershipMatrix {
    let mut m = OwnershipMatrix::default();
    for d in deals {
        let Some(after) = d.pct_owned_after else { continue };
        let before = d.owned_before();
        let row = if after < 50.0 {
            0
        } else if after < 95.0 {
            1
        } else {
            2
        };
        let sub = if before <= 0.0 {
            None
        } else if before < 20.0 {
            Some(2)
        } else if before < 40.0 {
            Some(3)
        } else if before < 50.0 {
            Some(4)
        } else {
            continue;
        };
        match sub {
            None => m.counts[row][0] += 1,
            Some(col) => {
                m.counts[row][1] += 1;
                m.counts[row][col] += 1;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::deal::fixtures::deal;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    #[test]
    fn sectors() {
        assert_eq!(sic_sector("6021").unwrap(), Sector::FinancialServices);
        assert_eq!(sic_sector("0111").unwrap(), Sector::AgricultureConsumer);
        assert_eq!(sic_sector("9999").unwrap(), Sector::TourismMiscellaneous);
        assert_eq!(sic_sector("20").unwrap(), Sector::BasicManufacturing);
        assert_eq!(sic_sector("3571").unwrap(), Sector::MachineryElectronics);
        assert!(matches!(sic_sector("7"), Err(Error::MalformedSic(_))));
        assert!(matches!(sic_sector("60A1"), Err(Error::MalformedSic(_))));
        assert!(matches!(sic_sector("12345"), Err(Error::MalformedSic(_))));
    }

    #[test]
    fn control_boundaries() {
        let mut d = deal("x");
        d.pct_owned_after = Some(50.0);
        let f = derive_features(&d, IncomeClass::H).unwrap();
        assert!(f.control && !f.dummy95 && f.dm_acquirer);
        d.pct_owned_after = Some(49.9);
        d.pct_acquired = Some(49.9);
        let f = derive_features(&d, IncomeClass::H).unwrap();
        assert!(!f.control && !f.dummy95);
        d.pct_owned_after = Some(95.0);
        let f = derive_features(&d, IncomeClass::H).unwrap();
        assert!(f.control && f.dummy95);
        d.pct_owned_after = None;
        assert!(matches!(
            derive_features(&d, IncomeClass::H),
            Err(Error::MissingOwnership { .. })
        ));
    }

    #[test]
    fn time_trend_and_logs() {
        let mut d = deal("x");
        d.announcement_date = NaiveDate::from_ymd_opt(1995, 3, 1).unwrap();
        assert_eq!(derive_features(&d, IncomeClass::H).unwrap().time_trend, -10);
        d.announcement_date = NaiveDate::from_ymd_opt(2015, 12, 31).unwrap();
        d.transaction_value = None;
        d.acquirer_market_cap = Some(0.0);
        let f = derive_features(&d, IncomeClass::H).unwrap();
        assert_eq!(f.time_trend, 10);
        assert_eq!(f.log_transaction_value, None);
        assert_eq!(f.log_mv, None);
        assert_eq!(f.log_post_ownership, Some(60f64.ln()));
        assert_eq!(f.value("control*mv").unwrap(), None);
    }

    #[test]
    fn diversification_on_three_digits() {
        let mut d = deal("x");
        d.acquirer_sic = "2011".into();
        d.target_sic = "2015".into();
        assert!(!derive_features(&d, IncomeClass::H).unwrap().diversifying);
        d.target_sic = "2021".into();
        let f = derive_features(&d, IncomeClass::H).unwrap();
        assert!(f.diversifying);
        assert_eq!(f.value("non_diversified").unwrap(), Some(0.0));
    }

    #[test]
    fn vietnamese_acquirer_is_never_dm() {
        let mut d = deal("x");
        d.acquirer_nation = "Vietnam".into();
        assert!(!derive_features(&d, IncomeClass::H).unwrap().dm_acquirer);
    }

    #[test]
    fn feature_lookup() {
        let f = derive_features(&deal("x"), IncomeClass::LM).unwrap();
        assert_eq!(f.value("control*dm").unwrap(), Some(0.0));
        assert_eq!(f.value("control").unwrap(), Some(1.0));
        assert!(matches!(f.value("beta"), Err(Error::UnknownFeature(_))));
        assert!(matches!(f.value("control*beta"), Err(Error::UnknownFeature(_))));
    }

    fn owned(before: f64, after: f64) -> DealRecord {
        let mut d = deal("o");
        d.pct_owned_before = Some(before);
        d.pct_owned_after = Some(after);
        d.pct_acquired = Some(after - before);
        d
    }

    #[test]
    fn ownership_all_new_full() {
        let deals: Vec<DealRecord> = (0..7).map(|_| owned(0.0, 100.0)).collect();
        let m = ownership_transition_matrix(&deals);
        assert_eq!(m.counts[2][0], 7);
        assert_eq!(m.total(), 7);
    }

    #[test]
    fn ownership_hand_fixture() {
        let deals = vec![
            owned(10.0, 30.0),
            owned(19.9, 96.0),
            owned(20.0, 49.0),
            owned(39.0, 60.0),
            owned(40.0, 45.0),
            owned(45.0, 100.0),
        ];
        let m = ownership_transition_matrix(&deals);
        //                   No Yes <20 20-40 40-50
        let expected = [
            [0, 3, 1, 1, 1], // 0-50%
            [0, 1, 0, 1, 0], // 50-95%
            [0, 2, 1, 0, 1], // 95-100%
        ];
        assert_eq!(m.counts, expected);
    }

    proptest! {
        #[test]
        fn yes_column_is_sum(pairs in prop::collection::vec((0.0f64..50.0, 0.0f64..=100.0), 0..60)) {
            let deals: Vec<DealRecord> = pairs
                .into_iter()
                .map(|(b, a)| owned(b.min(a), a.max(b)))
                .collect();
            let m = ownership_transition_matrix(&deals);
            for row in m.counts {
                prop_assert_eq!(row[1], row[2] + row[3] + row[4]);
            }
            prop_assert_eq!(m.total(), deals.len());
        }

        #[test]
        fn control_ignores_transaction_value(tv in 0.001f64..1e6, k in 0.001f64..1e3) {
            let mut d = deal("x");
            d.transaction_value = Some(tv);
            let a = derive_features(&d, IncomeClass::H).unwrap().control;
            d.transaction_value = Some(tv * k);
            prop_assert_eq!(a, derive_features(&d, IncomeClass::H).unwrap().control);
        }
    }
}
