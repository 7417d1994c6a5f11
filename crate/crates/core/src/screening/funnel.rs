use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;

use crate::market_data::PriceSeries;
use crate::screening::{is_vietnam, DealRecord, DealStatus};

/// Minimum trading days before the announcement.
pub const MIN_HISTORY_DAYS: usize = 195;
const MIN_STAKE_AFTER: f64 = 5.0;
const CONTROL_STAKE: f64 = 50.0;

pub const FUNNEL_LABELS: [&str; 8] = [
    "Vietnamese target",
    "Announced between 01/01/1995-12/31/2015",
    "Affected between 01/01/1995-12/31/2015",
    "Public acquirer",
    "The acquired share after transaction is at least 5%",
    "Acquirer does not have control in target before transaction",
    "No other event",
    "At least 195 trading days before announcement",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunnelStep {
    pub criterion: u8,
    pub label: &'static str,
    pub count_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunnelReport {
    pub input: usize,
    pub steps: Vec<FunnelStep>,
    pub survivors: Vec<DealRecord>,
}

fn sample_period(date: NaiveDate) -> bool {
    let start = NaiveDate::from_ymd_opt(1995, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2015, 12, 31).unwrap();
    (start..=end).contains(&date)
}

fn gate(criterion: u8, deal: &DealRecord, history: &BTreeMap<String, usize>) -> bool {
    match criterion {
        1 => is_vietnam(&deal.target_nation),
        2 => sample_period(deal.announcement_date),
        3 => deal.status == DealStatus::Completed && deal.effective_date.is_some_and(sample_period),
        4 => deal.acquirer_public,
        5 => deal.pct_owned_after.is_some_and(|a| a >= MIN_STAKE_AFTER),
        6 => deal.owned_before() < CONTROL_STAKE,
        7 => deal.clean_event,
        8 => history.get(&deal.deal_id).copied().unwrap_or(0) >= MIN_HISTORY_DAYS,
        _ => unreachable!("eight gates"),
    }
}

/// Applies the eight sample criteria in order, recording survivors after
/// each. `history` maps deal id to available pre-announcement trading days;
/// a missing entry counts as none.
pub fn apply_funnel(deals: &[DealRecord], history: &BTreeMap<String, usize>) -> FunnelReport {
    let mut survivors: Vec<DealRecord> = deals.to_vec();
    let mut steps = Vec::with_capacity(FUNNEL_LABELS.len());
    for (criterion, label) in (1u8..).zip(FUNNEL_LABELS) {
        survivors.retain(|d| gate(criterion, d, history));
        steps.push(FunnelStep {
            criterion,
            label,
            count_after: survivors.len(),
        });
    }
    FunnelReport {
        input: deals.len(),
        steps,
        survivors,
    }
}

/// Acquirer price observations strictly before each announcement date.
pub fn trading_history(
    deals: &[DealRecord],
    prices: &BTreeMap<String, PriceSeries>,
) -> BTreeMap<String, usize> {
    deals
        .iter()
        .map(|d| {
            let n = prices.get(&d.acquirer_id).map_or(0, |p| {
                p.observations()
                    .partition_point(|(date, _)| *date < d.announcement_date)
            });
            (d.deal_id.clone(), n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::deal::fixtures::deal;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        let r = apply_funnel(&[], &BTreeMap::new());
        assert_eq!(r.steps.len(), 8);
        assert!(r.steps.iter().all(|s| s.count_after == 0));
    }

    #[test]
    fn history_counts_prior_prices() {
        let d = deal("h");
        let start = d.announcement_date - chrono::Duration::days(10);
        let obs = (0..20).map(|i| (start + chrono::Duration::days(i), 1.0)).collect();
        let prices = BTreeMap::from([(d.acquirer_id.clone(), PriceSeries::new("p", obs).unwrap())]);
        assert_eq!(trading_history(&[d], &prices)["h"], 10);
    }

    proptest! {
        #[test]
        fn monotone_and_consistent(
            flags in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), 0.0f64..100.0, 0usize..400), 0..40)
        ) {
            let mut history = BTreeMap::new();
            let deals: Vec<DealRecord> = flags
                .iter()
                .enumerate()
                .map(|(i, &(viet, public, clean, after, hist))| {
                    let mut d = deal(&i.to_string());
                    if !viet { d.target_nation = "Laos".into(); }
                    d.acquirer_public = public;
                    d.clean_event = clean;
                    d.pct_owned_after = Some(after);
                    d.pct_owned_before = Some((after - 30.0).max(0.0));
                    history.insert(d.deal_id.clone(), hist);
                    d
                })
                .collect();
            let r = apply_funnel(&deals, &history);
            let mut prev = deals.len();
            for s in &r.steps {
                prop_assert!(s.count_after <= prev);
                prev = s.count_after;
            }
            for d in &r.survivors {
                for c in 1..=8 {
                    prop_assert!(gate(c, d, &history));
                }
            }
        }
    }
}
