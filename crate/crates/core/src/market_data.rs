//! Trading calendars, price series and the relative-day event clock.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};

fn check_increasing<'a>(
    context: &str,
    dates: impl IntoIterator<Item = &'a NaiveDate>,
) -> Result<()> {
    let mut previous: Option<NaiveDate> = None;
    for &date in dates {
        if let Some(p) = previous {
            if date <= p {
                return Err(Error::UnorderedDates {
                    context: context.to_string(),
                    previous: p,
                    date,
                });
            }
        }
        previous = Some(date);
    }
    Ok(())
}

/// Ordered trading days of one market. Non-working days are simply absent.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingCalendar {
    market_id: String,
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(market_id: impl Into<String>, dates: Vec<NaiveDate>) -> Result<Self> {
        let market_id = market_id.into();
        check_increasing(&format!("calendar `{market_id}`"), &dates)?;
        Ok(Self { market_id, dates })
    }

    /// Calendar made of every observation date of a series, typically the
    /// benchmark index when no explicit calendar is supplied.
    pub fn from_series(market_id: impl Into<String>, series: &PriceSeries) -> Self {
        Self {
            market_id: market_id.into(),
            dates: series.observations.iter().map(|(d, _)| *d).collect(),
        }
    }

    pub fn market_id(&self) -> &str {
        &self.market_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn first_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.dates.partition_point(|d| *d < date);
        (i < self.dates.len()).then_some(i)
    }

    /// Number of trading days strictly before `date`.
    pub fn days_before(&self, date: NaiveDate) -> usize {
        self.dates.partition_point(|d| *d < date)
    }
}

/// Daily closing prices of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    instrument_id: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(instrument_id: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let instrument_id = instrument_id.into();
        check_increasing(
            &format!("prices `{instrument_id}`"),
            observations.iter().map(|(d, _)| d),
        )?;
        if let Some(&(date, price)) = observations
            .iter()
            .find(|(_, p)| !(p.is_finite() && *p > 0.0))
        {
            return Err(Error::NonPositivePrice {
                instrument: instrument_id,
                date,
                price,
            });
        }
        Ok(Self {
            instrument_id,
            observations,
        })
    }

    pub fn instrument_id(&self) -> &str {
        &self.instrument_id
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Checks that every date is a trading day and that the series has no
    /// interior gap: between its first and last date it must cover every
    /// trading day of the calendar.
    pub fn validate_against(&self, calendar: &TradingCalendar) -> Result<()> {
        let Some(&(first, _)) = self.observations.first() else {
            return Ok(());
        };
        let start = calendar.position(first).ok_or_else(|| Error::DateNotInCalendar {
            instrument: self.instrument_id.clone(),
            date: first,
        })?;
        for (k, &(date, _)) in self.observations.iter().enumerate() {
            match calendar.dates().get(start + k) {
                Some(&expected) if expected == date => {}
                Some(&expected) if expected < date => {
                    return Err(Error::MissingPrice {
                        instrument: self.instrument_id.clone(),
                        date: expected,
                    })
                }
                _ => {
                    return Err(Error::DateNotInCalendar {
                        instrument: self.instrument_id.clone(),
                        date,
                    })
                }
            }
        }
        Ok(())
    }
}

/// Daily log returns, each dated by the later of its two prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    instrument_id: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl ReturnSeries {
    pub fn instrument_id(&self) -> &str {
        &self.instrument_id
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|(_, r)| *r)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.observations
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.observations[i].1)
    }
}

/// `r_t = ln(P_t / P_{t-1})` over consecutive observations.
pub fn compute_log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::EmptySeries {
            instrument: prices.instrument_id.clone(),
        });
    }
    let observations = prices
        .observations
        .windows(2)
        .map(|w| (w[1].0, (w[1].1 / w[0].1).ln()))
        .collect();
    Ok(ReturnSeries {
        instrument_id: prices.instrument_id.clone(),
        observations,
    })
}

/// Maps relative trading-day offsets around an announcement to calendar
/// dates. Offset 0 is the first trading day on or after the announcement.
#[derive(Debug, Clone, Copy)]
pub struct EventClock<'a> {
    calendar: &'a TradingCalendar,
    announcement_date: NaiveDate,
    zero: usize,
}

impl<'a> EventClock<'a> {
    pub fn announcement_date(&self) -> NaiveDate {
        self.announcement_date
    }

    pub fn day_zero(&self) -> NaiveDate {
        self.calendar.dates()[self.zero]
    }

    /// Calendar index of offset 0.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    pub fn date_at(&self, offset: i32) -> Option<NaiveDate> {
        let idx = self.zero as i64 + offset as i64;
        usize::try_from(idx)
            .ok()
            .and_then(|i| self.calendar.dates().get(i).copied())
    }

    pub fn offset_of(&self, date: NaiveDate) -> Option<i32> {
        self.calendar
            .position(date)
            .map(|i| (i as i64 - self.zero as i64) as i32)
    }

    /// Offsets resolvable on the calendar.
    pub fn span(&self) -> std::ops::RangeInclusive<i32> {
        let lo = -(self.zero as i32);
        let hi = (self.calendar.len() - 1 - self.zero) as i32;
        lo..=hi
    }
}

pub fn build_event_clock(
    calendar: &TradingCalendar,
    announcement_date: NaiveDate,
) -> Result<EventClock<'_>> {
    let in_span = calendar
        .dates()
        .first()
        .is_some_and(|first| *first <= announcement_date);
    let zero = calendar
        .first_on_or_after(announcement_date)
        .filter(|_| in_span)
        .ok_or(Error::DateOutOfRange {
            date: announcement_date,
        })?;
    Ok(EventClock {
        calendar,
        announcement_date,
        zero,
    })
}

/// Returns for offsets `start..=end`, in offset order.
pub fn slice_window(
    series: &ReturnSeries,
    clock: &EventClock<'_>,
    start: i32,
    end: i32,
) -> Result<Vec<f64>> {
    if start > end {
        return Err(Error::InvalidConfig(format!(
            "window start {start} exceeds end {end}"
        )));
    }
    (start..=end)
        .map(|offset| {
            clock
                .date_at(offset)
                .and_then(|d| series.get(d))
                .ok_or(Error::InsufficientHistory { offset })
        })
        .collect()
}

/// Log returns for every instrument in a price store.
pub fn returns_by_instrument(
    prices: &BTreeMap<String, PriceSeries>,
) -> BTreeMap<String, Result<ReturnSeries>> {
    prices
        .iter()
        .map(|(id, p)| (id.clone(), compute_log_returns(p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn day(i: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(i)
    }

    fn series(prices: &[f64]) -> PriceSeries {
        PriceSeries::new(
            "X",
            prices.iter().enumerate().map(|(i, p)| (day(i as i64), *p)).collect(),
        )
        .unwrap()
    }

    fn consecutive_calendar(n: i64) -> TradingCalendar {
        TradingCalendar::new("M", (0..n).map(day).collect()).unwrap()
    }

    #[test]
    fn log_return_examples() {
        let r = compute_log_returns(&series(&[100.0, 100.0])).unwrap();
        assert_eq!(r.values().collect::<Vec<_>>(), vec![0.0]);

        let r = compute_log_returns(&series(&[100.0, 105.0])).unwrap();
        assert_abs_diff_eq!(r.observations()[0].1, 0.04879016417, epsilon = 1e-11);

        let r: Vec<f64> = compute_log_returns(&series(&[100.0, 105.0, 100.0]))
            .unwrap()
            .values()
            .collect();
        assert_abs_diff_eq!(r[0], 0.04879016417, epsilon = 1e-11);
        assert_abs_diff_eq!(r[1], -0.04879016417, epsilon = 1e-11);
        assert_abs_diff_eq!(r[0] + r[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn log_return_errors() {
        assert!(matches!(
            compute_log_returns(&series(&[100.0])),
            Err(Error::EmptySeries { .. })
        ));
        assert!(matches!(
            PriceSeries::new("X", vec![(day(0), 1.0), (day(1), 0.0)]),
            Err(Error::NonPositivePrice { .. })
        ));
        assert!(matches!(
            PriceSeries::new("X", vec![(day(1), 1.0), (day(1), 2.0)]),
            Err(Error::UnorderedDates { .. })
        ));
    }

    #[test]
    fn calendar_rejects_duplicates() {
        assert!(TradingCalendar::new("M", vec![day(0), day(0)]).is_err());
        assert!(TradingCalendar::new("M", vec![day(1), day(0)]).is_err());
    }

    #[test]
    fn gap_in_series_is_an_error() {
        let cal = consecutive_calendar(5);
        let gappy = PriceSeries::new("X", vec![(day(0), 1.0), (day(2), 1.0)]).unwrap();
        assert_eq!(
            gappy.validate_against(&cal),
            Err(Error::MissingPrice {
                instrument: "X".into(),
                date: day(1)
            })
        );
        let off_calendar = PriceSeries::new("X", vec![(day(9), 1.0)]).unwrap();
        assert!(matches!(
            off_calendar.validate_against(&cal),
            Err(Error::DateNotInCalendar { .. })
        ));
        // Late start and early end are fine.
        let partial = PriceSeries::new("X", vec![(day(1), 1.0), (day(2), 1.0)]).unwrap();
        assert!(partial.validate_against(&cal).is_ok());
    }

    #[test]
    fn event_clock_on_trading_day() {
        let cal = consecutive_calendar(10);
        let clock = build_event_clock(&cal, day(4)).unwrap();
        assert_eq!(clock.day_zero(), day(4));
        assert_eq!(clock.date_at(-4), Some(day(0)));
        assert_eq!(clock.date_at(-5), None);
        assert_eq!(clock.offset_of(day(9)), Some(5));
        assert_eq!(clock.span(), -4..=5);
    }

    #[test]
    fn event_clock_rolls_weekend_forward() {
        // 2024-03-08 is a Friday, 2024-03-11 a Monday.
        let fri = NaiveDate::from_ymd_opt(2024, 3, 8).unwrap();
        let mon = NaiveDate::from_ymd_opt(2024, 3, 11).unwrap();
        let cal = TradingCalendar::new("M", vec![fri, mon]).unwrap();
        let sat = NaiveDate::from_ymd_opt(2024, 3, 9).unwrap();
        let clock = build_event_clock(&cal, sat).unwrap();
        assert_eq!(clock.day_zero(), mon);
        assert_eq!(clock.date_at(-1), Some(fri));
        assert_eq!(clock.announcement_date(), sat);
    }

    #[test]
    fn event_clock_out_of_range() {
        let cal = consecutive_calendar(10);
        assert!(matches!(
            build_event_clock(&cal, day(-1)),
            Err(Error::DateOutOfRange { .. })
        ));
        assert!(matches!(
            build_event_clock(&cal, day(10)),
            Err(Error::DateOutOfRange { .. })
        ));
    }

    #[test]
    fn offset_minus_196_on_300_day_calendar() {
        let cal = consecutive_calendar(300);
        let clock = build_event_clock(&cal, day(250)).unwrap();
        assert_eq!(clock.date_at(-196), Some(day(54)));
    }

    #[test]
    fn slice_examples() {
        let cal = consecutive_calendar(300);
        let prices: Vec<f64> = (0..300).map(|i| 100.0 + i as f64).collect();
        let rets = compute_log_returns(&series(&prices)).unwrap();
        let clock = build_event_clock(&cal, day(250)).unwrap();

        let zero = slice_window(&rets, &clock, 0, 0).unwrap();
        assert_eq!(zero, vec![(350.0f64 / 349.0).ln()]);
        assert_eq!(slice_window(&rets, &clock, -2, 1).unwrap().len(), 4);

        // Returns start at day 1, so offset -250 (day 0) has no return.
        assert_eq!(
            slice_window(&rets, &clock, -250, -240),
            Err(Error::InsufficientHistory { offset: -250 })
        );
        let late = PriceSeries::new("L", (100..300).map(|i| (day(i), 100.0)).collect()).unwrap();
        let late = compute_log_returns(&late).unwrap();
        assert_eq!(
            slice_window(&late, &clock, -196, -65),
            Err(Error::InsufficientHistory { offset: -196 })
        );
    }

    proptest! {
        #[test]
        fn returns_reconstruct_prices(prices in prop::collection::vec(0.01f64..1e4, 2..60)) {
            let p = series(&prices);
            let r = compute_log_returns(&p).unwrap();
            prop_assert_eq!(r.len(), p.len() - 1);
            let mut acc = 0.0;
            for (k, ret) in r.values().enumerate() {
                acc += ret;
                let rebuilt = prices[0] * acc.exp();
                prop_assert!(((rebuilt - prices[k + 1]) / prices[k + 1]).abs() < 1e-10);
            }
        }

        #[test]
        fn scale_invariance(prices in prop::collection::vec(0.01f64..1e4, 2..40), k in 1e-3f64..1e3) {
            let a: Vec<f64> = compute_log_returns(&series(&prices)).unwrap().values().collect();
            let scaled: Vec<f64> = prices.iter().map(|p| p * k).collect();
            let b: Vec<f64> = compute_log_returns(&series(&scaled)).unwrap().values().collect();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn slices_concatenate(a in -40i32..0, len1 in 0i32..20, len2 in 1i32..20) {
            let cal = consecutive_calendar(100);
            let prices: Vec<f64> = (0..100).map(|i| 50.0 + ((i * 7) % 13) as f64).collect();
            let rets = compute_log_returns(&series(&prices)).unwrap();
            let clock = build_event_clock(&cal, day(50)).unwrap();
            let b = a + len1;
            let d = b + len2;
            let mut left = slice_window(&rets, &clock, a, b).unwrap();
            left.extend(slice_window(&rets, &clock, b + 1, d).unwrap());
            prop_assert_eq!(left, slice_window(&rets, &clock, a, d).unwrap());
        }
    }
}
