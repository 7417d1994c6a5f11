//! Per-deal OLS market model, abnormal returns and cumulative abnormal
//! returns over event windows.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::market_data::{
    build_event_clock, compute_log_returns, EventClock, PriceSeries, ReturnSeries,
    TradingCalendar,
};
use crate::screening::DealRecord;

/// Estimation window in relative trading days (inclusive) and the minimum
/// number of usable days inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimationConfig {
    pub est_start: i32,
    pub est_end: i32,
    pub min_obs: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            est_start: -196,
            est_end: -65,
            min_obs: 100,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.est_start < self.est_end && self.est_end < 0) {
            return Err(Error::InvalidConfig(format!(
                "estimation window [{}, {}] must satisfy start < end < 0",
                self.est_start, self.est_end
            )));
        }
        if self.min_obs < 3 {
            return Err(Error::InvalidConfig(format!(
                "min_obs must be at least 3, got {}",
                self.min_obs
            )));
        }
        Ok(())
    }

    /// Number of trading days in the window.
    pub fn window_len(&self) -> usize {
        (self.est_end - self.est_start + 1) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum WindowFamily {
    /// Short windows around day 0.
    Liquidity,
    /// Windows ending on or before day 0.
    Leakage,
    /// Longer windows.
    ThinTrading,
    Custom,
}

/// Inclusive range of relative trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventWindow {
    pub start: i32,
    pub end: i32,
    pub family: WindowFamily,
}

const LIQUIDITY: [(i32, i32); 3] = [(0, 1), (-1, 1), (-2, 1)];
const LEAKAGE: [(i32, i32); 5] = [(-1, 0), (-2, 0), (-5, 0), (-10, -1), (-10, 0)];
const THIN_TRADING: [(i32, i32); 4] = [(-1, 5), (-1, 10), (2, 15), (-10, 10)];

impl EventWindow {
    pub fn new(start: i32, end: i32, family: WindowFamily) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidConfig(format!(
                "window start {start} exceeds end {end}"
            )));
        }
        Ok(Self { start, end, family })
    }

    /// Window with its family looked up from the standard set, `Custom`
    /// otherwise.
    pub fn span(start: i32, end: i32) -> Result<Self> {
        let family = if LIQUIDITY.contains(&(start, end)) {
            WindowFamily::Liquidity
        } else if LEAKAGE.contains(&(start, end)) {
            WindowFamily::Leakage
        } else if THIN_TRADING.contains(&(start, end)) {
            WindowFamily::ThinTrading
        } else {
            WindowFamily::Custom
        };
        Self::new(start, end, family)
    }

    pub fn liquidity() -> Vec<Self> {
        Self::family_set(&LIQUIDITY, WindowFamily::Liquidity)
    }

    pub fn leakage() -> Vec<Self> {
        Self::family_set(&LEAKAGE, WindowFamily::Leakage)
    }

    pub fn thin_trading() -> Vec<Self> {
        Self::family_set(&THIN_TRADING, WindowFamily::ThinTrading)
    }

    /// All twelve standard windows.
    pub fn standard() -> Vec<Self> {
        let mut all = Self::liquidity();
        all.extend(Self::leakage());
        all.extend(Self::thin_trading());
        all
    }

    fn family_set(spans: &[(i32, i32)], family: WindowFamily) -> Vec<Self> {
        spans
            .iter()
            .map(|&(start, end)| Self { start, end, family })
            .collect()
    }

    /// Number of trading days covered.
    pub fn days(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn offsets(&self) -> RangeInclusive<i32> {
        self.start..=self.end
    }

    pub fn same_span(&self, other: &EventWindow) -> bool {
        self.start == other.start && self.end == other.end
    }

    /// Parses a comma-separated list such as `"0:1,-1:1,-2:1"`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for EventWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

impl FromStr for EventWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("window `{s}` is not of the form start:end"));
        let (a, b) = s.trim().split_once(':').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        Self::span(start, end)
    }
}

/// OLS fit of `R_stock = alpha + beta * R_market + e` over the estimation
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModelFit {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_se: f64,
    pub beta_se: f64,
    /// Relative days that entered the fit, aligned with `est_residuals`.
    pub est_offsets: Vec<i32>,
    pub est_residuals: Vec<f64>,
    /// `SSR / (n_est - 2)`.
    pub residual_variance: f64,
    pub n_est: usize,
}

impl MarketModelFit {
    pub fn predict(&self, market_return: f64) -> f64 {
        self.alpha + self.beta * market_return
    }
}

pub fn fit_market_model(
    stock: &[f64],
    market: &[f64],
    config: &EstimationConfig,
) -> Result<MarketModelFit> {
    if stock.len() != market.len() {
        return Err(Error::InvalidConfig(format!(
            "stock and market windows differ in length ({} vs {})",
            stock.len(),
            market.len()
        )));
    }
    let n = stock.len();
    let needed = config.min_obs.max(3);
    if n < needed {
        return Err(Error::InsufficientObservations { needed, got: n });
    }
    let nf = n as f64;
    let x_bar = market.iter().sum::<f64>() / nf;
    let y_bar = stock.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in market.iter().zip(stock) {
        let dx = x - x_bar;
        sxx += dx * dx;
        sxy += dx * (y - y_bar);
    }
    let scale: f64 = market.iter().map(|x| x * x).sum();
    if sxx <= f64::EPSILON * scale || sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let beta = sxy / sxx;
    let alpha = y_bar - beta * x_bar;
    let est_residuals: Vec<f64> = market
        .iter()
        .zip(stock)
        .map(|(x, y)| y - (alpha + beta * x))
        .collect();
    let ssr: f64 = est_residuals.iter().map(|e| e * e).sum();
    let residual_variance = ssr / (nf - 2.0);
    Ok(MarketModelFit {
        alpha,
        beta,
        alpha_se: (residual_variance * (1.0 / nf + x_bar * x_bar / sxx)).sqrt(),
        beta_se: (residual_variance / sxx).sqrt(),
        est_offsets: Vec::new(),
        est_residuals,
        residual_variance,
        n_est: n,
    })
}

/// `AR_t = R_stock,t - (alpha + beta * R_market,t)` for each offset.
pub fn abnormal_returns(
    stock: &ReturnSeries,
    market: &ReturnSeries,
    clock: &EventClock<'_>,
    fit: &MarketModelFit,
    offsets: RangeInclusive<i32>,
) -> Result<BTreeMap<i32, f64>> {
    offsets
        .map(|offset| {
            let date = clock.date_at(offset).ok_or(Error::MissingOffset { offset })?;
            match (stock.get(date), market.get(date)) {
                (Some(r), Some(m)) => Ok((offset, r - fit.predict(m))),
                _ => Err(Error::MissingOffset { offset }),
            }
        })
        .collect()
}

/// Plain sum of ARs over the window.
pub fn cumulative_abnormal_return(ars: &BTreeMap<i32, f64>, window: &EventWindow) -> Result<f64> {
    window
        .offsets()
        .map(|offset| ars.get(&offset).copied().ok_or(Error::MissingOffset { offset }))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarResult {
    pub deal_id: String,
    /// ARs over the union of all configured windows.
    pub abnormal_returns: BTreeMap<i32, f64>,
    pub cars: Vec<(EventWindow, f64)>,
    pub fit: MarketModelFit,
}

impl CarResult {
    pub fn car(&self, window: &EventWindow) -> Option<f64> {
        self.cars
            .iter()
            .find(|(w, _)| w.same_span(window))
            .map(|(_, c)| *c)
    }
}

/// A deal the engine could not evaluate, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub deal_id: String,
    pub reason: Error,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStudyOutput {
    /// Sorted by deal id.
    pub results: Vec<CarResult>,
    pub exclusions: Vec<Exclusion>,
}

/// Prices and trading calendars shared read-only across deals.
#[derive(Debug, Clone, Default)]
pub struct MarketStore {
    pub prices: BTreeMap<String, PriceSeries>,
    /// Keyed by market id. A deal uses the calendar whose id equals its
    /// benchmark instrument id; a lone calendar applies to every deal; with
    /// no calendars the benchmark's own observation dates are used.
    pub calendars: BTreeMap<String, TradingCalendar>,
}

impl MarketStore {
    pub fn calendar_for(&self, benchmark_id: &str) -> Option<std::borrow::Cow<'_, TradingCalendar>> {
        use std::borrow::Cow;
        if let Some(c) = self.calendars.get(benchmark_id) {
            return Some(Cow::Borrowed(c));
        }
        if self.calendars.len() == 1 {
            return self.calendars.values().next().map(Cow::Borrowed);
        }
        if self.calendars.is_empty() {
            return self
                .prices
                .get(benchmark_id)
                .map(|p| Cow::Owned(TradingCalendar::from_series(benchmark_id, p)));
        }
        None
    }
}

fn union_span(windows: &[EventWindow]) -> Option<RangeInclusive<i32>> {
    let lo = windows.iter().map(|w| w.start).min()?;
    let hi = windows.iter().map(|w| w.end).max()?;
    Some(lo..=hi)
}

/// Fits the market model on the estimation days available for this deal and
/// computes ARs and CARs. ARs cover the hull of the configured windows.
pub fn study_deal(
    deal_id: &str,
    stock: &ReturnSeries,
    market: &ReturnSeries,
    clock: &EventClock<'_>,
    config: &EstimationConfig,
    windows: &[EventWindow],
) -> Result<CarResult> {
    let mut offsets = Vec::with_capacity(config.window_len());
    let mut ys = Vec::with_capacity(config.window_len());
    let mut xs = Vec::with_capacity(config.window_len());
    let mut first_missing = None;
    for offset in config.est_start..=config.est_end {
        let pair = clock
            .date_at(offset)
            .and_then(|d| Some((stock.get(d)?, market.get(d)?)));
        match pair {
            Some((y, x)) => {
                offsets.push(offset);
                ys.push(y);
                xs.push(x);
            }
            None => {
                first_missing.get_or_insert(offset);
            }
        }
    }
    if ys.len() < config.min_obs {
        return Err(Error::InsufficientHistory {
            offset: first_missing.unwrap_or(config.est_start),
        });
    }
    let mut fit = fit_market_model(&ys, &xs, config)?;
    fit.est_offsets = offsets;

    let abnormal_returns = match union_span(windows) {
        Some(span) => abnormal_returns(stock, market, clock, &fit, span)?,
        None => BTreeMap::new(),
    };
    let cars = windows
        .iter()
        .map(|w| Ok((*w, cumulative_abnormal_return(&abnormal_returns, w)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CarResult {
        deal_id: deal_id.to_string(),
        abnormal_returns,
        cars,
        fit,
    })
}

/// Runs the market-model event study over every deal.
///
/// Per-deal failures (short history, missing prices or benchmark) land in
/// `exclusions`. The call itself fails only when inputs are malformed: an
/// invalid configuration or a price series with an interior gap.
pub fn run_event_study(
    deals: &[DealRecord],
    store: &MarketStore,
    benchmarks: &BTreeMap<String, String>,
    config: &EstimationConfig,
    windows: &[EventWindow],
    exec: Execution,
) -> Result<EventStudyOutput> {
    config.validate()?;

    // Validate and transform every referenced series once.
    let mut instruments: Vec<(&str, &str)> = Vec::new();
    for deal in deals {
        if let Some(bench) = benchmarks.get(&deal.deal_id) {
            instruments.push((deal.acquirer_id.as_str(), bench.as_str()));
            instruments.push((bench.as_str(), bench.as_str()));
        }
    }
    instruments.sort_unstable();
    instruments.dedup();
    let prepared = exec.map(&instruments, |&(id, bench)| -> Result<Option<(String, ReturnSeries)>> {
        let Some(prices) = store.prices.get(id) else {
            return Ok(None);
        };
        if let Some(cal) = store.calendar_for(bench) {
            prices.validate_against(&cal)?;
        }
        Ok(compute_log_returns(prices).ok().map(|r| (id.to_string(), r)))
    });
    let mut returns: BTreeMap<String, ReturnSeries> = BTreeMap::new();
    for item in prepared {
        if let Some((id, r)) = item? {
            returns.insert(id, r);
        }
    }

    let outcomes = exec.map(deals, |deal| {
        let invalid = |reason: String| Error::InvalidDeal {
            deal_id: deal.deal_id.clone(),
            reason,
        };
        let bench = benchmarks
            .get(&deal.deal_id)
            .ok_or_else(|| invalid("no benchmark mapping".into()))?;
        let calendar = store
            .calendar_for(bench)
            .ok_or_else(|| invalid(format!("no trading calendar for benchmark `{bench}`")))?;
        let stock = returns
            .get(&deal.acquirer_id)
            .ok_or_else(|| invalid(format!("no price data for acquirer `{}`", deal.acquirer_id)))?;
        let market = returns
            .get(bench)
            .ok_or_else(|| invalid(format!("no price data for benchmark `{bench}`")))?;
        let clock = build_event_clock(&calendar, deal.announcement_date)?;
        study_deal(&deal.deal_id, stock, market, &clock, config, windows)
    });

    let mut out = EventStudyOutput::default();
    for (deal, outcome) in deals.iter().zip(outcomes) {
        match outcome {
            Ok(r) => out.results.push(r),
            Err(reason) => out.exclusions.push(Exclusion {
                deal_id: deal.deal_id.clone(),
                reason,
            }),
        }
    }
    out.results.sort_by(|a, b| a.deal_id.cmp(&b.deal_id));
    out.exclusions.sort_by(|a, b| a.deal_id.cmp(&b.deal_id));
    Ok(out)
}
