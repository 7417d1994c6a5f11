//! Seeded synthetic markets and deals with known ground truth.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Stream 0
//! drives the market index and stream `i + 1` drives firm `i`, so firms can
//! be generated in any order or in parallel and still replay bit for bit.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{
    run_event_study, EstimationConfig, EventWindow, MarketStore,
};
use crate::exec::Execution;
use crate::inference::{brown_warner_t, DivisorMode, TTestResult};
use crate::market_data::{PriceSeries, TradingCalendar};
use crate::screening::{DealRecord, DealStatus};

pub const MARKET_ID: &str = "SIM";
pub const BENCHMARK_ID: &str = "SIM-INDEX";
const BASE_PRICE: f64 = 100.0;

/// Shape of the daily shocks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum Innovations {
    #[default]
    Normal,
    /// Student t rescaled to unit variance; needs `dof > 2`.
    StudentT { dof: f64 },
}

impl Innovations {
    fn sampler(self) -> Result<Sampler> {
        match self {
            Innovations::Normal => Ok(Sampler::Normal),
            Innovations::StudentT { dof } => {
                if !(dof > 2.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Student t innovations need dof > 2, got {dof}"
                    )));
                }
                let t = StudentT::new(dof).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok(Sampler::StudentT(t, (dof / (dof - 2.0)).sqrt()))
            }
        }
    }
}

enum Sampler {
    Normal,
    StudentT(StudentT<f64>, f64),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Normal => StandardNormal.sample(rng),
            Sampler::StudentT(t, sd) => t.sample(rng) / sd,
        }
    }
}

/// Additive day-0 shocks driven by deal features.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FeatureEffects {
    pub control: f64,
    pub dm: f64,
    pub control_dm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSpec {
    pub n_firms: usize,
    /// Trading days in the calendar, prices included on each.
    pub n_days: usize,
    pub market_drift: f64,
    pub market_vol: f64,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub idiosyncratic_vol: f64,
    pub innovations: Innovations,
    /// Shock added to the log return at each of `event_offsets`.
    pub event_effect: f64,
    pub event_offsets: Vec<i32>,
    pub effects: FeatureEffects,
    pub control_fraction: f64,
    /// Share of cross-border acquirers from high-income nations.
    pub dm_fraction: f64,
    /// Share of domestic (Vietnamese) acquirers.
    pub domestic_fraction: f64,
    /// Share of deals reported without a transaction value.
    pub missing_value_fraction: f64,
    /// Fixed announcement position in the calendar; drawn per firm when
    /// absent.
    pub announcement_index: Option<usize>,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_firms: 100,
            n_days: 600,
            market_drift: 0.0003,
            market_vol: 0.01,
            alpha_range: (-0.0005, 0.0005),
            beta_range: (0.5, 1.5),
            idiosyncratic_vol: 0.02,
            innovations: Innovations::Normal,
            event_effect: 0.0,
            event_offsets: vec![0],
            effects: FeatureEffects::default(),
            control_fraction: 0.5,
            dm_fraction: 0.5,
            domestic_fraction: 0.0,
            missing_value_fraction: 0.3,
            announcement_index: None,
            start_date: NaiveDate::from_ymd_opt(2005, 1, 3).unwrap(),
            seed: 42,
        }
    }
}

/// Days before the announcement needed for the default estimation window,
/// counting the price that anchors the first return.
pub const MIN_EVENT_INDEX: usize = 197;
/// Days after the announcement needed for the widest standard window.
pub const POST_EVENT_DAYS: usize = 15;

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_days < 250 {
            return bad("n_days must be at least 250");
        }
        if !(self.market_vol >= 0.0 && self.idiosyncratic_vol >= 0.0) {
            return bad("volatilities must be non-negative");
        }
        if self.alpha_range.0 > self.alpha_range.1 || self.beta_range.0 > self.beta_range.1 {
            return bad("parameter ranges must be ordered");
        }
        for f in [
            self.control_fraction,
            self.dm_fraction,
            self.domestic_fraction,
            self.missing_value_fraction,
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad("fractions must lie in [0, 1]");
            }
        }
        if self.n_days < MIN_EVENT_INDEX + POST_EVENT_DAYS + 1 {
            return bad("calendar too short for an event window");
        }
        self.innovations.sampler().map(|_| ())
    }

    /// Generator for stream `k` of this spec's seed.
    pub fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }
}

/// Weekday calendar starting at `start` (rolled forward to a Monday-Friday
/// date).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimFirm {
    pub id: String,
    pub alpha: f64,
    pub beta: f64,
    /// `n_days - 1` log returns, aligned with calendar days `1..n_days`.
    pub log_returns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub calendar: TradingCalendar,
    pub market_returns: Vec<f64>,
    pub firms: Vec<SimFirm>,
}

fn prices_from_returns(id: &str, dates: &[NaiveDate], returns: &[f64]) -> PriceSeries {
    let mut level = BASE_PRICE.ln();
    let mut obs = Vec::with_capacity(dates.len());
    obs.push((dates[0], BASE_PRICE));
    for (d, r) in dates[1..].iter().zip(returns) {
        level += r;
        obs.push((*d, level.exp()));
    }
    PriceSeries::new(id, obs).expect("exponentiated prices are positive and ordered")
}

impl SyntheticMarket {
    pub fn benchmark(&self) -> PriceSeries {
        prices_from_returns(BENCHMARK_ID, self.calendar.dates(), &self.market_returns)
    }

    pub fn firm_prices(&self, firm: &SimFirm) -> PriceSeries {
        prices_from_returns(&firm.id, self.calendar.dates(), &firm.log_returns)
    }
}

pub fn firm_id(i: usize) -> String {
    format!("F{i:04}")
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Market returns `drift + vol * z`; firm returns
/// `alpha + beta * market + idio * z`.
pub fn generate_market(spec: &SimSpec, exec: Execution) -> Result<SyntheticMarket> {
    spec.validate()?;
    let sampler = spec.innovations.sampler()?;
    let n_ret = spec.n_days - 1;
    let mut rng = spec.stream(0);
    let market_returns: Vec<f64> = (0..n_ret)
        .map(|_| spec.market_drift + spec.market_vol * sampler.draw(&mut rng))
        .collect();
    let firms = exec.map_range(0..spec.n_firms as u64, |i| {
        let mut rng = spec.stream(i + 1);
        let alpha = uniform(&mut rng, spec.alpha_range);
        let beta = uniform(&mut rng, spec.beta_range);
        let log_returns = market_returns
            .iter()
            .map(|m| alpha + beta * m + spec.idiosyncratic_vol * sampler.draw(&mut rng))
            .collect();
        SimFirm {
            id: firm_id(i as usize),
            alpha,
            beta,
            log_returns,
        }
    });
    let calendar = TradingCalendar::new(MARKET_ID, business_days(spec.start_date, spec.n_days))?;
    Ok(SyntheticMarket {
        calendar,
        market_returns,
        firms,
    })
}

/// Ground truth recorded for each synthetic deal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DealTruth {
    pub deal_id: String,
    pub alpha: f64,
    pub beta: f64,
    pub announcement_index: usize,
    pub control: bool,
    pub dm: bool,
    /// Total shock added over all event offsets.
    pub injected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub calendar: TradingCalendar,
    pub benchmark: PriceSeries,
    pub prices: BTreeMap<String, PriceSeries>,
    pub deals: Vec<DealRecord>,
    /// Deal id to benchmark instrument id.
    pub benchmarks: BTreeMap<String, String>,
    pub truth: Vec<DealTruth>,
}

impl SyntheticSample {
    pub fn store(&self) -> MarketStore {
        let mut prices = self.prices.clone();
        prices.insert(BENCHMARK_ID.to_string(), self.benchmark.clone());
        MarketStore {
            prices,
            calendars: BTreeMap::from([(BENCHMARK_ID.to_string(), self.calendar.clone())]),
        }
    }
}

const DM_NATIONS: [&str; 4] = ["Japan", "Singapore", "United States", "France"];
const EM_NATIONS: [&str; 4] = ["Thailand", "Malaysia", "Indonesia", "India"];
const SIC_CODES: [&str; 8] = ["0111", "2011", "2015", "3571", "4911", "5411", "6021", "7011"];

/// One deal per firm. Each firm's announcement falls on a calendar day with
/// enough history for the default estimation window and room for the
/// widest standard event window.
pub fn inject_events(market: &SyntheticMarket, spec: &SimSpec) -> Result<SyntheticSample> {
    let n = spec.n_days;
    let last_allowed = n - 1 - POST_EVENT_DAYS;
    let dates = market.calendar.dates();
    let mut prices = BTreeMap::new();
    let mut deals = Vec::with_capacity(market.firms.len());
    let mut benchmarks = BTreeMap::new();
    let mut truth = Vec::with_capacity(market.firms.len());
    for (i, firm) in market.firms.iter().enumerate() {
        // Continue firm i's stream past its return draws by using a
        // separate stream block for deal attributes.
        let mut rng = spec.stream((spec.n_firms + 1 + i) as u64);
        let index = match spec.announcement_index {
            Some(k) => k,
            None => rng.random_range(MIN_EVENT_INDEX..=last_allowed),
        };
        if index < MIN_EVENT_INDEX || index > last_allowed {
            return Err(Error::EventTooEarly {
                firm: firm.id.clone(),
                index,
                needed: MIN_EVENT_INDEX,
            });
        }
        let domestic = rng.random::<f64>() < spec.domestic_fraction;
        let dm = !domestic && rng.random::<f64>() < spec.dm_fraction;
        let control = rng.random::<f64>() < spec.control_fraction;
        let nation = if domestic {
            "Vietnam"
        } else if dm {
            DM_NATIONS[rng.random_range(0..DM_NATIONS.len())]
        } else {
            EM_NATIONS[rng.random_range(0..EM_NATIONS.len())]
        };
        let after: f64 = if control {
            if rng.random::<f64>() < 0.3 {
                100.0
            } else {
                rng.random_range(50.0..100.0)
            }
        } else {
            rng.random_range(5.0..50.0)
        };
        let before: f64 = if rng.random::<f64>() < 0.7 {
            0.0
        } else {
            rng.random_range(0.0..after.min(50.0) - 1.0).max(0.0)
        };
        let after = round2(after);
        let before = round2(before).min(after);
        let market_cap = round2((6.0 + rng.sample::<f64, _>(StandardNormal)).exp());
        let value = round2((3.0 + rng.sample::<f64, _>(StandardNormal)).exp());
        let missing_value = rng.random::<f64>() < spec.missing_value_fraction;
        let acquirer_sic = SIC_CODES[rng.random_range(0..SIC_CODES.len())];
        let target_sic = SIC_CODES[rng.random_range(0..SIC_CODES.len())];
        let target_public = rng.random::<f64>() < 0.3;

        let e = &spec.effects;
        let feature_shock = e.control * flag(control) + e.dm * flag(dm) + e.control_dm * flag(control && dm);
        let mut returns = firm.log_returns.clone();
        let mut injected = 0.0;
        for &offset in &spec.event_offsets {
            let day = index as i64 + offset as i64;
            if day >= 1 && (day as usize) < n {
                returns[day as usize - 1] += spec.event_effect;
                injected += spec.event_effect;
            }
        }
        returns[index - 1] += feature_shock;
        injected += feature_shock;

        let deal_id = format!("D{i:04}");
        let announced = dates[index];
        deals.push(DealRecord {
            deal_id: deal_id.clone(),
            announcement_date: announced,
            effective_date: Some(announced + Duration::days(30)),
            status: DealStatus::Completed,
            acquirer_id: firm.id.clone(),
            acquirer_nation: nation.to_string(),
            acquirer_public: true,
            acquirer_sic: acquirer_sic.to_string(),
            acquirer_market_cap: Some(market_cap),
            target_nation: "Vietnam".to_string(),
            target_public,
            target_sic: target_sic.to_string(),
            pct_owned_before: Some(before),
            pct_acquired: Some(round2(after - before)),
            pct_owned_after: Some(after),
            transaction_value: (!missing_value).then_some(value),
            clean_event: true,
        });
        benchmarks.insert(deal_id.clone(), BENCHMARK_ID.to_string());
        prices.insert(firm.id.clone(), prices_from_returns(&firm.id, dates, &returns));
        truth.push(DealTruth {
            deal_id,
            alpha: firm.alpha,
            beta: firm.beta,
            announcement_index: index,
            control,
            dm,
            injected,
        });
    }
    Ok(SyntheticSample {
        calendar: market.calendar.clone(),
        benchmark: market.benchmark(),
        prices,
        deals,
        benchmarks,
        truth,
    })
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn simulate(spec: &SimSpec, exec: Execution) -> Result<SyntheticSample> {
    let market = generate_market(spec, exec)?;
    inject_events(&market, spec)
}

/// Brown–Warner test of mean CAR over `window` on one synthetic sample.
pub fn brown_warner_trial(
    spec: &SimSpec,
    window: &EventWindow,
    mode: DivisorMode,
    exec: Execution,
) -> Result<TTestResult> {
    let sample = simulate(spec, exec)?;
    let study = run_event_study(
        &sample.deals,
        &sample.store(),
        &sample.benchmarks,
        &EstimationConfig::default(),
        std::slice::from_ref(window),
        exec,
    )?;
    let cars: Vec<f64> = study
        .results
        .iter()
        .map(|r| r.car(window).ok_or(Error::MissingAr { offset: window.start }))
        .collect::<Result<_>>()?;
    let fits: Vec<_> = study.results.iter().map(|r| &r.fit).collect();
    brown_warner_t(&cars, &fits, window.days(), mode)
}

/// Share of `trials` seeded samples whose two-sided Brown–Warner p falls
/// below `level`. Trial `k` uses seed `spec.seed + k`; trials run through
/// `exec`, each one sequentially inside.
pub fn rejection_rate(
    spec: &SimSpec,
    window: &EventWindow,
    level: f64,
    trials: u64,
    exec: Execution,
) -> Result<f64> {
    let outcomes = exec.map_range(0..trials, |k| {
        let trial = SimSpec {
            seed: spec.seed.wrapping_add(k),
            ..spec.clone()
        };
        brown_warner_trial(&trial, window, DivisorMode::default(), Execution::Sequential)
            .map(|t| t.p_two_tail < level)
    });
    let mut rejected = 0usize;
    for o in outcomes {
        rejected += usize::from(o?);
    }
    Ok(rejected as f64 / trials as f64)
}
