//! Dollar value gains, net synergy and sample summary tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{CarResult, EventWindow, Exclusion};
use crate::inference::{
    cross_sectional_t, distribution_stats, wilcoxon_rank_sum, wilcoxon_signed_rank,
    DistributionStats, RankTestResult, Tail,
};
use crate::market_data::{build_event_clock, PriceSeries, TradingCalendar};
use crate::report::{fmt_fixed, fmt_num, fmt_opt, se_cell, TextTable, STAR_NOTE};
use crate::screening::{DealFeatures, DealRecord, SampleLabel, Sector};

/// The three days around the announcement.
pub fn dvg_window() -> EventWindow {
    EventWindow::span(-1, 1).expect("ordered window")
}

/// `cap * sum(AR_t)` over `window`.
pub fn dollar_value_gain(ars: &BTreeMap<i32, f64>, market_cap: f64, window: &EventWindow) -> Result<f64> {
    if !(market_cap > 0.0) {
        return Err(Error::NonPositiveMarketCap(market_cap));
    }
    let mut sum = 0.0;
    for offset in window.offsets() {
        sum += ars.get(&offset).ok_or(Error::MissingAr { offset })?;
    }
    Ok(market_cap * sum)
}

pub fn net_synergy(dvg: f64, transaction_value: Option<f64>) -> Result<f64> {
    match transaction_value {
        None => Err(Error::MissingTransactionValue),
        Some(tv) if !(tv > 0.0) => Err(Error::NonPositiveTransactionValue(tv)),
        Some(tv) => Ok(dvg / tv),
    }
}

/// Market capitalization on the trading day before day 0 from a cap series,
/// falling back to the deal's static field.
pub fn market_cap_before(
    deal: &DealRecord,
    caps: Option<&PriceSeries>,
    calendar: &TradingCalendar,
) -> Option<f64> {
    let from_series = caps.and_then(|series| {
        let clock = build_event_clock(calendar, deal.announcement_date).ok()?;
        let date = clock.date_at(-1)?;
        let obs = series.observations();
        obs.binary_search_by_key(&date, |(d, _)| *d).ok().map(|i| obs[i].1)
    });
    from_series.or(deal.acquirer_market_cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueGain {
    pub deal_id: String,
    pub control: bool,
    pub car01: Option<f64>,
    pub car11: Option<f64>,
    pub car21: Option<f64>,
    pub market_cap_used: f64,
    pub dollar_value_gain: f64,
    pub transaction_value: Option<f64>,
    /// Absent without a usable transaction value.
    pub net_synergy: Option<f64>,
}

pub const GAINS_COLUMNS: [&str; 9] = [
    "deal_id",
    "control",
    "car01",
    "car11",
    "car21",
    "market_cap",
    "dvg",
    "transaction_value",
    "net_synergy",
];

fn liquidity_car(r: &CarResult, start: i32) -> Option<f64> {
    r.car(&EventWindow::span(start, 1).ok()?)
        .or_else(|| {
            let w = EventWindow::span(start, 1).ok()?;
            w.offsets().map(|o| r.abnormal_returns.get(&o).copied()).sum()
        })
}

/// Per-deal gains. `caps` maps deal id to the market cap to use; deals
/// without one, without features or with missing ARs are excluded.
pub fn value_gains(
    cars: &[CarResult],
    features: &[DealFeatures],
    deals: &[DealRecord],
    caps: &BTreeMap<String, f64>,
    window: &EventWindow,
) -> (Vec<ValueGain>, Vec<Exclusion>) {
    let control: BTreeMap<&str, bool> = features.iter().map(|f| (f.deal_id.as_str(), f.control)).collect();
    let tv: BTreeMap<&str, Option<f64>> = deals
        .iter()
        .map(|d| (d.deal_id.as_str(), d.transaction_value))
        .collect();
    let mut sorted: Vec<&CarResult> = cars.iter().collect();
    sorted.sort_by(|a, b| a.deal_id.cmp(&b.deal_id));
    let mut gains = Vec::new();
    let mut excluded = Vec::new();
    for r in sorted {
        let id = r.deal_id.as_str();
        let outcome = (|| {
            let control = *control.get(id).ok_or_else(|| Error::MissingOwnership { deal_id: id.into() })?;
            let cap = *caps.get(id).ok_or_else(|| Error::InvalidDeal {
                deal_id: id.into(),
                reason: "no market capitalization".into(),
            })?;
            let dvg = match r.car(window) {
                // CARs read back from file carry no daily ARs
                Some(car) if r.abnormal_returns.is_empty() => {
                    if !(cap > 0.0) {
                        return Err(Error::NonPositiveMarketCap(cap));
                    }
                    cap * car
                }
                _ => dollar_value_gain(&r.abnormal_returns, cap, window)?,
            };
            let transaction_value = tv.get(id).copied().flatten();
            Ok(ValueGain {
                deal_id: id.to_string(),
                control,
                car01: liquidity_car(r, 0),
                car11: liquidity_car(r, -1),
                car21: liquidity_car(r, -2),
                market_cap_used: cap,
                dollar_value_gain: dvg,
                transaction_value,
                net_synergy: net_synergy(dvg, transaction_value).ok(),
            })
        })();
        match outcome {
            Ok(g) => gains.push(g),
            Err(reason) => excluded.push(Exclusion {
                deal_id: id.to_string(),
                reason,
            }),
        }
    }
    (gains, excluded)
}

pub fn gains_csv(gains: &[ValueGain]) -> String {
    let mut s = GAINS_COLUMNS.join(",");
    s.push('\n');
    for g in gains {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            g.deal_id,
            u8::from(g.control),
            fmt_opt(g.car01),
            fmt_opt(g.car11),
            fmt_opt(g.car21),
            fmt_num(g.market_cap_used),
            fmt_num(g.dollar_value_gain),
            fmt_opt(g.transaction_value),
            fmt_opt(g.net_synergy),
        );
    }
    s
}

pub const PANEL_METRICS: [&str; 7] = [
    "CAR (0,1)",
    "CAR (-1,1)",
    "CAR (-2,1)",
    "Acquirer market capitalization ($M)",
    "Dollar value gain per transaction ($M)",
    "Transaction value ($M)",
    "Net synergy return per transaction",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainsPanel {
    pub title: String,
    pub control: bool,
    /// One entry per [`PANEL_METRICS`]; absent when no deal has the value.
    pub stats: Vec<Option<DistributionStats>>,
    /// Sum of dollar value gains in deal-id order.
    pub aggregate_dvg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianComparison {
    pub window: String,
    /// Control against non-control CARs, independent samples.
    pub rank_sum: Option<RankTestResult>,
    /// Control CARs against the non-control median.
    pub signed_rank: Option<RankTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainsReport {
    pub panels: [GainsPanel; 2],
    pub comparisons: Vec<MedianComparison>,
}

fn panel(title: &str, control: bool, gains: &[&ValueGain]) -> GainsPanel {
    let column = |f: &dyn Fn(&ValueGain) -> Option<f64>| -> Option<DistributionStats> {
        let v: Vec<f64> = gains.iter().filter_map(|g| f(g)).collect();
        distribution_stats(&v).ok()
    };
    GainsPanel {
        title: title.to_string(),
        control,
        stats: vec![
            column(&|g| g.car01),
            column(&|g| g.car11),
            column(&|g| g.car21),
            column(&|g| Some(g.market_cap_used)),
            column(&|g| Some(g.dollar_value_gain)),
            column(&|g| g.transaction_value),
            column(&|g| g.net_synergy),
        ],
        aggregate_dvg: gains.iter().map(|g| g.dollar_value_gain).sum(),
    }
}

fn median(v: &[f64]) -> Option<f64> {
    distribution_stats(v).ok().map(|s| s.median)
}

/// Control and non-control panels plus rank comparisons of their CARs.
pub fn gains_panel(gains: &[ValueGain]) -> GainsReport {
    let mut sorted: Vec<&ValueGain> = gains.iter().collect();
    sorted.sort_by(|a, b| a.deal_id.cmp(&b.deal_id));
    let (ctrl, rest): (Vec<&ValueGain>, Vec<&ValueGain>) = sorted.into_iter().partition(|g| g.control);
    let mut comparisons = Vec::new();
    let pickers: [(&str, fn(&ValueGain) -> Option<f64>); 3] = [
        ("(0,1)", |g| g.car01),
        ("(-1,1)", |g| g.car11),
        ("(-2,1)", |g| g.car21),
    ];
    for (label, pick) in pickers {
        let a: Vec<f64> = ctrl.iter().filter_map(|g| pick(g)).collect();
        let b: Vec<f64> = rest.iter().filter_map(|g| pick(g)).collect();
        comparisons.push(MedianComparison {
            window: label.to_string(),
            rank_sum: wilcoxon_rank_sum(&a, &b).ok(),
            signed_rank: median(&b).and_then(|m| wilcoxon_signed_rank(&a, m).ok()),
        });
    }
    GainsReport {
        panels: [
            panel("Panel A: Developed-market acquirers gain majority control", true, &ctrl),
            panel("Panel B: Developed-market acquirers do not gain majority control", false, &rest),
        ],
        comparisons,
    }
}

fn pct(x: f64) -> String {
    format!("{}%", fmt_fixed(100.0 * x, 3))
}

impl GainsReport {
    pub fn render(&self) -> String {
        let mut header = vec![String::new()];
        header.extend(PANEL_METRICS.iter().map(|s| s.to_string()));
        let mut t = TextTable::new("Value gains by acquirers", header);
        for p in &self.panels {
            t.push(vec![p.title.clone()]);
            let rows: [(&str, fn(&DistributionStats) -> f64); 5] = [
                ("Mean", |s| s.mean),
                ("Median", |s| s.median),
                ("Top quartile", |s| s.top_quartile),
                ("Bottom quartile", |s| s.bottom_quartile),
                ("Std dev", |s| s.std_dev),
            ];
            for (name, get) in rows {
                let mut row = vec![name.to_string()];
                for (i, s) in p.stats.iter().enumerate() {
                    row.push(match s {
                        Some(s) if i < 3 => pct(get(s)),
                        Some(s) => fmt_fixed(get(s), 3),
                        None => "-".into(),
                    });
                }
                t.push(row);
            }
            let mut n = vec!["N".to_string()];
            n.extend(p.stats.iter().map(|s| s.map_or(0, |s| s.n).to_string()));
            t.push(n);
            t.note(format!(
                "{}: aggregate dollar value gain {} $M",
                p.title,
                fmt_fixed(p.aggregate_dvg, 3)
            ));
        }
        for c in &self.comparisons {
            let show = |r: &Option<RankTestResult>| match r {
                Some(r) => format!(
                    "{} statistic {} p {}{}",
                    r.method.label(),
                    fmt_num(r.statistic),
                    fmt_fixed(r.p_value, 3),
                    if r.exact { " (exact)" } else { " (normal approximation)" }
                ),
                None => "not available".into(),
            };
            t.note(format!(
                "Median CAR {} control vs non-control: {}; control against non-control median: {}",
                c.window,
                show(&c.rank_sum),
                show(&c.signed_rank)
            ));
        }
        t.render()
    }
}

/// Table-3-style characteristics of one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub sample: String,
    pub description: String,
    pub n: usize,
    pub median_transaction_value: Option<f64>,
    pub median_market_cap: Option<f64>,
    pub private_target_pct: f64,
    pub diversifying_pct: f64,
    pub median_car: Vec<Option<f64>>,
    pub median_car_control: Vec<Option<f64>>,
    pub acquirer_sector_pct: [f64; 7],
    pub target_sector_pct: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub windows: Vec<EventWindow>,
    pub samples: Vec<SampleSummary>,
}

fn share(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * count as f64 / n as f64
    }
}

fn sector_shares(sectors: impl Iterator<Item = Sector>, n: usize) -> [f64; 7] {
    let mut counts = [0usize; 7];
    for s in sectors {
        counts[s as usize] += 1;
    }
    counts.map(|c| share(c, n))
}

struct Lookup<'a> {
    deals: BTreeMap<&'a str, &'a DealRecord>,
    features: BTreeMap<&'a str, &'a DealFeatures>,
    cars: BTreeMap<&'a str, &'a CarResult>,
}

impl<'a> Lookup<'a> {
    fn new(deals: &'a [DealRecord], features: &'a [DealFeatures], cars: &'a [CarResult]) -> Self {
        Self {
            deals: deals.iter().map(|d| (d.deal_id.as_str(), d)).collect(),
            features: features.iter().map(|f| (f.deal_id.as_str(), f)).collect(),
            cars: cars.iter().map(|c| (c.deal_id.as_str(), c)).collect(),
        }
    }

    /// Deals of `sample` that have features, in id order.
    fn members(&self, labels: &[(String, SampleLabel)], sample: &SampleLabel) -> Vec<&'a DealFeatures> {
        let mut ids: Vec<&str> = labels
            .iter()
            .filter(|(_, l)| l == sample)
            .map(|(id, _)| id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().filter_map(|id| self.features.get(id).copied()).collect()
    }
}

pub fn summary_table(
    deals: &[DealRecord],
    labels: &[(String, SampleLabel)],
    cars: &[CarResult],
    features: &[DealFeatures],
    windows: &[EventWindow],
) -> SummaryTable {
    let lk = Lookup::new(deals, features, cars);
    let samples = SampleLabel::SAMPLES
        .iter()
        .map(|sample| {
            let members = lk.members(labels, sample);
            let n = members.len();
            let values = |f: &dyn Fn(&DealRecord) -> Option<f64>| -> Vec<f64> {
                members
                    .iter()
                    .filter_map(|m| lk.deals.get(m.deal_id.as_str()).and_then(|d| f(d)))
                    .collect()
            };
            let car_medians = |control_only: bool| -> Vec<Option<f64>> {
                windows
                    .iter()
                    .map(|w| {
                        let v: Vec<f64> = members
                            .iter()
                            .filter(|m| !control_only || m.control)
                            .filter_map(|m| lk.cars.get(m.deal_id.as_str())?.car(w))
                            .collect();
                        median(&v)
                    })
                    .collect()
            };
            SampleSummary {
                sample: sample.name().to_string(),
                description: sample.description().to_string(),
                n,
                median_transaction_value: median(&values(&|d| d.transaction_value)),
                median_market_cap: median(&values(&|d| d.acquirer_market_cap)),
                private_target_pct: share(members.iter().filter(|m| !m.listed_target).count(), n),
                diversifying_pct: share(members.iter().filter(|m| m.diversifying).count(), n),
                median_car: car_medians(false),
                median_car_control: car_medians(true),
                acquirer_sector_pct: sector_shares(members.iter().map(|m| m.acquirer_sector), n),
                target_sector_pct: sector_shares(members.iter().map(|m| m.target_sector), n),
            }
        })
        .collect();
    SummaryTable {
        windows: windows.to_vec(),
        samples,
    }
}

impl SummaryTable {
    pub fn render(&self) -> String {
        let mut header = vec![String::new()];
        header.extend(self.samples.iter().map(|s| format!("Sample ({})", s.sample)));
        let mut t = TextTable::new("Summary statistics: firm and deal characteristics", header);
        let mut row = |label: &str, f: &dyn Fn(&SampleSummary) -> String| {
            let mut r = vec![label.to_string()];
            r.extend(self.samples.iter().map(f));
            t.push(r);
        };
        let money = |x: Option<f64>| x.map_or("-".into(), |v| fmt_fixed(v, 3));
        let percent = |x: f64| format!("{}%", fmt_fixed(x, 3));
        let car = |x: Option<f64>| x.map_or("-".into(), |v| format!("{}%", fmt_fixed(100.0 * v, 3)));
        row("Firm and deal characteristics", &|_| String::new());
        row("Number of deals", &|s| s.n.to_string());
        row("Median transaction size ($M)", &|s| money(s.median_transaction_value));
        row("Median acquirer market capitalization ($M)", &|s| money(s.median_market_cap));
        row("Private target (%)", &|s| percent(s.private_target_pct));
        row("Diversifying acquisition (%)", &|s| percent(s.diversifying_pct));
        row("Median acquirer CAR (%)", &|_| String::new());
        for (i, w) in self.windows.iter().enumerate() {
            row(&format!("Window {w}"), &|s| car(s.median_car[i]));
        }
        row("Median acquirer CAR (%) with control acquired", &|_| String::new());
        for (i, w) in self.windows.iter().enumerate() {
            row(&format!("Window {w}"), &|s| car(s.median_car_control[i]));
        }
        row("Acquirer industry", &|_| String::new());
        for (i, sector) in Sector::ALL.iter().enumerate() {
            row(sector.label(), &|s| percent(s.acquirer_sector_pct[i]));
        }
        row("Target industry", &|_| String::new());
        for (i, sector) in Sector::ALL.iter().enumerate() {
            row(sector.label(), &|s| percent(s.target_sector_pct[i]));
        }
        t.note("Industry, private target and diversifying shares are percentages of deal count.");
        t.render()
    }
}

/// One cell of the sector grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorCell {
    pub n: usize,
    pub mean: Option<f64>,
    /// Absent for fewer than two deals.
    pub se: Option<f64>,
    pub p_value: Option<f64>,
}

impl SectorCell {
    fn from_values(v: &[f64], tail: Tail) -> Self {
        let n = v.len();
        let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
        let t = cross_sectional_t(v).ok();
        Self {
            n,
            mean,
            se: t.map(|t| t.std_error),
            p_value: t.map(|t| tail.p_value(&t)),
        }
    }

    /// `0.013*** (0.004)`, `0.014 (-)` for one deal, `-` for none.
    pub fn render(&self) -> String {
        match self.mean {
            None => "-".into(),
            Some(m) => {
                let stars = self.p_value.map_or("", crate::inference::significance_stars);
                format!("{}{} {}", fmt_fixed(m, 3), stars, se_cell(self.se))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorBlock {
    /// `None` for the whole sample.
    pub sector: Option<Sector>,
    /// `cells[sample][window] = (all, control)`.
    pub cells: Vec<Vec<(SectorCell, SectorCell)>>,
    /// Deal counts per sample, all and control.
    pub n: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorCarTable {
    pub samples: Vec<String>,
    pub windows: Vec<EventWindow>,
    pub tail: Tail,
    pub blocks: Vec<SectorBlock>,
}

/// Mean CARs by acquirer sector for each sample, all deals and control
/// deals, with one-sample t standard errors.
pub fn sector_car_table(
    labels: &[(String, SampleLabel)],
    cars: &[CarResult],
    features: &[DealFeatures],
    windows: &[EventWindow],
    tail: Tail,
) -> SectorCarTable {
    let lk = Lookup::new(&[], features, cars);
    let members: Vec<Vec<&DealFeatures>> = SampleLabel::SAMPLES
        .iter()
        .map(|s| lk.members(labels, s))
        .collect();
    let sectors = std::iter::once(None).chain(Sector::ALL.iter().copied().map(Some));
    let blocks = sectors
        .map(|sector| {
            let in_block = |m: &&&DealFeatures| sector.is_none_or(|s| m.acquirer_sector == s);
            let cells = members
                .iter()
                .map(|ms| {
                    windows
                        .iter()
                        .map(|w| {
                            let collect = |control_only: bool| -> Vec<f64> {
                                ms.iter()
                                    .filter(in_block)
                                    .filter(|m| !control_only || m.control)
                                    .filter_map(|m| lk.cars.get(m.deal_id.as_str())?.car(w))
                                    .collect()
                            };
                            (
                                SectorCell::from_values(&collect(false), tail),
                                SectorCell::from_values(&collect(true), tail),
                            )
                        })
                        .collect()
                })
                .collect();
            let n = members
                .iter()
                .map(|ms| {
                    let all: Vec<_> = ms.iter().filter(in_block).collect();
                    (all.len(), all.iter().filter(|m| m.control).count())
                })
                .collect();
            SectorBlock { sector, cells, n }
        })
        .collect();
    SectorCarTable {
        samples: SampleLabel::SAMPLES.iter().map(|s| s.name().to_string()).collect(),
        windows: windows.to_vec(),
        tail,
        blocks,
    }
}

impl SectorCarTable {
    pub fn render(&self) -> String {
        let mut header = vec![String::new(), "Windows".to_string()];
        for s in &self.samples {
            header.push(format!("{s} All deal"));
            header.push(format!("{s} Control"));
        }
        let mut t = TextTable::new("Summary statistics: CARs by sector", header);
        for (bi, b) in self.blocks.iter().enumerate() {
            if bi == 1 {
                t.push(vec!["Acquirer industry".into()]);
            }
            let label = b.sector.map_or("(All)".to_string(), |s| s.label().to_string());
            for (wi, w) in self.windows.iter().enumerate() {
                let mut row = vec![if wi == 0 { label.clone() } else { String::new() }, w.to_string()];
                for sample in &b.cells {
                    let (all, ctrl) = &sample[wi];
                    row.push(all.render());
                    row.push(ctrl.render());
                }
                t.push(row);
            }
            let mut n = vec![String::new(), if bi == 0 { "NO".into() } else { format!("N{bi}") }];
            for (a, c) in &b.n {
                n.push(a.to_string());
                n.push(c.to_string());
            }
            t.push(n);
        }
        t.note("Mean CARs with standard errors in parentheses; (-) marks a single deal, - an empty cell.");
        t.note(format!("Significance from a {} t test. {STAR_NOTE}", self.tail.label()));
        t.render()
    }
}
