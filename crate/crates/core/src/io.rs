//! CSV ingestion and emission.
//!
//! Every reader checks the header row first: a missing required column or
//! an unexpected one is an error naming that column. Dates are
//! `YYYY-MM-DD`, decimals use `.`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::event::{CarResult, EventStudyOutput, EventWindow, MarketModelFit};
use crate::market_data::{PriceSeries, TradingCalendar};
use crate::report::{fmt_num, fmt_opt};
use crate::screening::{
    ClassificationTable, DealRecord, FunnelReport, IncomeClass, IncomeThresholds, ThresholdTable,
};

pub const PRICE_COLUMNS: [&str; 3] = ["instrument_id", "date", "close"];
pub const CALENDAR_COLUMNS: [&str; 2] = ["market_id", "date"];
pub const BENCHMARK_COLUMNS: [&str; 2] = ["deal_id", "benchmark_instrument_id"];
pub const CAR_COLUMNS: [&str; 8] = [
    "deal_id",
    "window_start",
    "window_end",
    "car",
    "alpha",
    "beta",
    "resid_var",
    "n_est",
];
pub const THRESHOLD_COLUMNS: [&str; 4] = ["year", "low_max", "lm_max", "um_max"];
pub const CLASS_COLUMNS: [&str; 3] = ["nation", "year", "class"];
pub const GNI_COLUMNS: [&str; 3] = ["nation", "year", "gni"];
pub const CAP_COLUMNS: [&str; 3] = ["instrument_id", "date", "market_cap"];
pub const FUNNEL_COLUMNS: [&str; 3] = ["criterion", "label", "count_after"];
pub const EXCLUSION_COLUMNS: [&str; 2] = ["deal_id", "reason"];

/// Header check: returns the names of optional columns that are absent.
fn check_header<'a>(
    path: &str,
    header: &csv::StringRecord,
    required: &[&'a str],
    optional: &[&'a str],
) -> Result<Vec<&'a str>> {
    for h in header.iter() {
        if !required.contains(&h) && !optional.contains(&h) {
            return Err(Error::MissingColumn {
                path: path.to_string(),
                column: format!("unexpected column `{h}`"),
            });
        }
    }
    for r in required {
        if !header.iter().any(|h| h == *r) {
            return Err(Error::MissingColumn {
                path: path.to_string(),
                column: (*r).to_string(),
            });
        }
    }
    Ok(optional
        .iter()
        .filter(|o| !header.iter().any(|h| h == **o))
        .copied()
        .collect())
}

fn csv_error(path: &str, header: &csv::StringRecord, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => Error::Parse {
            path: path.to_string(),
            row,
            column: err
                .field()
                .and_then(|i| header.get(i as usize))
                .unwrap_or("?")
                .to_string(),
            message: err.kind().to_string(),
        },
        _ => Error::Csv {
            path: path.to_string(),
            message: e.to_string(),
        },
    }
}

/// Date parse failures come back without a field index; point them at the
/// first date column that does not parse.
fn locate_date_error(e: Error, header: &csv::StringRecord, rec: &csv::StringRecord) -> Error {
    match e {
        Error::Parse { path, row, column, message } if column == "?" => {
            let column = header
                .iter()
                .zip(rec.iter())
                .find(|(h, v)| {
                    (*h == "date" || h.ends_with("_date"))
                        && !v.is_empty()
                        && v.parse::<NaiveDate>().is_err()
                })
                .map_or(column, |(h, _)| h.to_string());
            Error::Parse { path, row, column, message }
        }
        e => e,
    }
}

/// Parses CSV text into records, checking columns first.
pub fn parse_records<T: DeserializeOwned>(
    path: &str,
    text: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<(Vec<T>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_string(),
            message: e.to_string(),
        })?
        .clone();
    let absent = check_header(path, &header, required, optional)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, &header, e))?;
        out.push(
            rec.deserialize(Some(&header))
                .map_err(|e| locate_date_error(csv_error(path, &header, e), &header, &rec))?,
        );
    }
    Ok((out, absent.into_iter().map(str::to_string).collect()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(serde::Deserialize)]
struct PriceRow {
    instrument_id: String,
    date: NaiveDate,
    close: f64,
}

/// Rows may be in any order; each instrument's rows are sorted by date.
pub fn parse_prices(path: &str, text: &str) -> Result<BTreeMap<String, PriceSeries>> {
    let (rows, _): (Vec<PriceRow>, _) = parse_records(path, text, &PRICE_COLUMNS, &[])?;
    let mut grouped: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.instrument_id).or_default().push((r.date, r.close));
    }
    grouped
        .into_iter()
        .map(|(id, mut obs)| {
            obs.sort_by_key(|(d, _)| *d);
            let series = PriceSeries::new(id.clone(), obs)?;
            Ok((id, series))
        })
        .collect()
}

pub fn prices_csv<'a>(series: impl IntoIterator<Item = &'a PriceSeries>) -> String {
    let mut s = PRICE_COLUMNS.join(",");
    s.push('\n');
    for p in series {
        for (d, c) in p.observations() {
            let _ = writeln!(s, "{},{d},{}", p.instrument_id(), fmt_num(*c));
        }
    }
    s
}

#[derive(serde::Deserialize)]
struct CalendarRow {
    market_id: String,
    date: NaiveDate,
}

pub fn parse_calendars(path: &str, text: &str) -> Result<BTreeMap<String, TradingCalendar>> {
    let (rows, _): (Vec<CalendarRow>, _) = parse_records(path, text, &CALENDAR_COLUMNS, &[])?;
    let mut grouped: BTreeMap<String, Vec<NaiveDate>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.market_id).or_default().push(r.date);
    }
    grouped
        .into_iter()
        .map(|(id, mut dates)| {
            dates.sort();
            Ok((id.clone(), TradingCalendar::new(id, dates)?))
        })
        .collect()
}

pub fn calendar_csv(calendar: &TradingCalendar) -> String {
    let mut s = CALENDAR_COLUMNS.join(",");
    s.push('\n');
    for d in calendar.dates() {
        let _ = writeln!(s, "{},{d}", calendar.market_id());
    }
    s
}

/// Deals plus warnings. A missing `clean_event` column defaults every deal
/// to clean and produces a warning.
pub fn parse_deals(path: &str, text: &str) -> Result<(Vec<DealRecord>, Vec<String>)> {
    let required: Vec<&str> = DealRecord::COLUMNS[..16].to_vec();
    let (deals, absent): (Vec<DealRecord>, _) = parse_records(path, text, &required, &["clean_event"])?;
    let warnings = absent
        .iter()
        .map(|c| {
            format!(
                "{path}: column `{c}` absent; every deal treated as free of confounding events"
            )
        })
        .collect();
    Ok((deals, warnings))
}

pub fn deals_csv(deals: &[DealRecord]) -> String {
    let mut s = DealRecord::COLUMNS.join(",");
    s.push('\n');
    let b = |v: bool| if v { "true" } else { "false" };
    for d in deals {
        let status = match d.status {
            crate::screening::DealStatus::Completed => "completed",
            crate::screening::DealStatus::Pending => "pending",
            crate::screening::DealStatus::Withdrawn => "withdrawn",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            d.deal_id,
            d.announcement_date,
            d.effective_date.map(|x| x.to_string()).unwrap_or_default(),
            status,
            d.acquirer_id,
            quote(&d.acquirer_nation),
            b(d.acquirer_public),
            d.acquirer_sic,
            fmt_opt(d.acquirer_market_cap),
            quote(&d.target_nation),
            b(d.target_public),
            d.target_sic,
            fmt_opt(d.pct_owned_before),
            fmt_opt(d.pct_acquired),
            fmt_opt(d.pct_owned_after),
            fmt_opt(d.transaction_value),
            b(d.clean_event),
        );
    }
    s
}

fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(serde::Deserialize)]
struct BenchmarkRow {
    deal_id: String,
    benchmark_instrument_id: String,
}

pub fn parse_benchmarks(path: &str, text: &str) -> Result<BTreeMap<String, String>> {
    let (rows, _): (Vec<BenchmarkRow>, _) = parse_records(path, text, &BENCHMARK_COLUMNS, &[])?;
    Ok(rows
        .into_iter()
        .map(|r| (r.deal_id, r.benchmark_instrument_id))
        .collect())
}

pub fn benchmarks_csv(map: &BTreeMap<String, String>) -> String {
    let mut s = BENCHMARK_COLUMNS.join(",");
    s.push('\n');
    for (d, b) in map {
        let _ = writeln!(s, "{d},{b}");
    }
    s
}

/// One row per deal and window.
pub fn cars_csv(results: &[CarResult]) -> String {
    let mut s = CAR_COLUMNS.join(",");
    s.push('\n');
    for r in results {
        for (w, car) in &r.cars {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.deal_id,
                w.start,
                w.end,
                fmt_num(*car),
                fmt_num(r.fit.alpha),
                fmt_num(r.fit.beta),
                fmt_num(r.fit.residual_variance),
                r.fit.n_est
            );
        }
    }
    s
}

/// One row per deal, one `car_s_e` column per window (`m` marks a
/// negative bound). Cells are empty where a deal lacks that window.
pub fn car_wide_csv(results: &[CarResult], windows: &[EventWindow]) -> String {
    let bound = |x: i32| if x < 0 { format!("m{}", -x) } else { x.to_string() };
    let mut s = String::from("deal_id");
    for w in windows {
        let _ = write!(s, ",car_{}_{}", bound(w.start), bound(w.end));
    }
    s.push('\n');
    for r in results {
        s.push_str(&r.deal_id);
        for w in windows {
            s.push(',');
            if let Some(c) = r.car(w) {
                s.push_str(&fmt_num(c));
            }
        }
        s.push('\n');
    }
    s
}

#[derive(serde::Deserialize)]
struct CarRow {
    deal_id: String,
    window_start: i32,
    window_end: i32,
    car: f64,
    alpha: f64,
    beta: f64,
    resid_var: f64,
    n_est: usize,
}

/// Rebuilds per-deal CAR results. Daily ARs and estimation residuals are not
/// part of the file, so the fits carry only their summary statistics.
pub fn parse_cars(path: &str, text: &str) -> Result<Vec<CarResult>> {
    let (rows, _): (Vec<CarRow>, _) = parse_records(path, text, &CAR_COLUMNS, &[])?;
    let mut by_deal: BTreeMap<String, CarResult> = BTreeMap::new();
    for (i, r) in rows.into_iter().enumerate() {
        let window = EventWindow::span(r.window_start, r.window_end).map_err(|e| Error::Parse {
            path: path.to_string(),
            row: i + 2,
            column: "window_start".into(),
            message: e.to_string(),
        })?;
        let entry = by_deal.entry(r.deal_id.clone()).or_insert_with(|| CarResult {
            deal_id: r.deal_id.clone(),
            abnormal_returns: BTreeMap::new(),
            cars: Vec::new(),
            fit: MarketModelFit {
                alpha: r.alpha,
                beta: r.beta,
                alpha_se: f64::NAN,
                beta_se: f64::NAN,
                est_offsets: Vec::new(),
                est_residuals: Vec::new(),
                residual_variance: r.resid_var,
                n_est: r.n_est,
            },
        });
        entry.cars.push((window, r.car));
    }
    Ok(by_deal.into_values().collect())
}

pub fn exclusions_csv(out: &EventStudyOutput) -> String {
    let mut s = EXCLUSION_COLUMNS.join(",");
    s.push('\n');
    for e in &out.exclusions {
        let _ = writeln!(s, "{},{}", e.deal_id, quote(&e.reason.to_string()));
    }
    s
}

#[derive(serde::Deserialize)]
struct ThresholdRow {
    year: i32,
    low_max: u32,
    lm_max: u32,
    um_max: u32,
}

pub fn parse_thresholds(path: &str, text: &str) -> Result<ThresholdTable> {
    let (rows, _): (Vec<ThresholdRow>, _) = parse_records(path, text, &THRESHOLD_COLUMNS, &[])?;
    let mut table = ThresholdTable::default();
    for r in rows {
        table.insert(IncomeThresholds::new(r.year, r.low_max, r.lm_max, r.um_max)?);
    }
    Ok(table)
}

pub fn thresholds_csv(table: &ThresholdTable) -> String {
    let mut s = THRESHOLD_COLUMNS.join(",");
    s.push('\n');
    for t in table.iter() {
        let _ = writeln!(s, "{},{},{},{}", t.year, t.low_max, t.lower_middle_max, t.upper_middle_max);
    }
    s
}

#[derive(serde::Deserialize)]
struct ClassRow {
    nation: String,
    year: i32,
    class: String,
}

pub fn parse_classes(path: &str, text: &str) -> Result<ClassificationTable> {
    let (rows, _): (Vec<ClassRow>, _) = parse_records(path, text, &CLASS_COLUMNS, &[])?;
    let mut table = ClassificationTable::default();
    for (i, r) in rows.into_iter().enumerate() {
        let class: IncomeClass = r.class.parse().map_err(|e: Error| Error::Parse {
            path: path.to_string(),
            row: i + 2,
            column: "class".into(),
            message: e.to_string(),
        })?;
        table.insert(&r.nation, r.year, class);
    }
    Ok(table)
}

pub fn classes_csv(table: &ClassificationTable) -> String {
    let mut s = CLASS_COLUMNS.join(",");
    s.push('\n');
    for c in table.iter() {
        let _ = writeln!(s, "{},{},{}", quote(&c.nation), c.year, c.class);
    }
    s
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct GniRow {
    pub nation: String,
    pub year: i32,
    pub gni: f64,
}

pub fn parse_gni(path: &str, text: &str) -> Result<Vec<GniRow>> {
    Ok(parse_records(path, text, &GNI_COLUMNS, &[])?.0)
}

#[derive(serde::Deserialize)]
struct CapRow {
    instrument_id: String,
    date: NaiveDate,
    market_cap: f64,
}

/// Market capitalization series keyed by instrument.
pub fn parse_caps(path: &str, text: &str) -> Result<BTreeMap<String, PriceSeries>> {
    let (rows, _): (Vec<CapRow>, _) = parse_records(path, text, &CAP_COLUMNS, &[])?;
    let mut grouped: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.instrument_id).or_default().push((r.date, r.market_cap));
    }
    grouped
        .into_iter()
        .map(|(id, mut obs)| {
            obs.sort_by_key(|(d, _)| *d);
            Ok((id.clone(), PriceSeries::new(id, obs)?))
        })
        .collect()
}

pub fn funnel_csv(report: &FunnelReport) -> String {
    let mut s = FUNNEL_COLUMNS.join(",");
    s.push('\n');
    for step in &report.steps {
        let _ = writeln!(s, "{},{},{}", step.criterion, quote(step.label), step.count_after);
    }
    s
}
