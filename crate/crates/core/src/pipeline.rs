//! Report stages from deals and CARs to text and CSV artifacts.
//!
//! Each stage returns artifacts as file name to contents. Nothing here
//! touches the file system, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::Datelike;
use serde::Serialize;

use crate::cross_section::{correlation_matrix, regression_csv, run_table7, run_table9, term_label, TABLE9_SPEC};
use crate::error::Result;
use crate::event::{run_event_study, CarResult, EstimationConfig, EventStudyOutput, EventWindow};
use crate::exec::Execution;
use crate::gains::{dvg_window, gains_csv, gains_panel, market_cap_before, sector_car_table, summary_table, value_gains};
use crate::inference::{
    brown_warner_t, brown_warner_t_from_variances, cross_sectional_t, distribution_stats,
    estimation_variance_from_summary, normality_test, DivisorMode, Tail, TTestResult,
};
use crate::io;
use crate::market_data::{PriceSeries, TradingCalendar};
use crate::report::{fmt_fixed, fmt_num, TextTable, STAR_NOTE};
use crate::screening::{
    apply_funnel, derive_features, is_vietnam, ownership_transition_matrix, trading_history,
    ClassificationTable, DealFeatures, DealRecord, FunnelReport, IncomeClass, SampleLabel,
    POST_BUCKETS, PRE_BUCKETS,
};
use crate::simulate::{simulate, SimSpec};

pub type Artifacts = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub windows: Vec<EventWindow>,
    pub config: EstimationConfig,
    pub divisor: DivisorMode,
    /// Tail used for the sector CAR grid and event-window tests.
    pub tail: Tail,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            windows: EventWindow::standard(),
            config: EstimationConfig::default(),
            divisor: DivisorMode::default(),
            tail: Tail::One,
            exec: Execution::default(),
        }
    }
}

/// Deal features and sample labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classified {
    pub features: Vec<DealFeatures>,
    pub labels: Vec<(String, SampleLabel)>,
    pub warnings: Vec<String>,
}

impl Classified {
    pub fn ids_in(&self, sample: &SampleLabel) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, l)| l == sample)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn label_of(&self, deal_id: &str) -> Option<&SampleLabel> {
        self.labels.iter().find(|(id, _)| id == deal_id).map(|(_, l)| l)
    }
}

/// Labels every deal and derives features for those with a usable
/// classification. Vietnamese acquirers need no classification row.
pub fn classify_deals(deals: &[DealRecord], table: &ClassificationTable) -> Classified {
    let mut out = Classified::default();
    for d in deals {
        let year = d.announcement_date.year();
        let class = if is_vietnam(&d.acquirer_nation) {
            Some(IncomeClass::L)
        } else {
            table.get(&d.acquirer_nation, year)
        };
        let label = table.label(d);
        match class.map(|c| derive_features(d, c)) {
            Some(Ok(f)) => out.features.push(f),
            Some(Err(e)) => out.warnings.push(format!("{}: {e}", d.deal_id)),
            None => out.warnings.push(format!(
                "{}: no income class for `{}` in {year}",
                d.deal_id, d.acquirer_nation
            )),
        }
        out.labels.push((d.deal_id.clone(), label));
    }
    out.labels.sort();
    out
}

pub fn funnel_text(report: &FunnelReport, classified: &Classified) -> String {
    let mut t = TextTable::new(
        "Criteria applied and changing in observations",
        vec!["Criteria".into(), "Number of M&A transactions".into()],
    );
    t.push(vec!["Input deals".into(), report.input.to_string()]);
    for s in &report.steps {
        t.push(vec![s.label.into(), s.count_after.to_string()]);
    }
    for sample in SampleLabel::SAMPLES {
        t.push(vec![
            format!("Sample ({}) {}", sample.name(), sample.description()),
            classified.ids_in(&sample).len().to_string(),
        ]);
    }
    t.render()
}

/// Funnel, surviving deals and their sample labels.
pub fn screen(
    deals: &[DealRecord],
    prices: &BTreeMap<String, PriceSeries>,
    table: &ClassificationTable,
) -> (FunnelReport, Classified, Artifacts) {
    let history = trading_history(deals, prices);
    let report = apply_funnel(deals, &history);
    let classified = classify_deals(&report.survivors, table);
    let mut a = Artifacts::new();
    a.insert("funnel.csv".into(), io::funnel_csv(&report));
    a.insert("funnel.txt".into(), funnel_text(&report, &classified));
    a.insert("screened_deals.csv".into(), io::deals_csv(&report.survivors));
    a.insert("samples.csv".into(), samples_csv(&classified));
    (report, classified, a)
}

pub fn samples_csv(c: &Classified) -> String {
    let mut s = String::from("deal_id,sample\n");
    for (id, l) in &c.labels {
        let _ = writeln!(s, "{id},{}", l.name());
    }
    s
}

pub fn study(
    deals: &[DealRecord],
    store: &crate::event::MarketStore,
    benchmarks: &BTreeMap<String, String>,
    opts: &PipelineOptions,
) -> Result<(EventStudyOutput, Artifacts)> {
    let out = run_event_study(deals, store, benchmarks, &opts.config, &opts.windows, opts.exec)?;
    let mut a = Artifacts::new();
    a.insert("cars.csv".into(), io::cars_csv(&out.results));
    a.insert("cars_wide.csv".into(), io::car_wide_csv(&out.results, &opts.windows));
    a.insert("exclusions.csv".into(), io::exclusions_csv(&out));
    Ok((out, a))
}

/// Brown–Warner test over `window`, from stored residuals when every fit
/// has them and from the fits' variance summaries otherwise.
pub fn brown_warner_for(results: &[&CarResult], window: &EventWindow, mode: DivisorMode) -> Result<TTestResult> {
    let cars: Vec<f64> = results
        .iter()
        .map(|r| r.car(window).ok_or(crate::Error::MissingOffset { offset: window.start }))
        .collect::<Result<_>>()?;
    if results.iter().all(|r| !r.fit.est_residuals.is_empty()) {
        let fits: Vec<_> = results.iter().map(|r| &r.fit).collect();
        return brown_warner_t(&cars, &fits, window.days(), mode);
    }
    let variances: Vec<f64> = results
        .iter()
        .map(|r| estimation_variance_from_summary(r.fit.residual_variance, r.fit.n_est, mode))
        .collect();
    let dof = match mode {
        DivisorMode::DegreesOfFreedom => results.iter().map(|r| r.fit.n_est.saturating_sub(2)).min().unwrap_or(1),
        DivisorMode::StrictLiteral => 130,
    };
    brown_warner_t_from_variances(&cars, &variances, window.days(), dof)
}

/// Pooled sample first, then the three samples.
fn sample_groups<'a>(classified: &Classified, cars: &'a [CarResult]) -> Vec<(String, Vec<&'a CarResult>)> {
    let by_id: BTreeMap<&str, &CarResult> = cars.iter().map(|c| (c.deal_id.as_str(), c)).collect();
    let pick = |keep: &dyn Fn(&SampleLabel) -> bool| -> Vec<&'a CarResult> {
        classified
            .labels
            .iter()
            .filter(|(_, l)| keep(l))
            .filter_map(|(id, _)| by_id.get(id.as_str()).copied())
            .collect()
    };
    let mut groups = vec![("ALL".to_string(), pick(&|l| !matches!(l, SampleLabel::Excluded(_))))];
    for s in SampleLabel::SAMPLES {
        groups.push((s.name().to_string(), pick(&|l| *l == s)));
    }
    groups
}

fn event_tests(classified: &Classified, cars: &[CarResult], opts: &PipelineOptions) -> (String, String) {
    let mut csv = String::from("sample,window,n,mean_car,bw_t,bw_p,cs_t,cs_se,cs_p,tail\n");
    let mut header = vec!["Window".to_string()];
    let groups = sample_groups(classified, cars);
    for (name, members) in &groups {
        header.push(format!("{name} N={}", members.len()));
    }
    let mut t = TextTable::new("Mean CARs with Brown-Warner t statistics", header);
    for w in &opts.windows {
        let mut row = vec![w.to_string()];
        let mut se_row = vec![String::new()];
        for (name, members) in &groups {
            let values: Vec<f64> = members.iter().filter_map(|r| r.car(w)).collect();
            let bw = brown_warner_for(members, w, opts.divisor).ok();
            let cs = cross_sectional_t(&values).ok();
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            let _ = writeln!(
                csv,
                "{name},{}:{},{},{},{},{},{},{},{},{}",
                w.start,
                w.end,
                values.len(),
                mean.map(fmt_num).unwrap_or_default(),
                bw.map(|b| fmt_num(b.statistic)).unwrap_or_default(),
                bw.map(|b| fmt_num(opts.tail.p_value(&b))).unwrap_or_default(),
                cs.map(|c| fmt_num(c.statistic)).unwrap_or_default(),
                cs.map(|c| fmt_num(c.std_error)).unwrap_or_default(),
                cs.map(|c| fmt_num(opts.tail.p_value(&c))).unwrap_or_default(),
                opts.tail.label(),
            );
            match (mean, bw) {
                (Some(m), Some(b)) => {
                    row.push(format!(
                        "{}{}",
                        fmt_fixed(m, 3),
                        crate::inference::significance_stars(opts.tail.p_value(&b))
                    ));
                    se_row.push(format!("[{}]", fmt_fixed(b.statistic, 2)));
                }
                (Some(m), None) => {
                    row.push(fmt_fixed(m, 3));
                    se_row.push("[-]".into());
                }
                _ => {
                    row.push("-".into());
                    se_row.push(String::new());
                }
            }
        }
        t.push(row);
        t.push(se_row);
    }
    t.note(format!(
        "Brown-Warner t in brackets, {} test, {} divisors. {STAR_NOTE}",
        opts.tail.label(),
        match opts.divisor {
            DivisorMode::DegreesOfFreedom => "degrees-of-freedom",
            DivisorMode::StrictLiteral => "fixed 131/130",
        }
    ));
    (csv, t.render())
}

fn distribution_table(classified: &Classified, cars: &[CarResult], windows: &[EventWindow]) -> String {
    let groups = sample_groups(classified, cars);
    let mut header = vec![String::new()];
    header.extend(groups.iter().map(|(n, m)| format!("{n} N={}", m.len())));
    let mut t = TextTable::new("Sample description", header);
    for w in windows {
        let mut row = vec![w.to_string()];
        let mut p_row = vec![String::new()];
        for (_, members) in &groups {
            let v: Vec<f64> = members.iter().filter_map(|r| r.car(w)).collect();
            let s = distribution_stats(&v).ok();
            let show = |x: Option<f64>| x.map_or("-".to_string(), |x| fmt_fixed(x, 3));
            row.push(format!(
                "S={}, K={}",
                show(s.and_then(|s| s.skewness)),
                show(s.and_then(|s| s.kurtosis))
            ));
            p_row.push(match normality_test(&v) {
                Ok(n) => format!("p={}", fmt_fixed(n.p_value, 3)),
                Err(_) => "p=-".into(),
            });
        }
        t.push(row);
        t.push(p_row);
    }
    t.note("N = number of observations, S = skewness, K = kurtosis (normal = 3).");
    t.note("p = D'Agostino-Pearson omnibus normality test.");
    t.render()
}

fn ownership_text(deals: &[DealRecord], classified: &Classified) -> String {
    let mut header = vec![String::new(), "Post".to_string()];
    header.extend(PRE_BUCKETS.iter().map(|s| s.to_string()));
    let mut t = TextTable::new("Pre- and post-acquisition ownership", header);
    for sample in SampleLabel::SAMPLES {
        let ids = classified.ids_in(&sample);
        let m = ownership_transition_matrix(deals.iter().filter(|d| ids.contains(&d.deal_id.as_str())));
        for (i, (bucket, row)) in POST_BUCKETS.iter().zip(m.counts).enumerate() {
            let mut r = vec![
                if i == 0 { format!("Sample ({})", sample.name()) } else { String::new() },
                bucket.to_string(),
            ];
            r.extend(row.iter().map(|c| c.to_string()));
            t.push(r);
        }
    }
    t.note("Rows: stake after the deal. Columns: stake before; Yes = <20% + 20-40% + 40-50%.");
    t.render()
}

/// Sample characteristics, sector CARs, ownership transitions, event-window
/// tests and distribution diagnostics.
pub fn summarize(
    deals: &[DealRecord],
    classified: &Classified,
    cars: &[CarResult],
    opts: &PipelineOptions,
) -> Artifacts {
    let liquidity: Vec<EventWindow> = EventWindow::liquidity();
    let mut a = Artifacts::new();
    a.insert(
        "table3.txt".into(),
        summary_table(deals, &classified.labels, cars, &classified.features, &liquidity).render(),
    );
    a.insert(
        "table4.txt".into(),
        sector_car_table(&classified.labels, cars, &classified.features, &liquidity, opts.tail).render(),
    );
    a.insert("table5.txt".into(), ownership_text(deals, classified));
    let (csv, text) = event_tests(classified, cars, opts);
    a.insert("event_tests.csv".into(), csv);
    a.insert("event_tests.txt".into(), text);
    a.insert("table10.txt".into(), distribution_table(classified, cars, &opts.windows));
    a
}

fn correlation_text(classified: &Classified, cars: &[CarResult]) -> String {
    let pooled: Vec<DealFeatures> = classified
        .features
        .iter()
        .filter(|f| cars.iter().any(|c| c.deal_id == f.deal_id))
        .filter(|f| !matches!(classified.label_of(&f.deal_id), Some(SampleLabel::Excluded(_)) | None))
        .cloned()
        .collect();
    let names: Vec<String> = TABLE9_SPEC.iter().map(|s| s.to_string()).collect();
    let mut header = vec![String::new()];
    header.extend(names.iter().map(|n| term_label(n)));
    let mut t = TextTable::new("Correlation matrix", header);
    match correlation_matrix(&pooled, &names) {
        Ok(m) => {
            for (i, n) in names.iter().enumerate() {
                let mut row = vec![term_label(n)];
                for j in 0..=i {
                    row.push(if i == j { "1".into() } else { fmt_fixed(m.values[i][j], 3) });
                }
                t.push(row);
            }
            t.note(format!("N = {}", m.n));
        }
        Err(e) => t.note(format!("not available: {e}")),
    }
    t.render()
}

/// Developed-market regressions, pooled regressions and the correlation
/// matrix.
/// `specs` restricts the output to those column ids.
pub fn regress(
    classified: &Classified,
    cars: &[CarResult],
    opts: &PipelineOptions,
    specs: Option<&[String]>,
) -> Result<Artifacts> {
    let windows = EventWindow::liquidity();
    let dm_ids = classified.ids_in(&SampleLabel::DmVn);
    let dm_cars: Vec<CarResult> = cars
        .iter()
        .filter(|c| dm_ids.contains(&c.deal_id.as_str()))
        .cloned()
        .collect();
    let t7 = run_table7(&dm_cars, &classified.features, &windows, opts.exec);
    let mut t7 = t7;
    let mut t9 = run_table9(cars, &classified.features, &classified.labels, &windows, opts.exec);
    if let Some(ids) = specs {
        let known: Vec<&str> = t7.columns.iter().chain(&t9.columns).map(|c| c.id.as_str()).collect();
        if let Some(bad) = ids.iter().find(|i| !known.contains(&i.as_str())) {
            return Err(crate::Error::InvalidConfig(format!(
                "unknown regression spec `{bad}`; known: {}",
                known.join(", ")
            )));
        }
        t7.retain(ids);
        t9.retain(ids);
    }
    let mut a = Artifacts::new();
    a.insert("regress.csv".into(), regression_csv(&[&t7, &t9]));
    a.insert("table7.txt".into(), t7.render());
    a.insert("table9.txt".into(), t9.render());
    a.insert("table6.txt".into(), correlation_text(classified, cars));
    Ok(a)
}

/// Market cap per deal: the cap series of the acquirer on day -1 when given,
/// else the deal's own field.
pub fn resolve_caps(
    deals: &[DealRecord],
    cap_series: &BTreeMap<String, PriceSeries>,
    calendar: Option<&TradingCalendar>,
) -> BTreeMap<String, f64> {
    deals
        .iter()
        .filter_map(|d| {
            let cap = match calendar {
                Some(cal) => market_cap_before(d, cap_series.get(&d.acquirer_id), cal),
                None => d.acquirer_market_cap,
            };
            cap.map(|c| (d.deal_id.clone(), c))
        })
        .collect()
}

/// Value gains of developed-market acquirers.
pub fn gains(
    deals: &[DealRecord],
    classified: &Classified,
    cars: &[CarResult],
    caps: &BTreeMap<String, f64>,
) -> Artifacts {
    let dm_ids = classified.ids_in(&SampleLabel::DmVn);
    let dm_cars: Vec<CarResult> = cars
        .iter()
        .filter(|c| dm_ids.contains(&c.deal_id.as_str()))
        .cloned()
        .collect();
    let (rows, excluded) = value_gains(&dm_cars, &classified.features, deals, caps, &dvg_window());
    let mut text = gains_panel(&rows).render();
    for e in excluded {
        let _ = writeln!(text, "excluded {}: {}", e.deal_id, e.reason);
    }
    let mut a = Artifacts::new();
    a.insert("gains.csv".into(), gains_csv(&rows));
    a.insert("table8.txt".into(), text);
    a
}

/// Simulates a market, then screens, studies, summarizes, regresses and
/// computes value gains on it.
pub fn run_synthetic(spec: &SimSpec, opts: &PipelineOptions) -> Result<Artifacts> {
    let sample = simulate(spec, opts.exec)?;
    let table = ClassificationTable::bundled();
    let mut all = Artifacts::new();
    let mut prices = sample.prices.clone();
    prices.insert(sample.benchmark.instrument_id().to_string(), sample.benchmark.clone());
    all.insert("prices.csv".into(), io::prices_csv(prices.values()));
    all.insert("calendar.csv".into(), io::calendar_csv(&sample.calendar));
    all.insert("deals.csv".into(), io::deals_csv(&sample.deals));
    all.insert("benchmarks.csv".into(), io::benchmarks_csv(&sample.benchmarks));

    let (report, classified, a) = screen(&sample.deals, &sample.prices, &table);
    all.extend(a);
    let (out, a) = study(&report.survivors, &sample.store(), &sample.benchmarks, opts)?;
    all.extend(a);
    all.extend(summarize(&report.survivors, &classified, &out.results, opts));
    all.extend(regress(&classified, &out.results, opts, None)?);
    let caps = resolve_caps(&report.survivors, &BTreeMap::new(), None);
    all.extend(gains(&report.survivors, &classified, &out.results, &caps));
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SimSpec {
        SimSpec {
            n_firms: 60,
            n_days: 300,
            domestic_fraction: 0.3,
            seed: 5,
            ..SimSpec::default()
        }
    }

    #[test]
    fn synthetic_pipeline_emits_every_artifact() {
        let a = run_synthetic(&spec(), &PipelineOptions::default()).unwrap();
        for name in [
            "prices.csv", "deals.csv", "benchmarks.csv", "calendar.csv", "funnel.csv", "funnel.txt",
            "cars.csv", "exclusions.csv", "table3.txt", "table4.txt", "table5.txt", "table6.txt",
            "table7.txt", "table8.txt", "table9.txt", "table10.txt", "regress.csv", "gains.csv",
            "event_tests.csv",
        ] {
            assert!(a.contains_key(name), "{name}");
        }
        assert_eq!(a["cars.csv"].lines().count(), 1 + 60 * 12);
        assert_eq!(a["exclusions.csv"].lines().count(), 1);
    }

    #[test]
    fn summary_path_matches_residual_path() {
        let s = simulate(&spec(), Execution::Sequential).unwrap();
        let opts = PipelineOptions::default();
        let (out, a) = study(&s.deals, &s.store(), &s.benchmarks, &opts).unwrap();
        let back = io::parse_cars("cars.csv", &a["cars.csv"]).unwrap();
        let w = EventWindow::span(0, 1).unwrap();
        let direct: Vec<&CarResult> = out.results.iter().collect();
        let read: Vec<&CarResult> = back.iter().collect();
        let x = brown_warner_for(&direct, &w, DivisorMode::DegreesOfFreedom).unwrap();
        let y = brown_warner_for(&read, &w, DivisorMode::DegreesOfFreedom).unwrap();
        // file values carry six significant digits
        assert!((x.statistic - y.statistic).abs() < 1e-4 * x.statistic.abs().max(1.0));
        assert_eq!(x.dof, y.dof);
    }
}
