use std::collections::BTreeMap;

use eventstudy::event::{run_event_study, EstimationConfig, EventWindow, MarketStore};
use eventstudy::inference::DivisorMode;
use eventstudy::io;
use eventstudy::pipeline::{self, brown_warner_for, PipelineOptions};
use eventstudy::screening::ClassificationTable;
use eventstudy::simulate::{simulate, SimSpec};
use eventstudy::Execution;

fn spec() -> SimSpec {
    SimSpec {
        n_firms: 40,
        n_days: 300,
        domestic_fraction: 0.3,
        event_effect: 0.01,
        seed: 11,
        ..SimSpec::default()
    }
}

#[test]
fn written_files_reproduce_the_direct_study() {
    let s = simulate(&spec(), Execution::Sequential).unwrap();
    let windows = EventWindow::liquidity();
    let config = EstimationConfig::default();
    let direct = run_event_study(&s.deals, &s.store(), &s.benchmarks, &config, &windows, Execution::Sequential).unwrap();

    let mut all = s.prices.clone();
    all.insert(s.benchmark.instrument_id().to_string(), s.benchmark.clone());
    let prices = io::parse_prices("prices.csv", &io::prices_csv(all.values())).unwrap();
    let calendars = io::parse_calendars("calendar.csv", &io::calendar_csv(&s.calendar)).unwrap();
    let (deals, warnings) = io::parse_deals("deals.csv", &io::deals_csv(&s.deals)).unwrap();
    let benchmarks = io::parse_benchmarks("benchmarks.csv", &io::benchmarks_csv(&s.benchmarks)).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(deals, s.deals);
    assert_eq!(benchmarks, s.benchmarks);

    let store = MarketStore { prices, calendars };
    let read = run_event_study(&deals, &store, &benchmarks, &config, &windows, Execution::Parallel).unwrap();
    assert_eq!(read.results.len(), direct.results.len());
    for (a, b) in direct.results.iter().zip(&read.results) {
        assert_eq!(a.deal_id, b.deal_id);
        // prices carry six significant digits on disk
        assert!((a.fit.beta - b.fit.beta).abs() < 1e-3, "{} {}", a.fit.beta, b.fit.beta);
        for w in &windows {
            assert!((a.car(w).unwrap() - b.car(w).unwrap()).abs() < 1e-4);
        }
    }
}

#[test]
fn cars_file_round_trips_through_downstream_stages() {
    let s = simulate(&spec(), Execution::Parallel).unwrap();
    let opts = PipelineOptions::default();
    let (out, files) = pipeline::study(&s.deals, &s.store(), &s.benchmarks, &opts).unwrap();
    let cars = io::parse_cars("cars.csv", &files["cars.csv"]).unwrap();
    assert_eq!(io::cars_csv(&cars), files["cars.csv"]);
    assert_eq!(cars.len(), out.results.len());

    let classified = pipeline::classify_deals(&s.deals, &ClassificationTable::bundled());
    assert!(classified.warnings.is_empty(), "{:?}", classified.warnings);
    let summary = pipeline::summarize(&s.deals, &classified, &cars, &opts);
    let regress = pipeline::regress(&classified, &cars, &opts, None).unwrap();
    let gains = pipeline::gains(
        &s.deals,
        &classified,
        &cars,
        &pipeline::resolve_caps(&s.deals, &BTreeMap::new(), None),
    );
    for a in [&summary, &regress, &gains] {
        assert!(a.values().all(|t| !t.is_empty()));
    }
    let dm = classified.ids_in(&eventstudy::screening::SampleLabel::DmVn).len();
    assert_eq!(gains["gains.csv"].lines().count(), 1 + dm);
}

#[test]
fn divisor_modes_agree_on_full_estimation_windows() {
    let s = simulate(&spec(), Execution::Parallel).unwrap();
    let w = EventWindow::span(0, 1).unwrap();
    let out = run_event_study(
        &s.deals,
        &s.store(),
        &s.benchmarks,
        &EstimationConfig::default(),
        std::slice::from_ref(&w),
        Execution::Parallel,
    )
    .unwrap();
    let refs: Vec<_> = out.results.iter().collect();
    assert!(refs.iter().all(|r| r.fit.n_est == 132));
    let a = brown_warner_for(&refs, &w, DivisorMode::DegreesOfFreedom).unwrap();
    let b = brown_warner_for(&refs, &w, DivisorMode::StrictLiteral).unwrap();
    assert!((a.statistic - b.statistic).abs() < 1e-12);
    assert_eq!((a.dof, b.dof), (130, 130));
}

#[test]
fn unknown_regression_spec_is_rejected() {
    let s = simulate(&spec(), Execution::Parallel).unwrap();
    let opts = PipelineOptions::default();
    let (out, _) = pipeline::study(&s.deals, &s.store(), &s.benchmarks, &opts).unwrap();
    let classified = pipeline::classify_deals(&s.deals, &ClassificationTable::bundled());
    let only = vec!["t9_vn".to_string()];
    let a = pipeline::regress(&classified, &out.results, &opts, Some(&only)).unwrap();
    assert!(a["regress.csv"].lines().skip(1).all(|l| l.starts_with("t9_vn,")));
    let bad = vec!["t7_9".to_string()];
    assert!(pipeline::regress(&classified, &out.results, &opts, Some(&bad)).is_err());
}
