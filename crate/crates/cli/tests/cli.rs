use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventstudy"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path, out: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--seed", "42", "--n-firms", "20", "--n-days", "320", "--out", out];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

const STUDY: [&str; 9] = [
    "study",
    "--deals",
    "sim/deals.csv",
    "--prices",
    "sim/prices.csv",
    "--benchmarks",
    "sim/benchmarks.csv",
    "--calendar",
    "sim/calendar.csv",
];

#[test]
fn simulate_study_regress() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &["--domestic-fraction", "0.3"]);
    let mut study = STUDY.to_vec();
    study.extend(["--out", "run"]);
    ok(d, &study);
    ok(d, &["regress", "--deals", "sim/deals.csv", "--cars", "run/cars.csv", "--out", "run"]);
    for f in ["cars.csv", "regress.csv", "table7.txt", "table9.txt", "study.manifest.json", "regress.manifest.json"] {
        assert!(d.join("run").join(f).is_file(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("run/study.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"]["cars.csv"], 20 * 12);
    assert_eq!(manifest["command"]["study"]["windows"].as_array().unwrap().len(), 12);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 4);
    // no temp files left behind
    assert!(fs::read_dir(d.join("run"))
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn every_report_stage_runs_on_simulated_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &["--domestic-fraction", "0.3", "--event-effect", "0.02"]);
    ok(d, &["screen", "--deals", "sim/deals.csv", "--prices", "sim/prices.csv", "--out", "sim"]);
    ok(d, &["classify", "--deals", "sim/screened_deals.csv", "--out", "sim"]);
    let mut study = STUDY.to_vec();
    study[2] = "sim/screened_deals.csv";
    study.extend(["--out", "sim"]);
    ok(d, &study);
    let base = ["--deals", "sim/screened_deals.csv", "--cars", "sim/cars.csv", "--classes", "sim/classes.csv", "--out", "sim"];
    for cmd in ["summarize", "regress", "gains"] {
        let mut args = vec![cmd];
        args.extend(base);
        ok(d, &args);
    }
    let funnel = fs::read_to_string(d.join("sim/funnel.csv")).unwrap();
    assert_eq!(funnel.lines().count(), 9);
    let gains = fs::read_to_string(d.join("sim/gains.csv")).unwrap();
    assert!(gains.starts_with("deal_id,control,"));
    let tests = fs::read_to_string(d.join("sim/event_tests.csv")).unwrap();
    assert!(tests.lines().any(|l| l.starts_with("ALL,0:1,20,")), "{tests}");
}

#[test]
fn malformed_header_names_the_column() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &[]);
    let prices = fs::read_to_string(d.join("sim/prices.csv")).unwrap();
    fs::write(d.join("sim/prices.csv"), prices.replacen("close", "price", 1)).unwrap();
    let mut study = STUDY.to_vec();
    study.extend(["--out", "run"]);
    let out = run(d, &study);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("price"), "{err}");
    assert!(!d.join("run/cars.csv").exists());
}

#[test]
fn window_list_sets_car_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &[]);
    let mut study = STUDY.to_vec();
    study.extend(["--windows", "0:1,-1:1,-2:1", "--out", "run"]);
    ok(d, &study);
    let wide = fs::read_to_string(d.join("run/cars_wide.csv")).unwrap();
    let mut lines = wide.lines();
    assert_eq!(lines.next().unwrap(), "deal_id,car_0_1,car_m1_1,car_m2_1");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split(',').count() == 4 && !r.contains(",,")));
    let long = fs::read_to_string(d.join("run/cars.csv")).unwrap();
    assert_eq!(long.lines().count(), 1 + 20 * 3);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut study = STUDY.to_vec();
    study.extend(["--windows", "1:0"]);
    assert_eq!(run(d, &study).status.code(), Some(2));
    assert_eq!(run(d, &["simulate", "--seed", "x"]).status.code(), Some(2));
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut study = STUDY.to_vec();
    study.extend(["--out", "run"]);
    let out = run(tmp.path(), &study);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim/deals.csv"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &[]);
    simulate(d, "again", &["--sequential"]);
    for f in ["prices.csv", "deals.csv", "benchmarks.csv", "calendar.csv", "truth.csv"] {
        assert_eq!(
            fs::read(d.join("sim").join(f)).unwrap(),
            fs::read(d.join("again").join(f)).unwrap(),
            "{f}"
        );
    }
    let mut a = STUDY.to_vec();
    a.extend(["--out", "a"]);
    ok(d, &a);
    let mut b = STUDY.to_vec();
    b.extend(["--out", "b", "--sequential"]);
    ok(d, &b);
    assert_eq!(fs::read(d.join("a/cars.csv")).unwrap(), fs::read(d.join("b/cars.csv")).unwrap());
}

#[test]
fn screened_deals_feed_back_into_screen() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    simulate(d, "sim", &[]);
    ok(d, &["screen", "--deals", "sim/deals.csv", "--prices", "sim/prices.csv", "--out", "one"]);
    ok(d, &["screen", "--deals", "one/screened_deals.csv", "--prices", "sim/prices.csv", "--out", "two"]);
    assert_eq!(
        fs::read(d.join("one/screened_deals.csv")).unwrap(),
        fs::read(d.join("two/screened_deals.csv")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(d.join("sim/deals.csv")).unwrap(),
        fs::read_to_string(d.join("one/screened_deals.csv")).unwrap()
    );
}
