//! `eventstudy`: batch front end for screening, event studies, regressions,
//! value gains and synthetic markets.
//!
//! Every subcommand writes its files into `--out` through a temp file and
//! rename, plus `<subcommand>.manifest.json` describing the run. Usage
//! errors exit 2, data errors exit 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::Datelike;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eventstudy::event::{CarResult, EstimationConfig, EventWindow, MarketStore};
use eventstudy::inference::{DivisorMode, Tail};
use eventstudy::io;
use eventstudy::pipeline::{self, Artifacts, PipelineOptions};
use eventstudy::report::fmt_num;
use eventstudy::screening::{classify_country, ClassificationTable, DealRecord, ThresholdTable};
use eventstudy::simulate::{simulate, Innovations, SimSpec};
use eventstudy::Execution;

#[derive(Parser)]
#[command(name = "eventstudy", version, about = "M&A announcement-return event studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Apply the sample funnel and label surviving deals.
    Screen(ScreenArgs),
    /// Income class of each acquirer nation-year and the sample of each deal.
    Classify(ClassifyArgs),
    /// Market-model fits and window CARs per deal.
    Study(StudyArgs),
    /// Sample tables, sector CARs, ownership, event tests and distributions.
    Summarize(SummarizeArgs),
    /// Cross-sectional CAR regressions and the correlation matrix.
    Regress(RegressArgs),
    /// Dollar value gains and net synergies of developed-market acquirers.
    Gains(GainsArgs),
    /// Generate a synthetic market with known event effects.
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize)]
struct Common {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run every loop on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args, Serialize)]
struct ClassSource {
    /// nation,year,class table; the bundled table when neither this nor --gni is given.
    #[arg(long, conflicts_with = "gni")]
    classes: Option<PathBuf>,
    /// nation,year,gni rows classified against --thresholds.
    #[arg(long)]
    gni: Option<PathBuf>,
    /// year,low_max,lm_max,um_max cut-offs; bundled when absent.
    #[arg(long, requires = "gni")]
    thresholds: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScreenArgs {
    #[arg(long)]
    deals: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[command(flatten)]
    classes: ClassSource,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    deals: PathBuf,
    #[command(flatten)]
    classes: ClassSource,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WindowArgs {
    /// Comma-separated `start:end` windows, e.g. "0:1,-1:1,-2:1".
    #[arg(long, value_parser = parse_windows, allow_hyphen_values = true)]
    windows: Option<WindowList>,
}

#[derive(Clone)]
struct WindowList(Vec<EventWindow>);

impl WindowArgs {
    fn list(&self) -> Vec<EventWindow> {
        self.windows.clone().map_or_else(EventWindow::standard, |w| w.0)
    }
}

/// Echoes the resolved list, defaults included, as `start:end` strings.
impl Serialize for WindowArgs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.list().iter().map(|w| format!("{}:{}", w.start, w.end)))
    }
}

fn parse_windows(s: &str) -> std::result::Result<WindowList, String> {
    let w = EventWindow::parse_list(s).map_err(|e| e.to_string())?;
    if w.is_empty() {
        return Err("no windows given".into());
    }
    Ok(WindowList(w))
}

#[derive(Args, Serialize)]
struct StudyArgs {
    #[arg(long)]
    deals: PathBuf,
    #[arg(long)]
    prices: PathBuf,
    #[arg(long)]
    benchmarks: PathBuf,
    /// market_id,date trading calendar; the benchmark's dates when absent.
    #[arg(long)]
    calendar: Option<PathBuf>,
    #[command(flatten)]
    windows: WindowArgs,
    #[arg(long, default_value_t = -196, allow_hyphen_values = true)]
    est_start: i32,
    #[arg(long, default_value_t = -65, allow_hyphen_values = true)]
    est_end: i32,
    #[arg(long, default_value_t = 100)]
    min_obs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SummarizeArgs {
    #[arg(long)]
    deals: PathBuf,
    #[arg(long)]
    cars: PathBuf,
    #[command(flatten)]
    classes: ClassSource,
    #[command(flatten)]
    windows: WindowArgs,
    /// Fixed 131/130 estimation divisors instead of n-1/n-2.
    #[arg(long)]
    strict_literal: bool,
    /// Two-tailed p-values for the sector grid and window tests.
    #[arg(long)]
    two_tailed: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct RegressArgs {
    #[arg(long)]
    deals: PathBuf,
    #[arg(long)]
    cars: PathBuf,
    #[command(flatten)]
    classes: ClassSource,
    /// Comma-separated column ids (t7_1..t7_8, t9_all, t9_cb, t9_vn); all when absent.
    #[arg(long, value_delimiter = ',')]
    specs: Option<Vec<String>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct GainsArgs {
    #[arg(long)]
    deals: PathBuf,
    #[arg(long)]
    cars: PathBuf,
    #[command(flatten)]
    classes: ClassSource,
    /// instrument_id,date,market_cap series; caps on day -1 are read from it.
    #[arg(long, requires = "calendar")]
    caps: Option<PathBuf>,
    #[arg(long)]
    calendar: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_firms: usize,
    #[arg(long, default_value_t = 600)]
    n_days: usize,
    /// Log-return shock added on the announcement day.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    event_effect: f64,
    #[arg(long, default_value_t = 0.02)]
    idiosyncratic_vol: f64,
    /// Student-t innovations with this many degrees of freedom.
    #[arg(long)]
    student_t: Option<f64>,
    /// Share of domestic acquirers.
    #[arg(long, default_value_t = 0.0)]
    domestic_fraction: f64,
    #[command(flatten)]
    common: Common,
}

/// Reads one input file, keeping its row count for the manifest.
#[derive(Default, Serialize)]
struct Inputs {
    files: Vec<InputFile>,
}

#[derive(Serialize)]
struct InputFile {
    path: String,
    rows: usize,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<(String, String)> {
        let text = io::read_text(path)?;
        self.files.push(InputFile {
            path: path.display().to_string(),
            rows: text.lines().count().saturating_sub(1),
        });
        Ok((path.display().to_string(), text))
    }

    fn deals(&mut self, path: &Path) -> Result<Vec<DealRecord>> {
        let (name, text) = self.read(path)?;
        let (deals, warnings) = io::parse_deals(&name, &text)?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        Ok(deals)
    }

    fn cars(&mut self, path: &Path) -> Result<Vec<CarResult>> {
        let (name, text) = self.read(path)?;
        Ok(io::parse_cars(&name, &text)?)
    }

    fn classes(&mut self, src: &ClassSource) -> Result<ClassificationTable> {
        if let Some(p) = &src.classes {
            let (name, text) = self.read(p)?;
            return Ok(io::parse_classes(&name, &text)?);
        }
        let Some(gni) = &src.gni else {
            return Ok(ClassificationTable::bundled());
        };
        let thresholds = match &src.thresholds {
            Some(p) => {
                let (name, text) = self.read(p)?;
                io::parse_thresholds(&name, &text)?
            }
            None => ThresholdTable::bundled(),
        };
        let (name, text) = self.read(gni)?;
        let mut table = ClassificationTable::default();
        for row in io::parse_gni(&name, &text)? {
            let c = classify_country(&row.nation, row.year, row.gni, &thresholds)?;
            table.insert(&c.nation, c.year, c.class);
        }
        Ok(table)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    inputs: Vec<InputFile>,
    outputs: BTreeMap<String, usize>,
    warnings: usize,
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
    Ok(())
}

/// Data rows per output: CSV rows exclude the header.
fn row_count(name: &str, contents: &str) -> usize {
    let lines = contents.lines().count();
    if name.ends_with(".csv") {
        lines.saturating_sub(1)
    } else {
        lines
    }
}

fn emit(command: &Command, common: &Common, inputs: Inputs, artifacts: &Artifacts, warnings: &[String]) -> Result<()> {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    for (name, contents) in artifacts {
        write_atomic(&common.out, name, contents)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        inputs: inputs.files,
        outputs: artifacts.iter().map(|(n, c)| (n.clone(), row_count(n, c))).collect(),
        warnings: warnings.len(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&common.out, &format!("{}.manifest.json", command.name()), &json)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Screen(_) => "screen",
            Command::Classify(_) => "classify",
            Command::Study(_) => "study",
            Command::Summarize(_) => "summarize",
            Command::Regress(_) => "regress",
            Command::Gains(_) => "gains",
            Command::Simulate(_) => "simulate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Screen(a) => &a.common,
            Command::Classify(a) => &a.common,
            Command::Study(a) => &a.common,
            Command::Summarize(a) => &a.common,
            Command::Regress(a) => &a.common,
            Command::Gains(a) => &a.common,
            Command::Simulate(a) => &a.common,
        }
    }
}

fn options(common: &Common) -> PipelineOptions {
    PipelineOptions {
        exec: common.exec(),
        ..PipelineOptions::default()
    }
}

fn run(command: &Command) -> Result<()> {
    let mut inputs = Inputs::default();
    let mut warnings = Vec::new();
    let artifacts = match command {
        Command::Screen(a) => {
            let deals = inputs.deals(&a.deals)?;
            let (name, text) = inputs.read(&a.prices)?;
            let prices = io::parse_prices(&name, &text)?;
            let table = inputs.classes(&a.classes)?;
            let (_, classified, artifacts) = pipeline::screen(&deals, &prices, &table);
            warnings = classified.warnings;
            artifacts
        }
        Command::Classify(a) => {
            let deals = inputs.deals(&a.deals)?;
            let table = inputs.classes(&a.classes)?;
            let classified = pipeline::classify_deals(&deals, &table);
            let mut used = ClassificationTable::default();
            for d in &deals {
                let year = d.announcement_date.year();
                if let Some(c) = table.get(&d.acquirer_nation, year) {
                    used.insert(&d.acquirer_nation, year, c);
                }
            }
            let mut out = Artifacts::new();
            out.insert("classes.csv".into(), io::classes_csv(&used));
            out.insert("samples.csv".into(), pipeline::samples_csv(&classified));
            warnings = classified.warnings;
            out
        }
        Command::Study(a) => {
            let deals = inputs.deals(&a.deals)?;
            let (name, text) = inputs.read(&a.prices)?;
            let prices = io::parse_prices(&name, &text)?;
            let (name, text) = inputs.read(&a.benchmarks)?;
            let benchmarks = io::parse_benchmarks(&name, &text)?;
            let calendars = match &a.calendar {
                Some(p) => {
                    let (name, text) = inputs.read(p)?;
                    io::parse_calendars(&name, &text)?
                }
                None => BTreeMap::new(),
            };
            let opts = PipelineOptions {
                windows: a.windows.list(),
                config: EstimationConfig {
                    est_start: a.est_start,
                    est_end: a.est_end,
                    min_obs: a.min_obs,
                },
                ..options(&a.common)
            };
            let store = MarketStore { prices, calendars };
            let (out, artifacts) = pipeline::study(&deals, &store, &benchmarks, &opts)?;
            warnings = out
                .exclusions
                .iter()
                .map(|e| format!("{} excluded: {}", e.deal_id, e.reason))
                .collect();
            artifacts
        }
        Command::Summarize(a) => {
            let deals = inputs.deals(&a.deals)?;
            let cars = inputs.cars(&a.cars)?;
            let table = inputs.classes(&a.classes)?;
            let classified = pipeline::classify_deals(&deals, &table);
            let opts = PipelineOptions {
                windows: a.windows.list(),
                divisor: if a.strict_literal {
                    DivisorMode::StrictLiteral
                } else {
                    DivisorMode::DegreesOfFreedom
                },
                tail: if a.two_tailed { Tail::Two } else { Tail::One },
                ..options(&a.common)
            };
            let artifacts = pipeline::summarize(&deals, &classified, &cars, &opts);
            warnings = classified.warnings;
            artifacts
        }
        Command::Regress(a) => {
            let deals = inputs.deals(&a.deals)?;
            let cars = inputs.cars(&a.cars)?;
            let table = inputs.classes(&a.classes)?;
            let classified = pipeline::classify_deals(&deals, &table);
            let artifacts = pipeline::regress(&classified, &cars, &options(&a.common), a.specs.as_deref())?;
            warnings = classified.warnings;
            artifacts
        }
        Command::Gains(a) => {
            let deals = inputs.deals(&a.deals)?;
            let cars = inputs.cars(&a.cars)?;
            let table = inputs.classes(&a.classes)?;
            let classified = pipeline::classify_deals(&deals, &table);
            let caps = match (&a.caps, &a.calendar) {
                (Some(caps), Some(cal)) => {
                    let (name, text) = inputs.read(caps)?;
                    let series = io::parse_caps(&name, &text)?;
                    let (name, text) = inputs.read(cal)?;
                    let calendars = io::parse_calendars(&name, &text)?;
                    let Some(calendar) = calendars.values().next().filter(|_| calendars.len() == 1) else {
                        anyhow::bail!("{name}: expected exactly one market calendar");
                    };
                    pipeline::resolve_caps(&deals, &series, Some(calendar))
                }
                _ => pipeline::resolve_caps(&deals, &BTreeMap::new(), None),
            };
            let artifacts = pipeline::gains(&deals, &classified, &cars, &caps);
            warnings = classified.warnings;
            artifacts
        }
        Command::Simulate(a) => {
            let spec = SimSpec {
                seed: a.seed,
                n_firms: a.n_firms,
                n_days: a.n_days,
                event_effect: a.event_effect,
                idiosyncratic_vol: a.idiosyncratic_vol,
                innovations: match a.student_t {
                    Some(dof) => Innovations::StudentT { dof },
                    None => Innovations::Normal,
                },
                domestic_fraction: a.domestic_fraction,
                ..SimSpec::default()
            };
            let sample = simulate(&spec, a.common.exec())?;
            let mut prices = sample.prices.clone();
            prices.insert(sample.benchmark.instrument_id().to_string(), sample.benchmark.clone());
            let mut out = Artifacts::new();
            out.insert("prices.csv".into(), io::prices_csv(prices.values()));
            out.insert("calendar.csv".into(), io::calendar_csv(&sample.calendar));
            out.insert("deals.csv".into(), io::deals_csv(&sample.deals));
            out.insert("benchmarks.csv".into(), io::benchmarks_csv(&sample.benchmarks));
            let mut truth = String::from("deal_id,alpha,beta,announcement_index,control,dm,injected\n");
            for t in &sample.truth {
                let _ = writeln!(
                    truth,
                    "{},{},{},{},{},{},{}",
                    t.deal_id,
                    fmt_num(t.alpha),
                    fmt_num(t.beta),
                    t.announcement_index,
                    u8::from(t.control),
                    u8::from(t.dm),
                    fmt_num(t.injected)
                );
            }
            out.insert("truth.csv".into(), truth);
            out
        }
    };
    emit(command, command.common(), inputs, &artifacts, &warnings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
