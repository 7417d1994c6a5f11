//! Event-study engine for M&A announcement returns.
//!
//! The crate covers the full path from raw inputs to report tables:
//!
//! * [`market_data`]: trading calendars, price ingestion, log returns and
//!   relative-day event clocks.
//! * [`event`]: per-deal OLS market model, abnormal returns and CARs.
//! * [`inference`]: Brown–Warner and cross-sectional t tests, exact
//!   Wilcoxon rank tests, moments and the D'Agostino–Pearson omnibus test.
//! * [`screening`]: deal records, income classification, the sample funnel
//!   and per-deal regressors.
//! * [`cross_section`]: CAR-on-features OLS and correlation matrices.
//! * [`gains`]: dollar value gains, net synergy and summary tables.
//! * [`simulate`]: seeded synthetic markets used as ground truth.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the `parallel`
//! feature (on by default) they run on rayon, otherwise sequentially.

pub mod cross_section;
pub mod error;
pub mod event;
pub mod exec;
pub mod gains;
pub mod inference;
pub mod io;
pub mod market_data;
pub mod pipeline;
pub mod report;
pub mod screening;
pub mod simulate;

pub use error::{Error, Result};
pub use exec::Execution;
