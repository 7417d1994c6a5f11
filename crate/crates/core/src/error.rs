use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{instrument}` needs at least two observations")]
    EmptySeries { instrument: String },

    #[error("series `{instrument}` has non-positive price {price} on {date}")]
    NonPositivePrice {
        instrument: String,
        date: NaiveDate,
        price: f64,
    },

    #[error("{context}: dates must be strictly increasing ({date} follows {previous})")]
    UnorderedDates {
        context: String,
        previous: NaiveDate,
        date: NaiveDate,
    },

    #[error("series `{instrument}` has date {date} which is not a trading day")]
    DateNotInCalendar { instrument: String, date: NaiveDate },

    #[error("series `{instrument}` is missing a price on trading day {date}")]
    MissingPrice { instrument: String, date: NaiveDate },

    #[error("date {date} lies outside the trading calendar")]
    DateOutOfRange { date: NaiveDate },

    #[error("insufficient history: no return at relative day {offset}")]
    InsufficientHistory { offset: i32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientObservations { needed: usize, got: usize },

    #[error("market returns have zero variance over the estimation window")]
    DegenerateRegressor,

    #[error("no abnormal return at relative day {offset}")]
    MissingOffset { offset: i32 },

    #[error("sample is empty")]
    EmptySample,

    #[error("market-model fit carries no estimation residuals")]
    MissingResiduals,

    #[error("sample too small: need {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("no income thresholds for year {year}")]
    MissingThresholds { year: i32 },

    #[error("no income classification for `{nation}` in {year}")]
    MissingClassification { nation: String, year: i32 },

    #[error("malformed SIC code `{0}`")]
    MalformedSic(String),

    #[error("deal `{deal_id}` has no post-transaction ownership")]
    MissingOwnership { deal_id: String },

    #[error("deal `{deal_id}` is invalid: {reason}")]
    InvalidDeal { deal_id: String, reason: String },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("design column `{column}` is constant")]
    DegenerateDesign { column: String },

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("column `{column}` is constant")]
    ConstantColumn { column: String },

    #[error("no abnormal return at relative day {offset} for value gain")]
    MissingAr { offset: i32 },

    #[error("market capitalization must be positive, got {0}")]
    NonPositiveMarketCap(f64),

    #[error("transaction value is missing")]
    MissingTransactionValue,

    #[error("transaction value must be positive, got {0}")]
    NonPositiveTransactionValue(f64),

    #[error("event for firm `{firm}` at trading day {index} leaves fewer than {needed} days of history")]
    EventTooEarly {
        firm: String,
        index: usize,
        needed: usize,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("{path}, row {row}, column `{column}`: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
