//! Deal records, income classification, the sample funnel and per-deal
//! regressors.

mod classify;
pub(crate) mod deal;
mod features;
mod funnel;

pub use classify::{
    assign_sample, canonical_nation, classify_country, developed_market, is_vietnam,
    ClassificationTable, CountryClass, IncomeClass, IncomeThresholds, SampleLabel, ThresholdTable,
};
pub use deal::{DealRecord, DealStatus};
pub use features::{
    derive_features, ownership_transition_matrix, sic_sector, DealFeatures, OwnershipMatrix,
    Sector, FEATURE_NAMES, POST_BUCKETS, PRE_BUCKETS,
};
pub use funnel::{apply_funnel, trading_history, FunnelReport, FunnelStep, FUNNEL_LABELS};
