//! Cross-sectional regressions of CARs on deal features.

mod design;
mod ols;
mod tables;

pub use design::{build_design, correlation_matrix, CorrelationMatrix, DesignMatrix, INTERCEPT};
pub use ols::{ols, RegressionResult};
pub use tables::{
    regression_csv, run_columns, run_table7, run_table9, term_label, ColumnSpec, RegressionCell,
    RegressionTable, TABLE7_SPECS, TABLE9_SPEC,
};
