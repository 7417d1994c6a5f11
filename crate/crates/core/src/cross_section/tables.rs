use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{build_design, ols, RegressionResult, INTERCEPT};
use crate::error::Error;
use crate::event::{CarResult, EventWindow};
use crate::exec::Execution;
use crate::inference::significance_stars;
use crate::report::{coef_cell, fmt_fixed, fmt_num, se_cell, TextTable, STAR_NOTE};
use crate::screening::{DealFeatures, SampleLabel};

/// Column specifications of the developed-market table.
pub const TABLE7_SPECS: [&[&str]; 8] = [
    &["control"],
    &["control", "time_trend"],
    &["control", "listed"],
    &["control", "non_diversified"],
    &["log_post_ownership"],
    &["control", "log_post_ownership"],
    &["control", "dummy95"],
    &["control", "dummy95", "log_transaction_value"],
];

/// Pooled specification; domestic columns drop the `dm` terms.
pub const TABLE9_SPEC: [&str; 7] = [
    "control",
    "dm",
    "control*dm",
    "listed",
    "non_diversified",
    "mv",
    "mv*control",
];

pub fn term_label(term: &str) -> String {
    match term {
        INTERCEPT => "Constant".into(),
        "control" => "Control".into(),
        "dm" | "dm_acquirer" => "DM Acquirer".into(),
        "control*dm" | "dm*control" => "Control*DM Acquirer".into(),
        "listed" | "listed_target" => "Listed target".into(),
        "non_diversified" => "Non-Diversified".into(),
        "diversifying" => "Diversifying".into(),
        "time_trend" => "Time-trend".into(),
        "mv" | "log_mv" => "MV".into(),
        "mv*control" | "control*mv" => "MV*Control".into(),
        "log_post_ownership" => "Post-acquisition ownership (x %)".into(),
        "dummy95" => "Post-acquisition Ownership (x >=95%)".into(),
        "log_transaction_value" => "Transaction value".into(),
        other => other.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub id: String,
    pub heading: String,
    pub terms: Vec<String>,
    /// Restricts the column to these deals; all deals when absent.
    pub deals: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCell {
    pub spec_id: String,
    pub window: EventWindow,
    pub outcome: std::result::Result<RegressionResult, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTable {
    pub title: String,
    pub columns: Vec<ColumnSpec>,
    pub windows: Vec<EventWindow>,
    /// Column-major: every window of column 0, then column 1, and so on.
    pub cells: Vec<RegressionCell>,
}

impl RegressionTable {
    pub fn cell(&self, spec_id: &str, window: &EventWindow) -> Option<&RegressionCell> {
        self.cells
            .iter()
            .find(|c| c.spec_id == spec_id && c.window.same_span(window))
    }

    /// Keeps only the named columns.
    pub fn retain(&mut self, spec_ids: &[String]) {
        self.columns.retain(|c| spec_ids.contains(&c.id));
        self.cells.retain(|c| spec_ids.contains(&c.spec_id));
    }

    /// Terms in first-appearance order across columns, intercept last.
    pub fn terms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            for t in &c.terms {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
        out.push(INTERCEPT.to_string());
        out
    }

    /// Row blocks per term and window with coefficient and parenthesized
    /// standard error, then adjusted R-square per window and N.
    pub fn render(&self) -> String {
        let mut header = vec![String::new(), "Windows".to_string()];
        header.extend(self.columns.iter().map(|c| c.heading.clone()));
        let mut t = TextTable::new(&self.title, header);
        for term in self.terms() {
            for (wi, w) in self.windows.iter().enumerate() {
                let mut coef = vec![if wi == 0 { term_label(&term) } else { String::new() }, w.to_string()];
                let mut se = vec![String::new(), String::new()];
                for col in &self.columns {
                    let fitted = self.cell(&col.id, w).and_then(|c| c.outcome.as_ref().ok());
                    match fitted.and_then(|r| r.term(&term)) {
                        Some((b, s, p)) => {
                            coef.push(coef_cell(b, p));
                            se.push(se_cell(Some(s)));
                        }
                        None if fitted.is_none() && col.terms.contains(&term) => {
                            coef.push("-".into());
                            se.push(String::new());
                        }
                        None => {
                            coef.push(String::new());
                            se.push(String::new());
                        }
                    }
                }
                t.push(coef);
                t.push(se);
            }
        }
        for (wi, w) in self.windows.iter().enumerate() {
            let mut row = vec![if wi == 0 { "Adj. R-square".into() } else { String::new() }, w.to_string()];
            for col in &self.columns {
                row.push(match self.cell(&col.id, w).map(|c| &c.outcome) {
                    Some(Ok(r)) => fmt_fixed(r.adj_r_squared, 3),
                    _ => "-".into(),
                });
            }
            t.push(row);
        }
        let mut n_row = vec!["N".to_string(), String::new()];
        for col in &self.columns {
            let n = self
                .windows
                .iter()
                .filter_map(|w| self.cell(&col.id, w)?.outcome.as_ref().ok())
                .map(|r| r.n_used)
                .max();
            n_row.push(n.map_or("-".into(), |n| n.to_string()));
        }
        t.push(n_row);
        t.note("Standard errors in parentheses.");
        t.note(STAR_NOTE);
        for c in &self.cells {
            if let Err(e) = &c.outcome {
                t.note(format!("{} {}: {e}", c.spec_id, c.window));
            }
        }
        t.render()
    }
}

/// `spec_id,window,term,coef,se,t,p,stars,n,adj_r2`; failed cells are
/// omitted.
pub fn regression_csv(tables: &[&RegressionTable]) -> String {
    let mut s = String::from("spec_id,window,term,coef,se,t,p,stars,n,adj_r2\n");
    for table in tables {
        for cell in &table.cells {
            let Ok(r) = &cell.outcome else { continue };
            for (i, term) in r.terms.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{}:{},{},{},{},{},{},{},{},{}",
                    cell.spec_id,
                    cell.window.start,
                    cell.window.end,
                    term,
                    fmt_num(r.coefficients[i]),
                    fmt_num(r.std_errors[i]),
                    fmt_num(r.t_stats[i]),
                    fmt_num(r.p_values[i]),
                    significance_stars(r.p_values[i]),
                    r.n_used,
                    fmt_num(r.adj_r_squared),
                );
            }
        }
    }
    s
}

/// Fits every column over every window.
pub fn run_columns(
    title: &str,
    columns: Vec<ColumnSpec>,
    cars: &[CarResult],
    features: &[DealFeatures],
    windows: &[EventWindow],
    exec: Execution,
) -> RegressionTable {
    let jobs: Vec<(usize, EventWindow)> = (0..columns.len())
        .flat_map(|c| windows.iter().map(move |w| (c, *w)))
        .collect();
    let cells = exec.map(&jobs, |(c, w)| {
        let col = &columns[*c];
        let subset: Vec<CarResult>;
        let cars = match &col.deals {
            Some(ids) => {
                subset = cars.iter().filter(|r| ids.contains(&r.deal_id)).cloned().collect();
                &subset[..]
            }
            None => cars,
        };
        let outcome = build_design(cars, features, &col.terms, w).and_then(|d| ols(&d));
        RegressionCell {
            spec_id: col.id.clone(),
            window: *w,
            outcome,
        }
    });
    RegressionTable {
        title: title.to_string(),
        columns,
        windows: windows.to_vec(),
        cells,
    }
}

fn terms(s: &[&str]) -> Vec<String> {
    s.iter().map(|t| t.to_string()).collect()
}

/// Eight specifications on the developed-market sample. `cars` should hold
/// that sample only.
pub fn run_table7(
    cars: &[CarResult],
    features: &[DealFeatures],
    windows: &[EventWindow],
    exec: Execution,
) -> RegressionTable {
    let columns = TABLE7_SPECS
        .iter()
        .enumerate()
        .map(|(i, spec)| ColumnSpec {
            id: format!("t7_{}", i + 1),
            heading: format!("({})", i + 1),
            terms: terms(spec),
            deals: None,
        })
        .collect();
    run_columns(
        "Majority control and acquirer returns, developed-market acquirers",
        columns,
        cars,
        features,
        windows,
        exec,
    )
}

/// Pooled, cross-border and domestic columns with the pooled spec.
pub fn run_table9(
    cars: &[CarResult],
    features: &[DealFeatures],
    labels: &[(String, SampleLabel)],
    windows: &[EventWindow],
    exec: Execution,
) -> RegressionTable {
    let pick = |f: &dyn Fn(&SampleLabel) -> bool| -> BTreeSet<String> {
        labels
            .iter()
            .filter(|(_, l)| f(l))
            .map(|(id, _)| id.clone())
            .collect()
    };
    let pooled = pick(&|l| !matches!(l, SampleLabel::Excluded(_)));
    let cross = pick(&|l| l.is_cross_border());
    let domestic = pick(&|l| *l == SampleLabel::VnVn);
    let full = terms(&TABLE9_SPEC);
    let no_dm: Vec<String> = full.iter().filter(|t| !t.contains("dm")).cloned().collect();
    let columns = vec![
        ColumnSpec {
            id: "t9_all".into(),
            heading: "1 (All-VN)".into(),
            terms: full.clone(),
            deals: Some(pooled),
        },
        ColumnSpec {
            id: "t9_cb".into(),
            heading: "2 (CB-VN)".into(),
            terms: full,
            deals: Some(cross),
        },
        ColumnSpec {
            id: "t9_vn".into(),
            heading: "3 (VN-VN)".into(),
            terms: no_dm,
            deals: Some(domestic),
        },
    ];
    run_columns(
        "Control gains across acquirer origins",
        columns,
        cars,
        features,
        windows,
        exec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_five_has_no_control() {
        assert!(!TABLE7_SPECS[4].contains(&"control"));
        assert!(TABLE7_SPECS.iter().enumerate().all(|(i, s)| i == 4 || s[0] == "control"));
    }

    #[test]
    fn domestic_column_drops_dm_terms() {
        let t = run_table9(&[], &[], &[], &EventWindow::liquidity(), Execution::Sequential);
        assert_eq!(t.columns[2].terms, ["control", "listed", "non_diversified", "mv", "mv*control"]);
        assert_eq!(t.cells.len(), 9);
        assert!(t.cells.iter().all(|c| c.outcome.is_err()));
        let text = t.render();
        assert!(text.contains("Control*DM Acquirer"));
        assert!(text.contains("Adj. R-square"));
    }
}
