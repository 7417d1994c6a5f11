use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::event::{CarResult, EventWindow};
use crate::screening::{DealFeatures, FEATURE_NAMES};

pub const INTERCEPT: &str = "intercept";

const ALIASES: [&str; 3] = ["dm_acquirer", "listed_target", "log_mv"];

fn check_name(name: &str) -> Result<()> {
    for part in name.split('*') {
        let part = part.trim();
        if !FEATURE_NAMES.contains(&part) && !ALIASES.contains(&part) {
            return Err(Error::UnknownFeature(name.to_string()));
        }
    }
    Ok(())
}

/// Rows are deals, the first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    pub deal_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    /// Deals left out for lacking a feature value or the window's CAR.
    pub dropped: usize,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }
}

/// Stacks `CAR(window)` against the named features for every deal that has
/// both. Interaction terms are written `a*b`.
pub fn build_design(
    cars: &[CarResult],
    features: &[DealFeatures],
    spec: &[String],
    window: &EventWindow,
) -> Result<DesignMatrix> {
    for name in spec {
        check_name(name)?;
    }
    let by_id: BTreeMap<&str, &DealFeatures> =
        features.iter().map(|f| (f.deal_id.as_str(), f)).collect();
    let mut columns = vec![INTERCEPT.to_string()];
    columns.extend(spec.iter().map(|s| s.trim().to_string()));
    let mut sorted: Vec<&CarResult> = cars.iter().collect();
    sorted.sort_by(|a, b| a.deal_id.cmp(&b.deal_id));

    let mut out = DesignMatrix {
        columns,
        deal_ids: Vec::new(),
        rows: Vec::new(),
        response: Vec::new(),
        dropped: 0,
    };
    'deals: for car in sorted {
        let (Some(y), Some(f)) = (car.car(window), by_id.get(car.deal_id.as_str())) else {
            out.dropped += 1;
            continue;
        };
        let mut row = Vec::with_capacity(spec.len() + 1);
        row.push(1.0);
        for name in spec {
            match f.value(name)? {
                Some(v) => row.push(v),
                None => {
                    out.dropped += 1;
                    continue 'deals;
                }
            }
        }
        out.deal_ids.push(car.deal_id.clone());
        out.rows.push(row);
        out.response.push(y);
    }
    if let Some(first) = out.rows.first() {
        for (j, name) in out.columns.iter().enumerate().skip(1) {
            if out.rows.iter().all(|r| r[j] == first[j]) {
                return Err(Error::DegenerateDesign {
                    column: name.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Deals with every named feature present.
    pub n: usize,
}

/// Pearson correlations over deals that have all named features.
pub fn correlation_matrix(features: &[DealFeatures], names: &[String]) -> Result<CorrelationMatrix> {
    for name in names {
        check_name(name)?;
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    'deals: for f in features {
        let mut row = Vec::with_capacity(names.len());
        for name in names {
            match f.value(name)? {
                Some(v) => row.push(v),
                None => continue 'deals,
            }
        }
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    let n = cols.first().map_or(features.len(), Vec::len);
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let nf = n as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / nf;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for (name, (norm, col)) in names.iter().zip(norms.iter().zip(&cols)) {
        if *norm == 0.0 || col.iter().all(|v| *v == col[0]) {
            return Err(Error::ConstantColumn {
                column: name.clone(),
            });
        }
    }
    let k = names.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in 0..i {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        values,
        n,
    })
}
