use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::DesignMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Classical `s^2 (X'X)^-1` standard errors.
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided, Student t with `n - k` degrees of freedom.
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_variance: f64,
    pub n_used: usize,
    pub dropped: usize,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// `(coef, se, p)` of a term.
    pub fn term(&self, term: &str) -> Option<(f64, f64, f64)> {
        self.index(term)
            .map(|i| (self.coefficients[i], self.std_errors[i], self.p_values[i]))
    }

    pub fn dof(&self) -> usize {
        self.n_used - self.terms.len()
    }
}

/// Householder QR of the `n x k` column-major matrix `a` in place, applying
/// the same reflections to `y`. Returns the diagonal of R.
fn householder(a: &mut [Vec<f64>], y: &mut [f64]) -> Result<Vec<f64>> {
    let k = a.len();
    let n = y.len();
    let scale = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut diag = Vec::with_capacity(k);
    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularDesign);
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, p) in col[j..].iter_mut().zip(&v) {
                *c -= f * p;
            }
        };
        for col in a.iter_mut().skip(j + 1) {
            reflect(col);
        }
        reflect(y);
        a[j][j] = alpha;
        for c in a[j][j + 1..n].iter_mut() {
            *c = 0.0;
        }
        diag.push(alpha);
    }
    Ok(diag)
}

/// OLS by Householder QR.
pub fn ols(design: &DesignMatrix) -> Result<RegressionResult> {
    let n = design.n();
    let k = design.k();
    if n <= k {
        return Err(Error::InsufficientObservations {
            needed: k + 1,
            got: n,
        });
    }
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|j| design.rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut qty = design.response.clone();
    householder(&mut a, &mut qty)?;

    // R^-1 by back substitution, column by column.
    let r = |i: usize, j: usize| a[j][i];
    let mut rinv = vec![vec![0.0; k]; k];
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for m in i + 1..=col {
                s -= r(i, m) * rinv[m][col];
            }
            rinv[i][col] = s / r(i, i);
        }
    }
    let coefficients: Vec<f64> = (0..k)
        .map(|i| (i..k).map(|j| rinv[i][j] * qty[j]).sum())
        .collect();

    let residuals: Vec<f64> = design
        .rows
        .iter()
        .zip(&design.response)
        .map(|(row, y)| y - row.iter().zip(&coefficients).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let nf = n as f64;
    let y_bar = design.response.iter().sum::<f64>() / nf;
    let sst: f64 = design.response.iter().map(|y| (y - y_bar).powi(2)).sum();
    let dof = n - k;
    let s2 = ssr / dof as f64;
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN };
    let p = (k - 1) as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (nf - 1.0) / (nf - p - 1.0);

    let std_errors: Vec<f64> = (0..k)
        .map(|i| (s2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    let t_stats: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| b / se)
        .collect();
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
    let p_values = t_stats
        .iter()
        .map(|t| {
            if t.is_nan() {
                f64::NAN
            } else {
                (2.0 * dist.sf(t.abs())).min(1.0)
            }
        })
        .collect();
    Ok(RegressionResult {
        terms: design.columns.clone(),
        coefficients,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        residual_variance: s2,
        n_used: n,
        dropped: design.dropped,
        residuals,
    })
}
