//! Number formatting and aligned plain-text tables.

use std::fmt::Write as _;

pub use crate::inference::significance_stars as stars;

const SIG_DIGITS: i32 = 6;

/// Six significant digits, never scientific notation, trailing zeros
/// trimmed. Non-finite values print as `inf`, `-inf` or `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS - 1 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit; one extra decimal is harmless
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Fixed-decimal rendering for report tables, e.g. `0.013`.
pub fn fmt_fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return fmt_num(x);
    }
    let s = format!("{x:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// `0.013***`
pub fn coef_cell(coef: f64, p: f64) -> String {
    format!("{}{}", fmt_fixed(coef, 3), stars(p))
}

/// `(0.004)`, or `(-)` when absent.
pub fn se_cell(se: Option<f64>) -> String {
    match se {
        Some(v) if v.is_finite() => format!("({})", fmt_fixed(v, 3)),
        _ => "(-)".into(),
    }
}

/// Plain-text table with a left-aligned first column and right-aligned rest.
#[derive(Debug, Clone, Default)]
pub struct TextTable {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl TextTable {
    pub fn new(title: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            title: title.into(),
            header,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn render(&self) -> String {
        let ncol = self
            .rows
            .iter()
            .map(Vec::len)
            .chain([self.header.len()])
            .max()
            .unwrap_or(0);
        let mut widths = vec![0usize; ncol];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in row.iter().enumerate() {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
        let total: usize = widths.iter().sum::<usize>() + 2 * ncol.saturating_sub(1);
        let rule = "-".repeat(total);
        let line = |row: &[String]| {
            let mut s = String::new();
            for (i, w) in widths.iter().enumerate() {
                let c = row.get(i).map(String::as_str).unwrap_or("");
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        out.push_str(&line(&self.header));
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

pub const STAR_NOTE: &str = "*, ** and *** denote statistical significance at 10%, 5% and 1%.";
