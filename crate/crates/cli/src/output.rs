//! Report rendering: pretty JSON or a flat CSV table.

use serde::Serialize;

use ejm_core::network::{DistributionEntry, DyadicProbability};
use ejm_core::Result;

/// A finished report in both output formats, plus whether its checks passed.
pub struct Emitted {
    pub json: String,
    pub csv: String,
    pub ok: bool,
}

impl Emitted {
    pub fn new<T: Serialize>(report: &T, csv: String, ok: bool) -> Result<Self> {
        let mut json = serde_json::to_string_pretty(report)?;
        json.push('\n');
        Ok(Self { json, csv, ok })
    }
}

/// Builds CSV text one row at a time.
#[derive(Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let cells: Vec<String> = cells.into_iter().map(Into::into).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// (numerator, denominator) cells; empty when no exact form is known.
pub fn dyadic_cells(d: Option<DyadicProbability>) -> [String; 2] {
    match d {
        Some(d) => [d.numerator.to_string(), d.denominator().to_string()],
        None => [String::new(), String::new()],
    }
}

pub fn distribution_csv(n: usize, entries: &[DistributionEntry]) -> String {
    let mut header: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    header.extend(["p", "numerator", "denominator"].map(String::from));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for e in entries {
        let mut cells: Vec<String> = e.outcome.iter().map(|a| a.to_string()).collect();
        cells.push(e.p.to_string());
        cells.extend(dyadic_cells(e.dyadic));
        csv.row(cells);
    }
    csv.finish()
}
