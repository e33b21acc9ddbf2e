//! Closed forms for the EJM all-equal events and the table built from them.

use serde::{Deserialize, Serialize};

use super::distribution::confirmed_dyadic;
use super::dyadic::{DyadicProbability, ExactRatio};
use crate::error::{Error, Result};

pub const MAX_CLOSED_FORM_N: usize = 64;

fn check_range(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_CLOSED_FORM_N {
        return Err(Error::Range(format!(
            "{name} defined for {min} <= n <= {MAX_CLOSED_FORM_N}, got {n}"
        )));
    }
    Ok(())
}

/// P(a₁ = … = a_n) for n consecutive parties of an open line:
/// ((√3+1)^{2n} + (√3−1)^{2n}) / 2^{4n−1}.
pub fn closed_form_line(n: usize) -> Result<f64> {
    check_range("line all-equal", n, 1)?;
    let s3 = 3f64.sqrt();
    let e = 2 * n as i32;
    Ok(((s3 + 1.0).powi(e) + (s3 - 1.0).powi(e)) / 2f64.powi(4 * n as i32 - 1))
}

/// P(a₁ = … = a_N) on an N-gon:
/// ((−√3−1)^N + (√3−1)^N)² / 4^{2N−1}.
pub fn closed_form_polygon(n: usize) -> Result<f64> {
    check_range("polygon all-equal", n, 2)?;
    let s3 = 3f64.sqrt();
    let e = n as i32;
    let inner = (-s3 - 1.0).powi(e) + (s3 - 1.0).powi(e);
    Ok(inner * inner / 4f64.powi(2 * e - 1))
}

/// P(a_N equals the others | a₁ = … = a_{N−1}) on an N-gon.
pub fn conditional_all_equal(n: usize) -> Result<f64> {
    check_range("conditional all-equal", n, 3)?;
    Ok(closed_form_polygon(n)? / closed_form_line(n - 1)?)
}

/// Large-N limit of [`conditional_all_equal`]: 1/(8 − 4√3) = (2+√3)/4.
pub fn conditional_limit() -> f64 {
    (2.0 + 3f64.sqrt()) / 4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub n: usize,
    pub line: f64,
    pub line_exact: Option<DyadicProbability>,
    pub polygon: Option<f64>,
    pub polygon_exact: Option<DyadicProbability>,
    pub conditional: Option<f64>,
    pub conditional_exact: Option<ExactRatio>,
}

/// Rows N = 1..=max_n of line / polygon all-equal probabilities and their
/// ratio, with exact values wherever the float is exactly representable.
pub fn table2(max_n: usize) -> Result<Vec<Table2Row>> {
    check_range("table size", max_n, 1)?;
    (1..=max_n)
        .map(|n| {
            let line = closed_form_line(n)?;
            let line_exact = confirmed_dyadic(line, 4 * n as u32 - 1);
            let (polygon, polygon_exact) = if n >= 2 {
                let p = closed_form_polygon(n)?;
                (Some(p), confirmed_dyadic(p, 4 * n as u32 - 2))
            } else {
                (None, None)
            };
            // N = 2 is the ratio of the N = 2 polygon to the single-party line.
            let (conditional, conditional_exact) = if n >= 2 {
                let prev_line = closed_form_line(n - 1)?;
                let prev_exact = confirmed_dyadic(prev_line, 4 * (n as u32 - 1) - 1);
                let value = polygon.expect("n >= 2") / prev_line;
                let exact = match (polygon_exact, prev_exact) {
                    (Some(p), Some(l)) => Some(p.ratio(&l)?),
                    _ => None,
                };
                (Some(value), exact)
            } else {
                (None, None)
            };
            Ok(Table2Row {
                n,
                line,
                line_exact,
                polygon,
                polygon_exact,
                conditional,
                conditional_exact,
            })
        })
        .collect()
}
