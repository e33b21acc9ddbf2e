//! Exact recovery of probabilities of the form n / 2^k from floats.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted |p·2^k − round(p·2^k)|, in units of 2^-k, for small
/// numerators. Larger numerators also get a relative allowance of
/// [`DYADIC_RELATIVE_ULPS`] machine epsilons to absorb rounding in `p` itself,
/// never more than [`DYADIC_RESIDUAL_CAP`].
pub const DYADIC_RESIDUAL_TOL: f64 = 1e-6;

pub const DYADIC_RELATIVE_ULPS: f64 = 256.0;

pub const DYADIC_RESIDUAL_CAP: f64 = 1e-3;

/// Numerators beyond 2^52 are not exactly representable next to a fraction.
const MAX_EXACT_NUMERATOR: f64 = 4_503_599_627_370_496.0;

/// n / 2^k in lowest terms (n odd, or n = 0 with k = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicProbability {
    #[serde(rename = "num")]
    pub numerator: u64,
    #[serde(rename = "log2den")]
    pub log2_denominator: u32,
}

impl DyadicProbability {
    pub fn new(numerator: u64, log2_denominator: u32) -> Self {
        let mut n = numerator;
        let mut k = log2_denominator;
        if n == 0 {
            k = 0;
        }
        while k > 0 && n.is_multiple_of(2) {
            n /= 2;
            k -= 1;
        }
        Self {
            numerator: n,
            log2_denominator: k,
        }
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.log2_denominator as i32)
    }

    pub fn denominator(&self) -> u128 {
        1u128 << self.log2_denominator
    }

    /// The exact quotient self / other, in lowest terms.
    pub fn ratio(&self, other: &DyadicProbability) -> Result<ExactRatio> {
        if other.numerator == 0 {
            return Err(Error::Domain("ratio with a zero denominator".into()));
        }
        let (ka, kb) = (self.log2_denominator, other.log2_denominator);
        let k = ka.max(kb);
        let num = (self.numerator as u128) << (k - ka);
        let den = (other.numerator as u128) << (k - kb);
        Ok(ExactRatio::new(num, den))
    }
}

impl fmt::Display for DyadicProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator())
    }
}

/// Reconstructs `p` as numerator / 2^`log2_denominator`, reduced to lowest
/// terms. Fails when `p` sits more than [`DYADIC_RESIDUAL_TOL`] grid units
/// (or the relative allowance, whichever is larger) away from the nearest
/// multiple of 2^-k.
pub fn dyadic_reconstruct(p: f64, log2_denominator: u32) -> Result<DyadicProbability> {
    if !p.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::Range(format!("probability {p} outside [0, 1]")));
    }
    if log2_denominator > 62 {
        return Err(Error::Range(format!(
            "denominator 2^{log2_denominator} exceeds 2^62"
        )));
    }
    let scaled = p.max(0.0) * 2f64.powi(log2_denominator as i32);
    if scaled > MAX_EXACT_NUMERATOR {
        return Err(Error::NonDyadic {
            p,
            log2_denominator,
            residual: f64::NAN,
        });
    }
    let numerator = scaled.round();
    let residual = (scaled - numerator).abs();
    let tol = DYADIC_RESIDUAL_TOL
        .max(DYADIC_RELATIVE_ULPS * f64::EPSILON * scaled)
        .min(DYADIC_RESIDUAL_CAP);
    if residual >= tol {
        return Err(Error::NonDyadic {
            p,
            log2_denominator,
            residual,
        });
    }
    Ok(DyadicProbability::new(numerator as u64, log2_denominator))
}

/// A nonnegative rational in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactRatio {
    pub num: u128,
    pub den: u128,
}

impl ExactRatio {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = num.gcd(&den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for ExactRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reconstruct_examples() {
        let d = dyadic_reconstruct(0.09765625, 10).unwrap();
        assert_eq!(
            d,
            DyadicProbability {
                numerator: 25,
                log2_denominator: 8
            }
        );
        assert_eq!(d.to_string(), "25/256");
        let half = dyadic_reconstruct(0.5, 1).unwrap();
        assert_eq!((half.numerator, half.log2_denominator), (1, 1));
        assert!(matches!(
            dyadic_reconstruct(1.0 / 3.0, 8),
            Err(Error::NonDyadic { .. })
        ));
    }

    #[test]
    fn zero_and_one() {
        assert_eq!(
            dyadic_reconstruct(0.0, 12).unwrap(),
            DyadicProbability::new(0, 0)
        );
        assert_eq!(
            dyadic_reconstruct(1.0, 12).unwrap(),
            DyadicProbability::new(1, 0)
        );
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(matches!(dyadic_reconstruct(1.5, 3), Err(Error::Range(_))));
        assert!(matches!(dyadic_reconstruct(-0.1, 3), Err(Error::Range(_))));
        assert!(matches!(
            dyadic_reconstruct(f64::NAN, 3),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn ratio_reduces() {
        let a = DyadicProbability::new(25, 6);
        let b = DyadicProbability::new(7, 4);
        assert_eq!(a.ratio(&b).unwrap(), ExactRatio { num: 25, den: 28 });
    }

    proptest! {
        #[test]
        fn reconstruct_recovers_grid_values(n in 0u64..(1 << 20), k in 20u32..40) {
            let p = n as f64 / 2f64.powi(k as i32);
            let d = dyadic_reconstruct(p, k).unwrap();
            prop_assert_eq!(d, DyadicProbability::new(n, k));
            prop_assert_eq!(d.value(), p);
        }
    }
}
