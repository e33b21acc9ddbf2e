use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dyadic::{dyadic_reconstruct, DyadicProbability};
use super::topology::{NetworkTopology, TopologyKind};
use crate::error::{Error, Result};

/// Dense 4^N tables are only built up to this many parties.
pub const MAX_TABLE_PARTIES: usize = 8;

const NEGATIVE_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Outcomes a₁..a_N, each in 1..=4.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct OutcomeTuple(Vec<u8>);

impl OutcomeTuple {
    pub fn new(outcomes: Vec<u8>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Domain("empty outcome tuple".into()));
        }
        if let Some(bad) = outcomes.iter().find(|&&a| !(1..=4).contains(&a)) {
            return Err(Error::Domain(format!("outcome {bad} outside 1..=4")));
        }
        Ok(Self(outcomes))
    }

    pub fn uniform(outcome: u8, n: usize) -> Result<Self> {
        Self::new(vec![outcome; n])
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position in a dense table: base-4 digits (outcome − 1), party 0 most
    /// significant.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &a| acc * 4 + (a as usize - 1))
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Self(digits(index, n).into_iter().map(|d| d + 1).collect())
    }
}

impl TryFrom<Vec<u8>> for OutcomeTuple {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<OutcomeTuple> for Vec<u8> {
    fn from(t: OutcomeTuple) -> Self {
        t.0
    }
}

impl FromStr for OutcomeTuple {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parsed: std::result::Result<Vec<u8>, _> =
            s.split(',').map(|x| x.trim().parse::<u8>()).collect();
        Self::new(parsed.map_err(|e| Error::Domain(format!("bad outcome tuple '{s}': {e}")))?)
    }
}

impl fmt::Display for OutcomeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// 0-based base-4 digits of `index`, most significant first.
pub(crate) fn digits(mut index: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for slot in out.iter_mut().rev() {
        *slot = (index % 4) as u8;
        index /= 4;
    }
    out
}

/// Probability table over {1,2,3,4}^N, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    topology: NetworkTopology,
    label: String,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Validates the table: entries above −1e-12 are clamped to 0, anything
    /// lower is an error, and the total must be 1 within 1e-9.
    pub fn new(
        topology: NetworkTopology,
        label: impl Into<String>,
        mut probs: Vec<f64>,
    ) -> Result<Self> {
        let n = topology.n_parties();
        if n > MAX_TABLE_PARTIES {
            return Err(Error::capacity(
                "dense outcome table parties",
                n as u128,
                MAX_TABLE_PARTIES as u128,
            ));
        }
        if probs.len() != 1 << (2 * n) {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, expected 4^{n}",
                probs.len()
            )));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution("non-finite entry".into()));
            }
            if *p < 0.0 {
                if *p < -NEGATIVE_TOL {
                    return Err(Error::NegativeProbability(*p));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            topology,
            label: label.into(),
            probs,
        })
    }

    pub fn topology(&self) -> NetworkTopology {
        self.topology
    }

    pub fn n_parties(&self) -> usize {
        self.topology.n_parties()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, outcome: &OutcomeTuple) -> f64 {
        assert_eq!(outcome.len(), self.n_parties(), "outcome arity mismatch");
        self.probs[outcome.index()]
    }

    pub fn prob_at(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// (0-based outcome digits, probability) over the whole table.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<u8>, f64)> + '_ {
        let n = self.n_parties();
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (digits(i, n), p))
    }

    /// Total probability of outcomes satisfying `pred` (on 0-based digits).
    pub fn event(&self, pred: impl Fn(&[u8]) -> bool) -> f64 {
        self.entries()
            .filter(|(a, _)| pred(a))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn all_equal(&self) -> f64 {
        self.event(|a| a.iter().all(|&x| x == a[0]))
    }

    /// Joint marginal of `parties`, indexed like a dense table over them.
    pub fn marginal(&self, parties: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << (2 * parties.len())];
        for (a, p) in self.entries() {
            let idx = parties.iter().fold(0, |acc, &i| acc * 4 + a[i] as usize);
            out[idx] += p;
        }
        out
    }

    /// Table whose party `i` is party `perm[i]` of `self`.
    pub fn with_parties_permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_parties();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::Domain(format!(
                "{perm:?} is not a permutation of {n} parties"
            )));
        }
        let mut probs = vec![0.0; self.probs.len()];
        for (a, p) in self.entries() {
            let idx = perm.iter().fold(0, |acc, &src| acc * 4 + a[src] as usize);
            probs[idx] = p;
        }
        Ok(Self {
            topology: self.topology,
            label: self.label.clone(),
            probs,
        })
    }

    pub fn with_parties_reversed(&self) -> Self {
        let perm: Vec<usize> = (0..self.n_parties()).rev().collect();
        self.with_parties_permuted(&perm)
            .expect("reversal is a permutation")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len(), "table size mismatch");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Denominator exponent tried when attaching exact values to a report.
    pub fn dyadic_exponent(&self) -> u32 {
        (4 * self.topology.n_sources() as u32).min(40)
    }

    pub fn report(&self) -> DistributionReport {
        let k = self.dyadic_exponent();
        DistributionReport {
            topology: self.topology.kind(),
            n: self.n_parties(),
            basis: self.label.clone(),
            probabilities: self
                .entries()
                .map(|(a, p)| DistributionEntry {
                    outcome: a.iter().map(|d| d + 1).collect(),
                    p,
                    dyadic: confirmed_dyadic(p, k),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report())?)
    }
}

/// Dyadic form of `p` if it reconstructs consistently at 2^-k and at a finer
/// grid 2^-(k+10); the second check screens out irrational values that land
/// near a grid point by accident.
pub fn confirmed_dyadic(p: f64, k: u32) -> Option<DyadicProbability> {
    let coarse = dyadic_reconstruct(p, k).ok()?;
    match dyadic_reconstruct(p, k + 10) {
        Ok(fine) if fine == coarse => Some(coarse),
        Ok(_) => None,
        // finer grid out of exact range: accept the coarse result
        Err(Error::NonDyadic { residual, .. }) if residual.is_nan() => Some(coarse),
        Err(_) => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub topology: TopologyKind,
    pub n: usize,
    pub basis: String,
    pub probabilities: Vec<DistributionEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub outcome: Vec<u8>,
    pub p: f64,
    pub dyadic: Option<DyadicProbability>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> JointDistribution {
        let len = 1 << (2 * n);
        JointDistribution::new(
            NetworkTopology::polygon(n).unwrap(),
            "U",
            vec![1.0 / len as f64; len],
        )
        .unwrap()
    }

    #[test]
    fn outcome_tuple_indexing() {
        let t: OutcomeTuple = "1,4,2".parse().unwrap();
        assert_eq!(t.index(), 3 * 4 + 1);
        assert_eq!(OutcomeTuple::from_index(t.index(), 3), t);
        assert!(OutcomeTuple::new(vec![0, 1]).is_err());
        assert!(OutcomeTuple::new(vec![5]).is_err());
        assert!("1,x".parse::<OutcomeTuple>().is_err());
    }

    #[test]
    fn validation() {
        let top = NetworkTopology::polygon(2).unwrap();
        assert!(JointDistribution::new(top, "x", vec![0.5; 16]).is_err());
        assert!(JointDistribution::new(top, "x", vec![0.0; 15]).is_err());
        let mut p = vec![1.0 / 16.0; 16];
        p[0] -= 1e-3;
        p[1] += 1e-3 + 1.0 / 16.0;
        p[2] = -1.0 / 16.0;
        assert!(matches!(
            JointDistribution::new(top, "x", p),
            Err(Error::NegativeProbability(_))
        ));
        let mut p = vec![1.0 / 16.0; 16];
        p[0] += 1e-13;
        p[1] = -1e-13;
        p[2] += 1.0 / 16.0;
        let d = JointDistribution::new(top, "x", p).unwrap();
        assert_eq!(d.prob_at(1), 0.0);
    }

    #[test]
    fn capacity_bound() {
        let top = NetworkTopology::polygon(9).unwrap();
        let err = JointDistribution::new(top, "x", vec![]).unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn marginals_and_permutations() {
        let d = uniform(3);
        assert!(d.marginal(&[1]).iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((d.all_equal() - 4.0 / 64.0).abs() < 1e-15);
        assert_eq!(d.with_parties_reversed(), d);
        assert!(d.with_parties_permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn report_attaches_dyadics() {
        let r = uniform(2).report();
        assert_eq!(r.probabilities.len(), 16);
        assert_eq!(r.probabilities[5].outcome, vec![2, 2]);
        assert_eq!(
            r.probabilities[5].dyadic,
            Some(DyadicProbability::new(1, 4))
        );
        assert_eq!(confirmed_dyadic(1.0 / 3.0, 12), None);
    }
}
