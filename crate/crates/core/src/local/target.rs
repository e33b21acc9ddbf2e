//! Search objectives and comparison targets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::JointDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Objective {
    MaxAllEqual,
    MinL1ToTarget,
    MinLinfToTarget,
}

impl Objective {
    pub fn maximizes(self) -> bool {
        self == Objective::MaxAllEqual
    }

    pub fn needs_target(self) -> bool {
        !self.maximizes()
    }

    /// Value to maximize internally: the objective itself, or minus a distance.
    pub(crate) fn score(self, value: f64) -> f64 {
        if self.maximizes() {
            value
        } else {
            -value
        }
    }

    pub fn evaluate(self, dist: &JointDistribution, target: Option<&Target>) -> Result<f64> {
        match self {
            Objective::MaxAllEqual => Ok(dist.all_equal()),
            Objective::MinL1ToTarget => require(target)?.distance(dist, Norm::L1),
            Objective::MinLinfToTarget => require(target)?.distance(dist, Norm::Linf),
        }
    }
}

fn require(target: Option<&Target>) -> Result<&Target> {
    target.ok_or_else(|| Error::InvalidTarget("objective needs a target distribution".into()))
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-equal" | "max-all-equal" => Ok(Objective::MaxAllEqual),
            "l1" | "min-l1-to-target" => Ok(Objective::MinL1ToTarget),
            "linf" | "min-linf-to-target" => Ok(Objective::MinLinfToTarget),
            other => Err(Error::Domain(format!("unknown objective {other:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MaxAllEqual => "MAX_ALL_EQUAL",
            Objective::MinL1ToTarget => "MIN_L1_TO_TARGET",
            Objective::MinLinfToTarget => "MIN_LINF_TO_TARGET",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    Linf,
}

/// A distribution to approach, optionally coarse-grained so that each party's
/// outcomes {1,2} and {3,4} are merged into two bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    n_parties: usize,
    coarse: bool,
    label: String,
    cells: Vec<f64>,
}

impl Target {
    pub fn new(dist: &JointDistribution) -> Self {
        Self {
            n_parties: dist.n_parties(),
            coarse: false,
            label: dist.label().to_string(),
            cells: dist.probs().to_vec(),
        }
    }

    pub fn coarse_grained(dist: &JointDistribution) -> Self {
        let n = dist.n_parties();
        let mut cells = vec![0.0; 1 << n];
        for (index, &p) in dist.probs().iter().enumerate() {
            cells[coarse_cell(index, n)] += p;
        }
        Self {
            n_parties: n,
            coarse: true,
            label: format!("{} (binary coarse-grained)", dist.label()),
            cells,
        }
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn is_coarse(&self) -> bool {
        self.coarse
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Cell holding the fine outcome index (base 4, party 0 most significant).
    pub fn cell_of(&self, index: usize) -> usize {
        if self.coarse {
            coarse_cell(index, self.n_parties)
        } else {
            index
        }
    }

    pub fn check_parties(&self, n: usize) -> Result<()> {
        if n != self.n_parties {
            return Err(Error::InvalidTarget(format!(
                "target has {} parties, model has {n}",
                self.n_parties
            )));
        }
        Ok(())
    }

    pub fn distance(&self, dist: &JointDistribution, norm: Norm) -> Result<f64> {
        self.check_parties(dist.n_parties())?;
        let mut mapped = vec![0.0; self.cells.len()];
        for (index, &p) in dist.probs().iter().enumerate() {
            mapped[self.cell_of(index)] += p;
        }
        let diffs = mapped.iter().zip(&self.cells).map(|(a, b)| (a - b).abs());
        Ok(match norm {
            Norm::L1 => diffs.sum(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        })
    }
}

fn coarse_cell(index: usize, n: usize) -> usize {
    (0..n).fold(0, |cell, i| {
        let a = (index >> (2 * (n - 1 - i))) & 3;
        cell * 2 + a / 2
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkTopology;

    #[test]
    fn objective_parsing() {
        assert_eq!(
            "all-equal".parse::<Objective>().unwrap(),
            Objective::MaxAllEqual
        );
        assert_eq!("L1".parse::<Objective>().unwrap(), Objective::MinL1ToTarget);
        assert_eq!(
            "MIN_LINF_TO_TARGET".parse::<Objective>().unwrap(),
            Objective::MinLinfToTarget
        );
        assert!("l2".parse::<Objective>().is_err());
        assert_eq!(Objective::MinL1ToTarget.to_string(), "MIN_L1_TO_TARGET");
    }

    #[test]
    fn coarse_graining_sums_blocks() {
        let top = NetworkTopology::polygon(2).unwrap();
        let mut probs = vec![0.0; 16];
        probs[0] = 0.5; // (1,1)
        probs[1] = 0.25; // (1,2)
        probs[14] = 0.25; // (4,3)
        let d = JointDistribution::new(top, "t", probs).unwrap();
        let t = Target::coarse_grained(&d);
        assert_eq!(t.cells(), &[0.75, 0.0, 0.0, 0.25]);
        assert_eq!(t.distance(&d, Norm::L1).unwrap(), 0.0);
        let uniform = JointDistribution::new(top, "u", vec![1.0 / 16.0; 16]).unwrap();
        assert!((t.distance(&uniform, Norm::Linf).unwrap() - 0.5).abs() < 1e-15);
        assert!((Target::new(&d).distance(&uniform, Norm::L1).unwrap() - 1.625).abs() < 1e-15);
    }
}
