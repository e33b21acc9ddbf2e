//! Locality test for a two-party Bell scenario with four inputs and four
//! outputs per side, as obtained from a four-party open line by reading the
//! outer outcomes (a₁, a₄) as inputs and the inner ones (a₂, a₃) as outputs.
//!
//! Membership in the local polytope (convex hull of the 256 × 256 products of
//! deterministic strategies) is decided by a phase-one simplex. Either branch
//! returns a certificate that can be re-checked without the solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{JointDistribution, TopologyKind};

use super::simplex::{phase_one, ColumnOracle, Status};

pub const INPUTS: usize = 4;
pub const OUTPUTS: usize = 4;
/// Entries of p(a,b|x,y).
pub const TABLE_SIZE: usize = INPUTS * INPUTS * OUTPUTS * OUTPUTS;
/// Deterministic strategies per side.
pub const STRATEGIES: usize = 256;
pub const VERTICES: usize = STRATEGIES * STRATEGIES;

pub const LOCAL_RESIDUAL_TOL: f64 = 1e-8;
pub const NONLOCAL_MARGIN_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 20_000;

const FEASIBILITY_TOL: f64 = 1e-9;

fn idx(x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * INPUTS + y) * OUTPUTS + a) * OUTPUTS + b
}

/// Outputs of a deterministic strategy for inputs 0..4, input 0 most significant.
fn strategy(code: usize) -> [usize; INPUTS] {
    std::array::from_fn(|x| (code >> (2 * (INPUTS - 1 - x))) & 3)
}

/// Conditional table p(a, b | x, y); every index is 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellTarget {
    label: String,
    p: Vec<f64>,
}

impl BellTarget {
    pub fn new(label: impl Into<String>, mut p: Vec<f64>) -> Result<Self> {
        if p.len() != TABLE_SIZE {
            return Err(Error::InvalidTarget(format!(
                "{} entries, expected {TABLE_SIZE}",
                p.len()
            )));
        }
        for v in p.iter_mut() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidTarget(format!(
                    "entry {v} is not a probability"
                )));
            }
            *v = v.max(0.0);
        }
        for x in 0..INPUTS {
            for y in 0..INPUTS {
                let total: f64 = p[idx(x, y, 0, 0)..idx(x, y, 0, 0) + OUTPUTS * OUTPUTS]
                    .iter()
                    .sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidTarget(format!(
                        "inputs ({x},{y}) sum to {total}"
                    )));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            p,
        })
    }

    /// p(a₂, a₃ | a₁, a₄) from a four-party open-line distribution.
    pub fn from_open_line(d: &JointDistribution) -> Result<Self> {
        let top = d.topology();
        if top.kind() != TopologyKind::OpenLine || top.n_parties() != 4 {
            return Err(Error::InvalidTarget(format!(
                "need a four-party open line, got a {top}"
            )));
        }
        let outer = d.marginal(&[0, 3]);
        let mut p = vec![0.0; TABLE_SIZE];
        for x in 0..INPUTS {
            for y in 0..INPUTS {
                let px = outer[x * INPUTS + y];
                if px <= 0.0 {
                    return Err(Error::InvalidTarget(format!(
                        "p(a1={}, a4={}) = 0",
                        x + 1,
                        y + 1
                    )));
                }
                for a in 0..OUTPUTS {
                    for b in 0..OUTPUTS {
                        p[idx(x, y, a, b)] = d.prob_at(((x * 4 + a) * 4 + b) * 4 + y) / px;
                    }
                }
            }
        }
        Self::new(format!("{} conditioned on outer outcomes", d.label()), p)
    }

    pub fn uniform() -> Self {
        Self {
            label: "uniform".into(),
            p: vec![1.0 / 16.0; TABLE_SIZE],
        }
    }

    /// PR box on inputs {0,1} and outputs {0,1}; inputs 2 and 3 behave like input 0.
    pub fn pr_box() -> Self {
        let mut p = vec![0.0; TABLE_SIZE];
        for x in 0..INPUTS {
            for y in 0..INPUTS {
                let (xb, yb) = (usize::from(x == 1), usize::from(y == 1));
                for a in 0..2 {
                    let b = a ^ (xb & yb);
                    p[idx(x, y, a, b)] = 0.5;
                }
            }
        }
        Self {
            label: "PR box".into(),
            p,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn probability(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[idx(x, y, a, b)]
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    /// Linear functional value Σ F·p.
    pub fn functional_value(&self, functional: &[f64]) -> f64 {
        functional.iter().zip(&self.p).map(|(f, p)| f * p).sum()
    }
}

/// Functional value on the deterministic point (alice, bob).
fn vertex_value(functional: &[f64], alice: &[usize; INPUTS], bob: &[usize; INPUTS]) -> f64 {
    let mut v = 0.0;
    for (x, &a) in alice.iter().enumerate() {
        for (y, &b) in bob.iter().enumerate() {
            v += functional[idx(x, y, a, b)];
        }
    }
    v
}

/// Largest functional value over all 65536 deterministic points, by enumeration.
pub fn classical_bound(functional: &[f64]) -> f64 {
    let strategies: Vec<[usize; INPUTS]> = (0..STRATEGIES).map(strategy).collect();
    let mut best = f64::NEG_INFINITY;
    for alice in &strategies {
        for bob in &strategies {
            best = best.max(vertex_value(functional, alice, bob));
        }
    }
    best
}

/// CHSH functional on inputs {0,1}, with each output read as ± by its parity.
pub fn chsh_functional() -> Vec<f64> {
    let sign = |a: usize| if a.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut f = vec![0.0; TABLE_SIZE];
    for x in 0..2 {
        for y in 0..2 {
            let s = if x == 1 && y == 1 { -1.0 } else { 1.0 };
            for a in 0..OUTPUTS {
                for b in 0..OUTPUTS {
                    f[idx(x, y, a, b)] = s * sign(a) * sign(b);
                }
            }
        }
    }
    f
}

pub fn chsh_value(target: &BellTarget) -> f64 {
    target.functional_value(&chsh_functional())
}

struct Polytope;

impl ColumnOracle for Polytope {
    fn column(&self, v: usize) -> Vec<usize> {
        let (alice, bob) = (strategy(v / STRATEGIES), strategy(v % STRATEGIES));
        let mut rows = Vec::with_capacity(INPUTS * INPUTS);
        for (x, &a) in alice.iter().enumerate() {
            for (y, &b) in bob.iter().enumerate() {
                rows.push(idx(x, y, a, b));
            }
        }
        rows
    }

    fn best_column(&self, duals: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for f in 0..STRATEGIES {
            let alice = strategy(f);
            // for fixed Alice the best Bob answers each input independently
            let mut value = 0.0;
            let mut g = 0;
            for y in 0..INPUTS {
                let mut h = [0.0; OUTPUTS];
                for (b, slot) in h.iter_mut().enumerate() {
                    *slot = alice
                        .iter()
                        .enumerate()
                        .map(|(x, &a)| duals[idx(x, y, a, b)])
                        .sum();
                }
                let mut arg = 0;
                for b in 1..OUTPUTS {
                    if h[b] > h[arg] {
                        arg = b;
                    }
                }
                value += h[arg];
                g = g * 4 + arg;
            }
            if value > best.1 {
                best = (f * STRATEGIES + g, value);
            }
        }
        best
    }

    fn first_column_above(&self, duals: &[f64], tol: f64) -> Option<usize> {
        let strategies: Vec<[usize; INPUTS]> = (0..STRATEGIES).map(strategy).collect();
        for (f, alice) in strategies.iter().enumerate() {
            for (g, bob) in strategies.iter().enumerate() {
                if vertex_value(duals, alice, bob) > tol {
                    return Some(f * STRATEGIES + g);
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Local,
    Nonlocal,
    Inconclusive,
}

/// One deterministic point with its convex weight; outcomes are 1-based and
/// listed for inputs 1..=4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyWeight {
    pub alice: [u8; INPUTS],
    pub bob: [u8; INPUTS],
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityCertificate {
    pub verdict: Verdict,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<StrategyWeight>,
    /// LOCAL: largest |Σ w·D − p| over the table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// NONLOCAL: coefficients F[x][y][a][b], flattened with x most significant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical_bound: Option<f64>,
    /// Functional evaluated on the target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub phase_one_objective: f64,
    pub iterations: usize,
}

impl LocalityCertificate {
    /// Recomputes the residual or the separation margin from scratch.
    pub fn verify(&self, target: &BellTarget) -> bool {
        match self.verdict {
            Verdict::Local => {
                let total: f64 = self.weights.iter().map(|w| w.weight).sum();
                if self.weights.iter().any(|w| w.weight < 0.0)
                    || (total - 1.0).abs() > LOCAL_RESIDUAL_TOL
                {
                    return false;
                }
                reconstruction_residual(&self.weights, target)
                    .is_some_and(|r| r < LOCAL_RESIDUAL_TOL)
            }
            Verdict::Nonlocal => match &self.functional {
                Some(f) if f.len() == TABLE_SIZE => {
                    target.functional_value(f) - classical_bound(f) > NONLOCAL_MARGIN_TOL
                }
                _ => false,
            },
            Verdict::Inconclusive => false,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn reconstruction_residual(weights: &[StrategyWeight], target: &BellTarget) -> Option<f64> {
    let mut mix = vec![0.0; TABLE_SIZE];
    for w in weights {
        for x in 0..INPUTS {
            for y in 0..INPUTS {
                let (a, b) = (w.alice[x] as usize, w.bob[y] as usize);
                if !(1..=OUTPUTS).contains(&a) || !(1..=OUTPUTS).contains(&b) {
                    return None;
                }
                mix[idx(x, y, a - 1, b - 1)] += w.weight;
            }
        }
    }
    Some(
        mix.iter()
            .zip(target.entries())
            .map(|(m, p)| (m - p).abs())
            .fold(0.0, f64::max),
    )
}

pub fn bell_lp_check(target: &BellTarget) -> LocalityCertificate {
    bell_lp_check_with_limit(target, DEFAULT_MAX_ITERATIONS)
}

pub fn bell_lp_check_with_limit(target: &BellTarget, max_iterations: usize) -> LocalityCertificate {
    let solution = phase_one(&Polytope, target.entries(), max_iterations);
    let mut cert = LocalityCertificate {
        verdict: Verdict::Inconclusive,
        target: target.label().to_string(),
        weights: Vec::new(),
        residual: None,
        functional: None,
        classical_bound: None,
        target_value: None,
        margin: None,
        phase_one_objective: solution.objective,
        iterations: solution.iterations,
    };
    if solution.status != Status::Optimal {
        return cert;
    }
    if solution.objective <= FEASIBILITY_TOL {
        let total: f64 = solution.primal.iter().map(|p| p.1).sum();
        let weights: Vec<StrategyWeight> = solution
            .primal
            .iter()
            .map(|&(v, x)| StrategyWeight {
                alice: strategy(v / STRATEGIES).map(|a| a as u8 + 1),
                bob: strategy(v % STRATEGIES).map(|b| b as u8 + 1),
                weight: x / total,
            })
            .collect();
        let residual = reconstruction_residual(&weights, target);
        cert.weights = weights;
        cert.residual = residual;
        if residual.is_some_and(|r| r < LOCAL_RESIDUAL_TOL) {
            cert.verdict = Verdict::Local;
        }
    } else {
        let scale = solution.duals.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let functional: Vec<f64> = solution.duals.iter().map(|v| v / scale).collect();
        let bound = classical_bound(&functional);
        let value = target.functional_value(&functional);
        cert.functional = Some(functional);
        cert.classical_bound = Some(bound);
        cert.target_value = Some(value);
        cert.margin = Some(value - bound);
        if value - bound > NONLOCAL_MARGIN_TOL {
            cert.verdict = Verdict::Nonlocal;
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_codes_round_trip() {
        assert_eq!(strategy(0), [0, 0, 0, 0]);
        assert_eq!(strategy(0b11_10_01_00), [3, 2, 1, 0]);
        let col = Polytope.column(5 * STRATEGIES + 7);
        assert_eq!(col.len(), 16);
    }

    #[test]
    fn pricing_agrees_with_enumeration() {
        let duals: Vec<f64> = (0..TABLE_SIZE)
            .map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5)
            .collect();
        let (v, value) = Polytope.best_column(&duals);
        assert!((classical_bound(&duals) - value).abs() < 1e-12);
        let rows = Polytope.column(v);
        let direct: f64 = rows.iter().map(|&r| duals[r]).sum();
        assert!((direct - value).abs() < 1e-12);
    }

    #[test]
    fn chsh_bounds() {
        let f = chsh_functional();
        assert_eq!(classical_bound(&f), 2.0);
        assert_eq!(chsh_value(&BellTarget::pr_box()), 4.0);
        assert_eq!(chsh_value(&BellTarget::uniform()), 0.0);
    }

    #[test]
    fn uniform_is_local() {
        let t = BellTarget::uniform();
        let cert = bell_lp_check(&t);
        assert_eq!(cert.verdict, Verdict::Local);
        assert!(cert.verify(&t));
    }

    #[test]
    fn pr_box_is_nonlocal() {
        let t = BellTarget::pr_box();
        let cert = bell_lp_check(&t);
        assert_eq!(cert.verdict, Verdict::Nonlocal);
        assert!(cert.margin.unwrap() > NONLOCAL_MARGIN_TOL);
        assert!(cert.verify(&t));
        // the certificate does not transfer to a local point
        assert!(!cert.verify(&BellTarget::uniform()));
    }

    #[test]
    fn malformed_targets_rejected() {
        assert!(BellTarget::new("short", vec![0.0; 10]).is_err());
        assert!(BellTarget::new("flat", vec![0.0; TABLE_SIZE]).is_err());
        let mut p = BellTarget::uniform().entries().to_vec();
        p[0] = -0.1;
        assert!(BellTarget::new("negative", p).is_err());
    }
}
