use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::distribution::JointDistribution;

/// Outcome tuples sharing one equality pattern, e.g. "AAB" for a₁ = a₂ ≠ a₃.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternClass {
    pub pattern: String,
    pub count: usize,
    pub total: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceStats {
    pub n_parties: usize,
    /// P(a₁ = a₂)
    pub p_pair_equal: Option<f64>,
    /// P(a₁ = a₂ = … = a_N)
    pub p_all_equal: f64,
    /// P(a₁ = k | a₂ = k), k = 1..4
    pub p_cond_pair: Option<[f64; 4]>,
    /// P(a₁ = k | a₂ = a₃ = k), k = 1..4
    pub p_cond_triple: Option<[f64; 4]>,
    /// Single-party marginals, one row per party.
    pub marginals: Vec<[f64; 4]>,
    pub patterns: Vec<PatternClass>,
}

/// Canonical pattern string: the first distinct outcome becomes 'A', the
/// next new one 'B', and so on.
pub fn coincidence_pattern(outcomes: &[u8]) -> String {
    let mut seen: Vec<u8> = Vec::new();
    outcomes
        .iter()
        .map(|a| {
            let pos = seen.iter().position(|s| s == a).unwrap_or_else(|| {
                seen.push(*a);
                seen.len() - 1
            });
            (b'A' + pos as u8) as char
        })
        .collect()
}

pub fn coincidence_stats(d: &JointDistribution) -> CoincidenceStats {
    let n = d.n_parties();
    let marginals: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let m = d.marginal(&[i]);
            [m[0], m[1], m[2], m[3]]
        })
        .collect();

    let p_pair_equal = (n >= 2).then(|| d.event(|a| a[0] == a[1]));
    let p_cond_pair = (n >= 2).then(|| {
        let joint = d.marginal(&[0, 1]);
        std::array::from_fn(|k| ratio(joint[5 * k], marginals[1][k]))
    });
    let p_cond_triple = (n >= 3).then(|| {
        let joint = d.marginal(&[0, 1, 2]);
        let bc = d.marginal(&[1, 2]);
        std::array::from_fn(|k| ratio(joint[21 * k], bc[5 * k]))
    });

    let mut classes: BTreeMap<String, PatternClass> = BTreeMap::new();
    for (a, p) in d.entries() {
        let pattern = coincidence_pattern(&a);
        let entry = classes.entry(pattern.clone()).or_insert(PatternClass {
            pattern,
            count: 0,
            total: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        });
        entry.count += 1;
        entry.total += p;
        entry.min = entry.min.min(p);
        entry.max = entry.max.max(p);
    }

    CoincidenceStats {
        n_parties: n,
        p_pair_equal,
        p_all_equal: d.all_equal(),
        p_cond_pair,
        p_cond_triple,
        marginals,
        patterns: classes.into_values().collect(),
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}
