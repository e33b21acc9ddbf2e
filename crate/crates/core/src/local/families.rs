//! Two named triangle models: the symmetric q-model and the asymmetric
//! bit-sharing model.
//!
//! Triangle sources are indexed as in [`NetworkTopology::triangle`]: source 0
//! joins parties 0 and 1 (called γ), source 1 joins parties 1 and 2 (α),
//! source 2 joins parties 2 and 0 (β). Party 0 therefore reads (β, γ), party 1
//! reads (γ, α) and party 2 reads (α, β).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkTopology;

use super::model::{evaluate_model, HiddenSource, ResponseTable, RingLocalModel};

/// Cardinality of a q-model source: a uniform 4-dit paired with a biased bit.
pub const Q_SOURCE_CARD: usize = 8;

/// Encodes (dit in 0..4, bit) as one hidden value.
pub fn q_value(dit: usize, bit: usize) -> usize {
    2 * dit + bit
}

fn q_source(q: f64) -> Result<HiddenSource> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Range(format!("q = {q} outside [0, 1]")));
    }
    let weights = (0..Q_SOURCE_CARD)
        .map(|v| 0.25 * if v % 2 == 1 { q } else { 1.0 - q })
        .collect();
    HiddenSource::new(weights)
}

/// If exactly one side carries bit 1 the party outputs that side's dit;
/// otherwise it outputs either dit with probability 1/2.
fn q_response(party: usize) -> ResponseTable {
    let mut rows = Vec::with_capacity(Q_SOURCE_CARD * Q_SOURCE_CARD);
    for l in 0..Q_SOURCE_CARD {
        for r in 0..Q_SOURCE_CARD {
            let (dl, bl, dr, br) = (l / 2, l % 2, r / 2, r % 2);
            let mut row = [0.0; 4];
            match (bl, br) {
                (1, 0) => row[dl] = 1.0,
                (0, 1) => row[dr] = 1.0,
                _ => {
                    row[dl] += 0.5;
                    row[dr] += 0.5;
                }
            }
            rows.push(row);
        }
    }
    ResponseTable::new(party, Q_SOURCE_CARD, Q_SOURCE_CARD, rows)
        .expect("q-model rows are stochastic")
}

/// Symmetric q-model with the same bit bias q on all three sources.
pub fn q_model(q: f64) -> Result<RingLocalModel> {
    q_model_with_biases(q, q, q)
}

/// q-model with a separate bias for each of α, β and γ.
pub fn q_model_with_biases(q_alpha: f64, q_beta: f64, q_gamma: f64) -> Result<RingLocalModel> {
    let sources = vec![q_source(q_gamma)?, q_source(q_alpha)?, q_source(q_beta)?];
    let responses = (0..3).map(q_response).collect();
    RingLocalModel::new(NetworkTopology::triangle(), sources, responses)
}

/// (13 + 9q − 9q²)/64, the q-model all-equal probability in closed form.
pub fn q_model_all_equal_closed_form(q: f64) -> f64 {
    (13.0 + 9.0 * q - 9.0 * q * q) / 64.0
}

/// Correlations of the q-model once the three bits are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitCombinationRow {
    /// (α, β, γ) bits.
    pub bits: [u8; 3],
    pub p_pair_equal: f64,
    pub p_all_equal: f64,
}

/// The eight rows with bits fixed, ordered with α most significant.
pub fn q_model_bit_rows() -> Result<Vec<BitCombinationRow>> {
    (0..8u8)
        .map(|code| {
            let bits = [code >> 2 & 1, code >> 1 & 1, code & 1];
            let [a, b, g] = bits.map(f64::from);
            let d = evaluate_model(&q_model_with_biases(a, b, g)?)?;
            Ok(BitCombinationRow {
                bits,
                p_pair_equal: d.event(|o| o[0] == o[1]),
                p_all_equal: d.all_equal(),
            })
        })
        .collect()
}

/// Outputs of parties 0, 1, 2 for each received bit pair (first, second),
/// indexed 2·first + second.
pub const ASYMMETRIC_OUTPUTS: [[u8; 3]; 4] = [[2, 4, 3], [1, 1, 1], [3, 2, 4], [4, 3, 2]];

/// Each source is a fair bit u handing u to the party on its left end and
/// 1 − u to the party on its right end. A party receives (1 − l, r) from its
/// (left, right) sources and answers deterministically.
pub fn asymmetric_model() -> RingLocalModel {
    let sources = vec![HiddenSource::uniform(2).expect("cardinality 2"); 3];
    let responses = (0..3)
        .map(|party| {
            let outcomes: Vec<u8> = (0..4)
                .map(|code| {
                    let (l, r) = (code / 2, code % 2);
                    ASYMMETRIC_OUTPUTS[2 * (1 - l) + r][party]
                })
                .collect();
            ResponseTable::deterministic(party, 2, 2, &outcomes).expect("valid outcomes")
        })
        .collect();
    RingLocalModel::new(NetworkTopology::triangle(), sources, responses).expect("triangle model")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::JointDistribution;

    fn distinct(o: &[u8]) -> bool {
        o[0] != o[1] && o[1] != o[2] && o[0] != o[2]
    }

    #[test]
    fn q_model_edges() {
        let d = evaluate_model(&q_model(0.0).unwrap()).unwrap();
        assert!((d.all_equal() - 13.0 / 64.0).abs() < 1e-15);
        let d = evaluate_model(&q_model(0.5).unwrap()).unwrap();
        assert!((d.all_equal() - 61.0 / 256.0).abs() < 1e-15);
        assert!(q_model(-0.1).is_err());
        assert!(q_model(1.1).is_err());
        assert!(q_model(f64::NAN).is_err());
    }

    #[test]
    fn q_model_marginals_uniform() {
        let d = evaluate_model(&q_model(0.3).unwrap()).unwrap();
        for i in 0..3 {
            for p in d.marginal(&[i]) {
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
        // symmetric under cyclic relabeling of the parties
        let rotated = d.with_parties_permuted(&[1, 2, 0]).unwrap();
        assert!(d.max_abs_diff(&rotated) < 1e-15);
    }

    #[test]
    fn bit_rows() {
        let rows = q_model_bit_rows().unwrap();
        let expected = [
            (7.0 / 16.0, 13.0 / 64.0),
            (1.0, 0.25),
            (0.25, 0.25),
            (5.0 / 8.0, 0.25),
            (0.25, 0.25),
            (5.0 / 8.0, 0.25),
            (0.25, 0.25),
            (7.0 / 16.0, 13.0 / 64.0),
        ];
        for (row, (ab, abc)) in rows.iter().zip(expected) {
            assert!((row.p_pair_equal - ab).abs() < 1e-12, "{:?}", row.bits);
            assert!((row.p_all_equal - abc).abs() < 1e-12, "{:?}", row.bits);
        }
    }

    #[test]
    fn asymmetric_statistics() {
        let m = asymmetric_model();
        assert!(m.is_deterministic());
        let d: JointDistribution = evaluate_model(&m).unwrap();
        assert_eq!(d.all_equal(), 0.5);
        assert_eq!(d.event(|o| o[0] == o[1]), 0.5);
        assert_eq!(d.event(|o| o[1] == o[2]), 0.5);
        let zero = d
            .entries()
            .filter(|(o, p)| distinct(o) && *p == 0.0)
            .count();
        let all = d.entries().filter(|(o, _)| distinct(o)).count();
        assert_eq!((zero, all), (20, 24));
    }
}
