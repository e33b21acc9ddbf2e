//! Reference contraction on the full 2^(2·sources)-dimensional state vector.

use num_complex::Complex64;

use super::distribution::{JointDistribution, MAX_TABLE_PARTIES};
use super::topology::NetworkTopology;
use crate::error::{Error, Result};
use crate::linalg::{singlet, tensor};
use crate::measurements::TwoQubitBasis;

/// Which of its two qubits a party feeds into the first slot of its basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    /// (left qubit, right qubit)
    #[default]
    Forward,
    /// (right qubit, left qubit): the mirror image of the network.
    Reversed,
}

/// All 4^N outcome probabilities, computed by building the product of
/// singlets, rotating each party's qubit pair into the measurement basis and
/// reading off squared amplitudes. Dangling qubits of an open line are traced
/// out.
pub fn joint_distribution_naive(
    top: NetworkTopology,
    basis: &TwoQubitBasis,
) -> Result<JointDistribution> {
    joint_distribution_naive_oriented(top, basis, Orientation::Forward)
}

pub fn joint_distribution_naive_oriented(
    top: NetworkTopology,
    basis: &TwoQubitBasis,
    orientation: Orientation,
) -> Result<JointDistribution> {
    let n = top.n_parties();
    if n > MAX_TABLE_PARTIES {
        return Err(Error::capacity(
            "naive contraction parties",
            n as u128,
            MAX_TABLE_PARTIES as u128,
        ));
    }
    let n_qubits = 2 * top.n_sources() as u32;

    let mut state = singlet();
    for _ in 1..top.n_sources() {
        state = tensor(&state, &singlet())?;
    }
    let mut amps = state.into_amps();

    let pairs: Vec<(u32, u32)> = (0..n)
        .map(|i| {
            let (left_src, right_src) = top.party_sources(i);
            let (l, r) = (2 * left_src as u32 + 1, 2 * right_src as u32);
            match orientation {
                Orientation::Forward => (l, r),
                Orientation::Reversed => (r, l),
            }
        })
        .collect();

    // ⟨ψ_a| rows of the change of basis
    let rows: Vec<Vec<Complex64>> = basis
        .states()
        .iter()
        .map(|s| s.amps().iter().map(|a| a.conj()).collect())
        .collect();

    for &(hi, lo) in &pairs {
        apply_two_qubit_rows(&mut amps, n_qubits, hi, lo, &rows);
    }

    let mut probs = vec![0.0; 1 << (2 * n)];
    for (index, amp) in amps.iter().enumerate() {
        let bit = |q: u32| (index >> (n_qubits - 1 - q)) & 1;
        let outcome = pairs
            .iter()
            .fold(0usize, |acc, &(hi, lo)| acc * 4 + 2 * bit(hi) + bit(lo));
        probs[outcome] += amp.norm_sqr();
    }

    JointDistribution::new(top, basis.label().as_str(), probs)
}

/// Replaces the amplitudes on qubits (hi, lo) by their coefficients in the
/// basis whose bras are `rows`; the outcome index a is written as the bit pair
/// (a >> 1, a & 1) on (hi, lo).
fn apply_two_qubit_rows(
    amps: &mut [Complex64],
    n_qubits: u32,
    hi: u32,
    lo: u32,
    rows: &[Vec<Complex64>],
) {
    let sh = 1usize << (n_qubits - 1 - hi);
    let sl = 1usize << (n_qubits - 1 - lo);
    let offsets = [0, sl, sh, sh | sl];
    for base in 0..amps.len() {
        if base & (sh | sl) != 0 {
            continue;
        }
        let v: [Complex64; 4] = std::array::from_fn(|k| amps[base + offsets[k]]);
        for (a, row) in rows.iter().enumerate() {
            amps[base + offsets[a]] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
}
