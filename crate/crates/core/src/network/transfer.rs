//! Transfer-matrix evaluation of event probabilities.
//!
//! Contracting one party's bra ⟨Φ_a| with the singlet to its right gives a
//! 2×2 matrix T_a = conj(M_a)·S, where M_a and S are the amplitude matrices
//! of Φ_a and ψ⁻. A polygon outcome has amplitude Tr(T_{a_1}⋯T_{a_N}); an
//! open line has the amplitude matrix S·T_{a_1}⋯T_{a_N} indexed by the two
//! dangling qubits. Marginalizing over parties uses the doubled 4×4 matrices
//! E_a = T_a ⊗ conj(T_a).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::distribution::OutcomeTuple;
use super::topology::{NetworkTopology, TopologyKind};
use crate::error::{Error, Result};
use crate::linalg::{
    amplitude_matrix, mat2_conj, mat2_identity, mat2_mul, mat2_trace, singlet, Mat2,
};
use crate::measurements::TwoQubitBasis;

pub const MAX_EVENT_PARTIES: usize = 64;

const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// a₁ = a₂ = … = a_N
    AllEqual,
    /// a₁ = … = a_n for the first n parties, the rest unconstrained.
    PrefixEqual(usize),
    Specific(OutcomeTuple),
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all-equal") || s.eq_ignore_ascii_case("all_equal") {
            return Ok(Event::AllEqual);
        }
        if let Some(rest) = s
            .strip_prefix("prefix=")
            .or_else(|| s.strip_prefix("prefix:"))
        {
            let n = rest
                .parse::<usize>()
                .map_err(|_| Error::UnknownEvent(s.to_string()))?;
            return Ok(Event::PrefixEqual(n));
        }
        if let Some(rest) = s
            .strip_prefix("tuple=")
            .or_else(|| s.strip_prefix("tuple:"))
        {
            return Ok(Event::Specific(rest.parse()?));
        }
        Err(Error::UnknownEvent(s.to_string()))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::AllEqual => f.write_str("all-equal"),
            Event::PrefixEqual(n) => write!(f, "prefix={n}"),
            Event::Specific(t) => {
                let parts: Vec<String> = t.as_slice().iter().map(|a| a.to_string()).collect();
                write!(f, "tuple={}", parts.join(","))
            }
        }
    }
}

type Mat4 = [[Complex64; 4]; 4];

#[derive(Clone, Debug)]
pub struct TransferMatrices {
    singlet: Mat2,
    per_outcome: [Mat2; 4],
}

impl TransferMatrices {
    pub fn new(basis: &TwoQubitBasis) -> Self {
        let s = amplitude_matrix(&singlet()).expect("two qubits");
        let per_outcome = std::array::from_fn(|a| {
            let m = amplitude_matrix(basis.state(a)).expect("basis states are two-qubit");
            mat2_mul(&mat2_conj(&m), &s)
        });
        Self {
            singlet: s,
            per_outcome,
        }
    }

    /// T_a for 0-based outcome `a`.
    pub fn matrix(&self, a: usize) -> &Mat2 {
        &self.per_outcome[a]
    }

    fn chain(&self, outcomes: &[u8]) -> Mat2 {
        outcomes.iter().fold(mat2_identity(), |acc, &a| {
            mat2_mul(&acc, &self.per_outcome[a as usize])
        })
    }

    /// Probability of one outcome tuple (0-based digits).
    pub fn specific(&self, kind: TopologyKind, outcomes: &[u8]) -> f64 {
        let chain = self.chain(outcomes);
        match kind {
            TopologyKind::Polygon => mat2_trace(&chain).norm_sqr(),
            TopologyKind::OpenLine => {
                let m = mat2_mul(&self.singlet, &chain);
                m.iter().flatten().map(|z| z.norm_sqr()).sum()
            }
        }
    }

    fn doubled(m: &Mat2) -> Mat4 {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[2 * i + k][2 * j + l] = m[i][j] * m[k][l].conj();
                    }
                }
            }
        }
        out
    }

    /// Σ_k P(first `prefix` parties output k), other parties marginalized.
    fn prefix_equal(&self, kind: TopologyKind, n: usize, prefix: usize) -> f64 {
        let doubled: [Mat4; 4] = std::array::from_fn(|a| Self::doubled(&self.per_outcome[a]));
        let any = doubled.iter().fold(mat4_zero(), |acc, e| mat4_add(&acc, e));
        let tail = mat4_pow(&any, n - prefix);
        let mut total = Complex64::new(0.0, 0.0);
        for e in &doubled {
            let chain = mat4_mul(&mat4_pow(e, prefix), &tail);
            total += match kind {
                TopologyKind::Polygon => (0..4).map(|i| chain[i][i]).sum::<Complex64>(),
                TopologyKind::OpenLine => {
                    // Σ_{dL,dR} |(S·X)[dL][dR]|² = ⟨δ| (S⊗S̄) X⊗X̄ |δ⟩, δ = Σ_d |d,d⟩
                    let boundary = mat4_mul(&Self::doubled(&self.singlet), &chain);
                    let diag = [0, 3];
                    diag.iter()
                        .flat_map(|&r| diag.iter().map(move |&c| (r, c)))
                        .map(|(r, c)| boundary[r][c])
                        .sum()
                }
            };
        }
        total.re
    }
}

fn mat4_zero() -> Mat4 {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

fn mat4_identity() -> Mat4 {
    let mut m = mat4_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn mat4_add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = mat4_zero();
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn mat4_pow(m: &Mat4, e: usize) -> Mat4 {
    (0..e).fold(mat4_identity(), |acc, _| mat4_mul(&acc, m))
}

fn clamp_probability(p: f64) -> Result<f64> {
    if p < -NEGATIVE_TOL {
        return Err(Error::NegativeProbability(p));
    }
    Ok(p.max(0.0))
}

/// Probability of `event`, by transfer-matrix contraction (no 4^N table).
pub fn event_probability(
    top: NetworkTopology,
    basis: &TwoQubitBasis,
    event: &Event,
) -> Result<f64> {
    let n = top.n_parties();
    if n > MAX_EVENT_PARTIES {
        return Err(Error::capacity(
            "transfer-matrix parties",
            n as u128,
            MAX_EVENT_PARTIES as u128,
        ));
    }
    let tm = TransferMatrices::new(basis);
    let p = match event {
        Event::AllEqual => (0..4u8).map(|k| tm.specific(top.kind(), &vec![k; n])).sum(),
        Event::PrefixEqual(prefix) => {
            if *prefix == 0 || *prefix > n {
                return Err(Error::Range(format!(
                    "prefix length {prefix} outside 1..={n}"
                )));
            }
            tm.prefix_equal(top.kind(), n, *prefix)
        }
        Event::Specific(tuple) => {
            if tuple.len() != n {
                return Err(Error::Domain(format!(
                    "outcome tuple has {} entries for {n} parties",
                    tuple.len()
                )));
            }
            let digits: Vec<u8> = tuple.as_slice().iter().map(|a| a - 1).collect();
            tm.specific(top.kind(), &digits)
        }
    };
    clamp_probability(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{bsm_basis, ejm_basis};

    #[test]
    fn event_parsing() {
        assert_eq!("all-equal".parse::<Event>().unwrap(), Event::AllEqual);
        assert_eq!("prefix=3".parse::<Event>().unwrap(), Event::PrefixEqual(3));
        assert_eq!(
            "tuple=1,2,4".parse::<Event>().unwrap(),
            Event::Specific(OutcomeTuple::new(vec![1, 2, 4]).unwrap())
        );
        assert!(matches!(
            "pairs".parse::<Event>(),
            Err(Error::UnknownEvent(_))
        ));
        assert!(matches!(
            "prefix=x".parse::<Event>(),
            Err(Error::UnknownEvent(_))
        ));
    }

    #[test]
    fn single_party_line_is_certain() {
        let top = NetworkTopology::open_line(1).unwrap();
        let p = event_probability(top, &ejm_basis(), &Event::AllEqual).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prefix_bounds() {
        let top = NetworkTopology::polygon(4).unwrap();
        assert!(event_probability(top, &bsm_basis(), &Event::PrefixEqual(0)).is_err());
        assert!(event_probability(top, &bsm_basis(), &Event::PrefixEqual(5)).is_err());
        let p1 = event_probability(top, &bsm_basis(), &Event::PrefixEqual(1)).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_above_64() {
        let top = NetworkTopology::polygon(65).unwrap();
        assert!(event_probability(top, &ejm_basis(), &Event::AllEqual)
            .unwrap_err()
            .is_capacity());
    }

    #[test]
    fn tuple_arity_checked() {
        let top = NetworkTopology::polygon(3).unwrap();
        let e = Event::Specific(OutcomeTuple::new(vec![1, 1]).unwrap());
        assert!(event_probability(top, &ejm_basis(), &e).is_err());
    }
}
