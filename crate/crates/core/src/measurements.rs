//! Two-qubit joint-measurement bases and their diagnostics.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    antipode_state, bloch_to_state, partial_bloch, rotate, rotation_matrix, schmidt_coefficients,
    singlet, tensor, tetrahedron_vectors, BlochVector, Side, StateVector,
};

/// Largest tolerated |⟨ψ_j|ψ_k⟩ − δ_jk|.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BasisLabel {
    Ejm,
    EjmZ,
    MassarPopescu,
    Bsm,
    Custom,
}

impl BasisLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisLabel::Ejm => "EJM",
            BasisLabel::EjmZ => "EJM_Z",
            BasisLabel::MassarPopescu => "MASSAR_POPESCU",
            BasisLabel::Bsm => "BSM",
            BasisLabel::Custom => "CUSTOM",
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ejm" => Ok(BasisLabel::Ejm),
            "ejm-z" => Ok(BasisLabel::EjmZ),
            "mp" | "massar-popescu" => Ok(BasisLabel::MassarPopescu),
            "bsm" => Ok(BasisLabel::Bsm),
            "custom" => Ok(BasisLabel::Custom),
            other => Err(Error::Domain(format!("unknown basis label '{other}'"))),
        }
    }
}

/// Four two-qubit states defining a joint measurement. Outcome `j` (0-based)
/// corresponds to projecting onto `states[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitBasis {
    label: BasisLabel,
    states: [StateVector; 4],
}

impl TwoQubitBasis {
    /// Wraps four two-qubit states; orthonormality is checked separately by
    /// [`validate_basis`].
    pub fn new(label: BasisLabel, states: [StateVector; 4]) -> Result<Self> {
        if let Some(bad) = states.iter().position(|s| s.dim() != 4) {
            return Err(Error::Domain(format!(
                "basis state {bad} has dimension {}, expected 4",
                states[bad].dim()
            )));
        }
        Ok(Self { label, states })
    }

    pub fn from_label(label: BasisLabel) -> Result<Self> {
        match label {
            BasisLabel::Ejm => Ok(ejm_basis()),
            BasisLabel::EjmZ => Ok(ejm_z_basis()),
            BasisLabel::MassarPopescu => Ok(massar_popescu_basis()),
            BasisLabel::Bsm => Ok(bsm_basis()),
            BasisLabel::Custom => Err(Error::Domain(
                "a custom basis must be loaded from its states".into(),
            )),
        }
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn states(&self) -> &[StateVector; 4] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &StateVector {
        &self.states[j]
    }

    /// G[j][k] = ⟨ψ_j|ψ_k⟩.
    pub fn gram(&self) -> [[Complex64; 4]; 4] {
        let mut g = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (j, row) in g.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = self.states[j].inner(&self.states[k]);
            }
        }
        g
    }

    pub fn to_file(&self) -> BasisFile {
        BasisFile {
            label: self.label,
            states: self
                .states
                .iter()
                .map(|s| s.amps().iter().map(|a| [a.re, a.im]).collect())
                .collect(),
        }
    }

    pub fn from_file(file: &BasisFile) -> Result<Self> {
        if file.states.len() != 4 {
            return Err(Error::Domain(format!(
                "basis file has {} states, expected 4",
                file.states.len()
            )));
        }
        let mut states = Vec::with_capacity(4);
        for row in &file.states {
            if row.len() != 4 {
                return Err(Error::Domain(format!(
                    "basis state has {} amplitudes, expected 4",
                    row.len()
                )));
            }
            states.push(StateVector::new(
                row.iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            )?);
        }
        let states: [StateVector; 4] = states.try_into().expect("length checked");
        Self::new(file.label, states)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

/// On-disk form of a basis: one row of four `[re, im]` pairs per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisFile {
    pub label: BasisLabel,
    pub states: Vec<Vec<[f64; 2]>>,
}

/// EJM eigenstate attached to the unit vector `n`:
/// √(3/2)|n, −n⟩ + i(√3−1)/2 · ψ⁻.
pub fn ejm_state(n: &BlochVector) -> Result<StateVector> {
    let s3 = 3f64.sqrt();
    let anti = tensor(&bloch_to_state(n)?, &antipode_state(n)?)?;
    let product = anti.scale(Complex64::new((1.5f64).sqrt(), 0.0));
    let mix = singlet().scale(Complex64::new(0.0, (s3 - 1.0) / 2.0));
    Ok(product.add(&mix))
}

fn canonical(states: [StateVector; 4]) -> [StateVector; 4] {
    states.map(|s| s.with_canonical_phase())
}

/// The elegant joint measurement: one eigenstate per tetrahedron vertex.
pub fn ejm_basis() -> TwoQubitBasis {
    let states =
        tetrahedron_vectors().map(|m| ejm_state(&m).expect("tetrahedron vertices are unit"));
    TwoQubitBasis {
        label: BasisLabel::Ejm,
        states: canonical(states),
    }
}

/// Rotation taking m₁ to −e_z, as (axis, angle). Under it the first EJM
/// eigenstate becomes the z-axis state with real amplitudes on |01⟩, |10⟩.
pub fn ejm_z_rotation() -> (BlochVector, f64) {
    let m1 = tetrahedron_vectors()[0];
    let target = BlochVector::new(0.0, 0.0, -1.0);
    let axis = m1.cross(&target);
    let axis = axis.scale(1.0 / axis.norm());
    (axis, m1.dot(&target).clamp(-1.0, 1.0).acos())
}

/// The EJM with its tetrahedron rotated so the first vertex sits on −e_z.
/// The first state is ((√3+1)|01⟩ + (√3−1)|10⟩)/(2√2); the other three are
/// the same construction on the remaining rotated vertices. Related to
/// [`ejm_basis`] by the product unitary W⊗W of the rotation.
pub fn ejm_z_basis() -> TwoQubitBasis {
    let (axis, angle) = ejm_z_rotation();
    let r = rotation_matrix(&axis, angle);
    let states = tetrahedron_vectors().map(|m| {
        let mut n = rotate(&r, &m);
        n = n.scale(1.0 / n.norm());
        ejm_state(&n).expect("rotated vertices are unit")
    });
    TwoQubitBasis {
        label: BasisLabel::EjmZ,
        states: canonical(states),
    }
}

/// Massar–Popescu basis: (√3/2)|m_j, m_j⟩ ± ψ⁻/2 with signs (+, −, −, +).
pub fn massar_popescu_basis() -> TwoQubitBasis {
    let signs = [1.0, -1.0, -1.0, 1.0];
    let tet = tetrahedron_vectors();
    let states: [StateVector; 4] = std::array::from_fn(|j| {
        let ket = bloch_to_state(&tet[j]).expect("unit");
        let parallel = tensor(&ket, &ket).expect("two qubits");
        parallel
            .scale(Complex64::new(3f64.sqrt() / 2.0, 0.0))
            .add(&singlet().scale(Complex64::new(signs[j] / 2.0, 0.0)))
    });
    TwoQubitBasis {
        label: BasisLabel::MassarPopescu,
        states: canonical(states),
    }
}

/// Bell states in the order Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
pub fn bsm_basis() -> TwoQubitBasis {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mk = |a: [f64; 4]| {
        StateVector::new(a.iter().map(|x| Complex64::new(x * h, 0.0)).collect()).expect("dim 4")
    };
    TwoQubitBasis {
        label: BasisLabel::Bsm,
        states: canonical([
            mk([1.0, 0.0, 0.0, 1.0]),
            mk([1.0, 0.0, 0.0, -1.0]),
            mk([0.0, 1.0, 1.0, 0.0]),
            mk([0.0, 1.0, -1.0, 0.0]),
        ]),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub partial_bloch_first: BlochVector,
    pub partial_bloch_second: BlochVector,
    pub partial_bloch_norms: (f64, f64),
    /// (s₁, s₂) with s₁ ≥ s₂.
    pub schmidt: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDiagnostics {
    pub label: BasisLabel,
    pub states: Vec<StateDiagnostics>,
    /// Pair (j, k) with the largest |⟨ψ_j|ψ_k⟩ − δ_jk|.
    pub worst_pair: (usize, usize),
    pub max_gram_residual: f64,
    /// max over states of | |r|² + 4 s₁² s₂² − 1 |, which vanishes for
    /// normalized pure states.
    pub max_consistency_residual: f64,
    pub orthonormal: bool,
}

/// Diagnostics without a pass/fail verdict.
pub fn basis_diagnostics(b: &TwoQubitBasis) -> BasisDiagnostics {
    let gram = b.gram();
    let mut worst_pair = (0, 0);
    let mut max_gram_residual = -1.0;
    for (j, row) in gram.iter().enumerate() {
        for (k, g) in row.iter().enumerate() {
            let expected = if j == k { 1.0 } else { 0.0 };
            let residual = (g - expected).norm();
            if residual > max_gram_residual {
                max_gram_residual = residual;
                worst_pair = (j, k);
            }
        }
    }

    let mut max_consistency_residual = 0.0f64;
    let states = b
        .states()
        .iter()
        .map(|s| {
            let first = partial_bloch(s, Side::First).expect("dimension checked");
            let second = partial_bloch(s, Side::Second).expect("dimension checked");
            let schmidt = schmidt_coefficients(s).expect("dimension checked");
            let (s1, s2) = schmidt;
            let consistency = first.norm().powi(2) + 4.0 * s1 * s1 * s2 * s2 - 1.0;
            max_consistency_residual = max_consistency_residual.max(consistency.abs());
            StateDiagnostics {
                partial_bloch_first: first,
                partial_bloch_second: second,
                partial_bloch_norms: (first.norm(), second.norm()),
                schmidt,
            }
        })
        .collect();

    BasisDiagnostics {
        label: b.label(),
        states,
        worst_pair,
        max_gram_residual,
        max_consistency_residual,
        orthonormal: max_gram_residual <= ORTHONORMALITY_TOL,
    }
}

/// Diagnostics, or a validation error naming the worst non-orthonormal pair.
pub fn validate_basis(b: &TwoQubitBasis) -> Result<BasisDiagnostics> {
    let diag = basis_diagnostics(b);
    if !diag.orthonormal {
        let (i, j) = diag.worst_pair;
        return Err(Error::BasisValidation {
            i,
            j,
            residual: diag.max_gram_residual,
        });
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply_single_qubit, rotation_unitary};
    use approx::assert_abs_diff_eq;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_gram_identity(b: &TwoQubitBasis) {
        for (j, row) in b.gram().iter().enumerate() {
            for (k, g) in row.iter().enumerate() {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((g - expected).norm() < 1e-12, "G[{j}][{k}] = {g}");
            }
        }
    }

    #[test]
    fn ejm_is_orthonormal_with_tetrahedral_marginals() {
        let b = ejm_basis();
        assert_gram_identity(&b);
        // half of the integer vertex (±1, ±1, ±1), i.e. (√3/2)·m̂_j
        let tet = tetrahedron_vectors().map(|m| m.scale(3f64.sqrt()));
        for (j, s) in b.states().iter().enumerate() {
            let first = partial_bloch(s, Side::First).unwrap();
            let second = partial_bloch(s, Side::Second).unwrap();
            assert!(
                first.max_abs_diff(&tet[j].scale(0.5)) < 1e-12,
                "{j}: {first:?}"
            );
            assert!(second.max_abs_diff(&tet[j].scale(-0.5)) < 1e-12);
            assert_abs_diff_eq!(first.norm(), 3f64.sqrt() / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ejm_schmidt_pairs_are_identical() {
        let d = validate_basis(&ejm_basis()).unwrap();
        let (a0, b0) = d.states[0].schmidt;
        for s in &d.states {
            assert_abs_diff_eq!(s.schmidt.0, a0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.schmidt.1, b0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                s.schmidt.0.powi(2) + s.schmidt.1.powi(2),
                1.0,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(s.partial_bloch_norms.0, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        }
        assert!(d.max_consistency_residual < 1e-9);
    }

    #[test]
    fn ejm_canonical_phase_is_real_positive_on_largest_amplitude() {
        for s in ejm_basis().states() {
            let max = s.amps().iter().map(|a| a.norm()).fold(0.0, f64::max);
            let pivot = s.amps().iter().find(|a| a.norm() >= max - 1e-12).unwrap();
            assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
        }
    }

    #[test]
    fn ejm_z_first_state_is_the_axis_state() {
        let b = ejm_z_basis();
        assert_gram_identity(&b);
        let s3 = 3f64.sqrt();
        let d = 2.0 * 2f64.sqrt();
        let phi = b.state(0);
        assert!(phi.amplitude(0).norm() < 1e-12);
        assert!(phi.amplitude(3).norm() < 1e-12);
        assert!((phi.amplitude(1) - (s3 + 1.0) / d).norm() < 1e-12);
        assert!((phi.amplitude(2) - (s3 - 1.0) / d).norm() < 1e-12);
        assert_abs_diff_eq!(phi.amplitude(1).re, 0.9659258262890683, epsilon = 1e-12);
        assert_abs_diff_eq!(phi.amplitude(2).re, 0.2588190451025207, epsilon = 1e-12);
        assert_abs_diff_eq!(phi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ejm_z_is_a_local_rotation_of_ejm() {
        let (axis, angle) = ejm_z_rotation();
        let w = rotation_unitary(&axis, angle).unwrap();
        let ejm = ejm_basis();
        let z = ejm_z_basis();
        for j in 0..4 {
            let rotated =
                apply_single_qubit(&apply_single_qubit(ejm.state(j), 0, &w).unwrap(), 1, &w)
                    .unwrap();
            assert_abs_diff_eq!(rotated.inner(z.state(j)).norm(), 1.0, epsilon = 1e-12);
        }
        // overlap magnitudes between the two bases equal those of the rotated copy
        for j in 0..4 {
            for k in 0..4 {
                let direct = ejm.state(j).inner(ejm.state(k)).norm();
                let via_z = z.state(j).inner(z.state(k)).norm();
                assert_abs_diff_eq!(direct, via_z, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn massar_popescu_properties() {
        let b = massar_popescu_basis();
        assert_gram_identity(&b);
        let d = validate_basis(&b).unwrap();
        let (a0, b0) = d.states[0].schmidt;
        for s in &d.states {
            assert_abs_diff_eq!(s.schmidt.0, a0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.schmidt.1, b0, epsilon = 1e-12);
        }
        let m1 = tetrahedron_vectors()[0];
        let r = d.states[0].partial_bloch_first;
        let cos = r.dot(&m1) / r.norm();
        assert!(cos.clamp(-1.0, 1.0).acos() > 1e-3);
    }

    #[test]
    fn bsm_properties() {
        let d = validate_basis(&bsm_basis()).unwrap();
        for s in &d.states {
            assert!(s.partial_bloch_first.norm() < 1e-15);
            assert!(s.partial_bloch_second.norm() < 1e-15);
            assert_abs_diff_eq!(s.schmidt.0, H, epsilon = 1e-12);
            assert_abs_diff_eq!(s.schmidt.1, H, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaled_state_fails_validation() {
        let b = ejm_basis();
        let mut states = b.states().clone();
        states[2] = states[2].scale(Complex64::new(1.01, 0.0));
        let bad = TwoQubitBasis::new(BasisLabel::Custom, states).unwrap();
        match validate_basis(&bad) {
            Err(Error::BasisValidation { i, j, residual }) => {
                assert_eq!((i, j), (2, 2));
                assert_abs_diff_eq!(residual, 0.0201, epsilon = 1e-12);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let b = ejm_basis();
        let text = b.to_json().unwrap();
        let back = TwoQubitBasis::from_json(&text).unwrap();
        assert_eq!(back, b);
        assert!(TwoQubitBasis::from_json(r#"{"label":"EJM","states":[]}"#).is_err());
    }

    #[test]
    fn labels_parse() {
        assert_eq!("ejm".parse::<BasisLabel>().unwrap(), BasisLabel::Ejm);
        assert_eq!(
            "mp".parse::<BasisLabel>().unwrap(),
            BasisLabel::MassarPopescu
        );
        assert_eq!("ejm_z".parse::<BasisLabel>().unwrap(), BasisLabel::EjmZ);
        assert!("xyz".parse::<BasisLabel>().is_err());
    }
}
