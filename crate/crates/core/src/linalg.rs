//! Small dense complex linear algebra for qubit registers and Bloch-sphere
//! geometry.
//!
//! Qubit ordering is big-endian: in `a ⊗ b` the left factor is the most
//! significant part of the basis index, and qubit 0 of an n-qubit register is
//! the most significant bit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexAmplitude = Complex64;

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[Complex64; 2]; 2];

/// Largest register handled anywhere in the crate.
pub const MAX_QUBITS: u32 = 24;

const UNIT_NORM_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Largest componentwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// Cylindrical height η.
    pub fn eta(&self) -> f64 {
        self.z
    }

    /// Azimuth φ = atan2(y, x), taken as 0 on the polar axis.
    pub fn phi(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// The four vertices m₁..m₄ of the regular tetrahedron inscribed in the unit
/// sphere.
pub fn tetrahedron_vectors() -> [BlochVector; 4] {
    let s = 1.0 / 3f64.sqrt();
    [
        BlochVector::new(s, s, s),
        BlochVector::new(s, -s, -s),
        BlochVector::new(-s, s, -s),
        BlochVector::new(-s, -s, s),
    ]
}

/// Pure state on a register of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Domain(format!(
                "state dimension {dim} is not a power of two"
            )));
        }
        if dim > 1 << MAX_QUBITS {
            return Err(Error::capacity(
                "state dimension",
                dim as u128,
                1u128 << MAX_QUBITS,
            ));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    /// Computational basis vector `|index⟩` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_qubits(&self) -> u32 {
        self.amps.len().trailing_zeros()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "inner product of unequal dimensions"
        );
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sum of unequal dimensions");
        Self {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Same ray, with the global phase chosen so the largest-magnitude
    /// amplitude is real and positive. Near-ties go to the lowest index.
    pub fn with_canonical_phase(&self) -> Self {
        let max = self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let Some(pivot) = self.amps.iter().find(|a| a.norm() >= max - 1e-12) else {
            return self.clone();
        };
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        let phase = pivot.conj() / pivot.norm();
        self.scale(phase)
    }
}

pub fn ket0() -> StateVector {
    StateVector {
        amps: vec![ONE, ZERO],
    }
}

pub fn ket1() -> StateVector {
    StateVector {
        amps: vec![ZERO, ONE],
    }
}

fn check_unit(m: &BlochVector) -> Result<()> {
    let n = m.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Domain(format!(
            "Bloch vector ({}, {}, {}) has norm {n}, expected 1",
            m.x, m.y, m.z
        )));
    }
    Ok(())
}

fn cylindrical_ket(eta: f64, phi: f64) -> StateVector {
    let eta = eta.clamp(-1.0, 1.0);
    let half = Complex64::from_polar(1.0, phi / 2.0);
    StateVector {
        amps: vec![
            half * ((1.0 - eta) / 2.0).sqrt(),
            half.conj() * ((1.0 + eta) / 2.0).sqrt(),
        ],
    }
}

/// Qubit ket pointing along the unit vector `m`:
/// √((1−η)/2)·e^{iφ/2}|0⟩ + √((1+η)/2)·e^{−iφ/2}|1⟩.
pub fn bloch_to_state(m: &BlochVector) -> Result<StateVector> {
    check_unit(m)?;
    Ok(cylindrical_ket(m.eta(), m.phi()))
}

/// The ket `|−m⟩`, obtained from the `|m⟩` formula by η → −η and φ → φ + π.
/// This fixes the relative phase between `|m⟩` and `|−m⟩`.
pub fn antipode_state(m: &BlochVector) -> Result<StateVector> {
    check_unit(m)?;
    Ok(cylindrical_ket(-m.eta(), m.phi() + std::f64::consts::PI))
}

/// ψ⁻ = (|01⟩ − |10⟩)/√2.
pub fn singlet() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector {
        amps: vec![ZERO, h, -h, ZERO],
    }
}

/// Kronecker product `a ⊗ b` with `a` as the most significant factor.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let dim = a.dim() as u128 * b.dim() as u128;
    if dim > 1u128 << MAX_QUBITS {
        return Err(Error::capacity(
            "tensor product dimension",
            dim,
            1u128 << MAX_QUBITS,
        ));
    }
    let mut amps = Vec::with_capacity(dim as usize);
    for x in &a.amps {
        amps.extend(b.amps.iter().map(|y| x * y));
    }
    Ok(StateVector { amps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

/// Amplitudes of a two-qubit state arranged as a matrix `M[i][j] = ⟨ij|ψ⟩`.
pub fn amplitude_matrix(state: &StateVector) -> Result<Mat2> {
    if state.dim() != 4 {
        return Err(Error::Domain(format!(
            "expected a two-qubit state, got dimension {}",
            state.dim()
        )));
    }
    let a = state.amps();
    Ok([[a[0], a[1]], [a[2], a[3]]])
}

/// Reduced density matrix of one qubit of a two-qubit pure state.
pub fn reduced_density(state: &StateVector, side: Side) -> Result<Mat2> {
    let m = amplitude_matrix(state)?;
    let mut rho = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            rho[r][c] = match side {
                Side::First => (0..2).map(|k| m[r][k] * m[c][k].conj()).sum(),
                Side::Second => (0..2).map(|k| m[k][r] * m[k][c].conj()).sum(),
            };
        }
    }
    Ok(rho)
}

/// Bloch vector of the reduced state on `side`. Its norm is below 1 for
/// entangled inputs.
pub fn partial_bloch(state: &StateVector, side: Side) -> Result<BlochVector> {
    let rho = reduced_density(state, side)?;
    Ok(PauliTriple::bloch_convention().expectation(&rho))
}

/// Schmidt coefficients (s₁ ≥ s₂) of a normalized two-qubit state.
pub fn schmidt_coefficients(state: &StateVector) -> Result<(f64, f64)> {
    let m = amplitude_matrix(state)?;
    let n2 = state.norm_sqr();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (n2 * n2 - 4.0 * det * det).max(0.0).sqrt();
    let big = ((n2 + disc) / 2.0).max(0.0);
    let small = ((n2 - disc) / 2.0).max(0.0);
    Ok((big.sqrt(), small.sqrt()))
}

/// Three Hermitian, unitary, traceless 2×2 operators used to read off Bloch
/// vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTriple {
    pub sx: Mat2,
    pub sy: Mat2,
    pub sz: Mat2,
}

impl PauliTriple {
    /// Textbook matrices with σz|0⟩ = |0⟩.
    pub fn standard() -> Self {
        Self {
            sx: [[ZERO, ONE], [ONE, ZERO]],
            sy: [[ZERO, -I], [I, ZERO]],
            sz: [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// The triple under which `⟨m|σ⃗|m⟩ = m` for kets built by
    /// [`bloch_to_state`]: (σx, −σy, −σz) in the textbook representation,
    /// i.e. the standard triple conjugated by the swap |0⟩ ↔ |1⟩.
    pub fn bloch_convention() -> Self {
        let s = Self::standard();
        Self {
            sx: s.sx,
            sy: mat2_scale(&s.sy, -ONE),
            sz: mat2_scale(&s.sz, -ONE),
        }
    }

    pub fn components(&self) -> [&Mat2; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// (Tr ρσx, Tr ρσy, Tr ρσz).
    pub fn expectation(&self, rho: &Mat2) -> BlochVector {
        let [x, y, z] = self.components().map(|s| mat2_trace(&mat2_mul(rho, s)).re);
        BlochVector::new(x, y, z)
    }

    /// ⟨ψ|σ⃗|ψ⟩ for a single-qubit ket.
    pub fn ket_expectation(&self, ket: &StateVector) -> BlochVector {
        assert_eq!(ket.dim(), 2, "single-qubit ket expected");
        let a = ket.amps();
        let rho = [
            [a[0] * a[0].conj(), a[0] * a[1].conj()],
            [a[1] * a[0].conj(), a[1] * a[1].conj()],
        ];
        self.expectation(&rho)
    }
}

pub fn mat2_identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat2_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn mat2_scale(a: &Mat2, s: Complex64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_conj(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[0][1].conj()],
        [a[1][0].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_trace(a: &Mat2) -> Complex64 {
    a[0][0] + a[1][1]
}

pub fn mat2_max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

/// SU(2) element exp(−iθ n̂·σ⃗/2) in the Bloch convention; it rotates Bloch
/// vectors by `angle` about `axis` (right-handed).
pub fn rotation_unitary(axis: &BlochVector, angle: f64) -> Result<Mat2> {
    check_unit(axis)?;
    let p = PauliTriple::bloch_convention();
    let mut gen = [[ZERO; 2]; 2];
    for (s, w) in p.components().into_iter().zip(axis.to_array()) {
        gen = mat2_add(&gen, &mat2_scale(s, Complex64::new(w, 0.0)));
    }
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(angle / 2.0).sin());
    Ok(mat2_add(
        &mat2_scale(&mat2_identity(), c),
        &mat2_scale(&gen, s),
    ))
}

/// Rotation matrix (as three rows) for `angle` about the unit `axis`.
pub fn rotation_matrix(axis: &BlochVector, angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let (x, y, z) = (axis.x, axis.y, axis.z);
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], v: &BlochVector) -> BlochVector {
    let a = v.to_array();
    let row = |i: usize| r[i][0] * a[0] + r[i][1] * a[1] + r[i][2] * a[2];
    BlochVector::new(row(0), row(1), row(2))
}

/// Applies a single-qubit operator to qubit `qubit` (0 = most significant).
pub fn apply_single_qubit(state: &StateVector, qubit: u32, u: &Mat2) -> Result<StateVector> {
    let n = state.num_qubits();
    if qubit >= n {
        return Err(Error::Domain(format!(
            "qubit {qubit} out of range for a {n}-qubit register"
        )));
    }
    let stride = 1usize << (n - 1 - qubit);
    let mut out = state.amps.clone();
    for base in 0..state.dim() {
        if base & stride != 0 {
            continue;
        }
        let a0 = state.amps[base];
        let a1 = state.amps[base | stride];
        out[base] = u[0][0] * a0 + u[0][1] * a1;
        out[base | stride] = u[1][0] * a0 + u[1][1] * a1;
    }
    Ok(StateVector { amps: out })
}

impl Mul<Complex64> for &StateVector {
    type Output = StateVector;
    fn mul(self, rhs: Complex64) -> StateVector {
        self.scale(rhs)
    }
}
