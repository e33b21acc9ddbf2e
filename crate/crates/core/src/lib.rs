//! Quantum correlations of the elegant joint measurement (EJM) on singlet
//! networks, together with the classical N-local machinery used to probe them.
//!
//! Module map:
//!
//! - [`linalg`]: complex amplitudes, kets, Bloch vectors and the Pauli triple.
//! - [`measurements`]: two-qubit joint-measurement bases (EJM, Massar–Popescu, BSM).
//! - [`network`]: outcome distributions on open lines and polygons of singlets,
//!   closed forms for the all-equal events, and dyadic reconstruction.
//! - [`local`]: hidden-variable models, model search, and the Bell-scenario
//!   linear-programming membership test.

pub mod error;
pub mod linalg;
pub mod local;
pub mod measurements;
pub mod network;

pub use error::{Error, Result};
