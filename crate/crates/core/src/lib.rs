//! Entangled number states of two bosonic modes.
//!
//! The crate builds the joint eigenstates `|N_A, N_B; ξ⟩` of the collective
//! number operators `Â_ξ†Â_ξ` and `B̂_ξ†B̂_ξ`, where
//! `Â_ξ = (a − ξb†)/√(1−ξ²)` and `B̂_ξ = (b − ξa†)/√(1−ξ²)`, inside a
//! truncated two-mode Fock space. Every closed-form property of these states
//! (Schmidt coefficients, photon-number moments, entropy) is paired with a
//! brute-force numerical route so the two can be checked against each other.
//!
//! Modules:
//!
//! - [`fock`]: truncated two-mode states and operators, ladder algebra.
//! - [`ens`]: two-mode squeezed vacuum, entangled number states and their
//!   closed-form Schmidt coefficients.
//! - [`entanglement`]: reduced states, SVD Schmidt spectra, entropy.
//! - [`criteria`]: total-noise (Duan) bound, the variance bound on the
//!   total-noise operator, and explicit partial transposition.
//! - [`coherent`]: displaced states of the collective oscillators.
//! - [`reports`] and [`verify`]: the data behind the command-line tool.
//!
//! Basis states `|n_A⟩|n_B⟩` are flattened as `n_A·D_B + n_B` everywhere.

pub mod coherent;
pub mod criteria;
pub mod ens;
pub mod entanglement;
mod error;
pub mod fock;
pub mod linalg;
pub mod reports;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Default declared tail mass for truncated states.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-12;
/// Largest flattened dimension handled with dense eigen-decompositions.
pub const DENSE_DIM_LIMIT: usize = 4096;
