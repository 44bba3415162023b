//! Seeded random states for property sweeps.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ens::{ens_state_in, EnsLabel};
use crate::error::Result;
use crate::fock::{Cutoffs, TwoModeState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-like random pure state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_state<R: Rng + ?Sized>(cutoffs: Cutoffs, rng: &mut R) -> Result<TwoModeState> {
    let coeffs = DMatrix::from_fn(cutoffs.a, cutoffs.b, |_, _| gaussian(rng));
    TwoModeState::from_coeffs(coeffs, crate::DEFAULT_TRUNCATION_TOLERANCE)?.normalize()
}

/// Random local pure state on each mode, tensored.
pub fn random_product_state<R: Rng + ?Sized>(cutoffs: Cutoffs, rng: &mut R) -> Result<TwoModeState> {
    let a: Vec<C64> = (0..cutoffs.a).map(|_| gaussian(rng)).collect();
    let b: Vec<C64> = (0..cutoffs.b).map(|_| gaussian(rng)).collect();
    TwoModeState::product(&a, &b)
}

/// Random superposition of `|n_a, N_B; ξ⟩` over `N_B ≤ max_nb`, all built in
/// `cutoffs`.
pub fn random_fixed_na_superposition<R: Rng + ?Sized>(
    n_a: usize,
    max_nb: usize,
    xi: f64,
    cutoffs: Cutoffs,
    rng: &mut R,
) -> Result<TwoModeState> {
    let mut acc = DMatrix::<C64>::zeros(cutoffs.a, cutoffs.b);
    for nb in 0..=max_nb {
        let s = ens_state_in(&EnsLabel::new(n_a, nb, xi)?, cutoffs, crate::DEFAULT_TRUNCATION_TOLERANCE)?;
        acc += s.coeffs() * gaussian(rng);
    }
    TwoModeState::from_coeffs(acc, crate::DEFAULT_TRUNCATION_TOLERANCE)?.normalize()
}
