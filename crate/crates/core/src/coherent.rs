//! Coherent states `|α, β; ξ⟩` of the collective oscillators: simultaneous
//! eigenstates of `Â_ξ` and `B̂_ξ`.
//!
//! Three constructions are provided and checked against each other:
//! the double series over entangled number states (reference), the
//! collective displacements `D_A(α) D_B(β)` applied to the squeezed vacuum,
//! and local displacements `D_a(γ) ⊗ D_b(δ)` on the squeezed vacuum.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::ens::{check_xi, raise_collective, tmsv_in, UNITARITY_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::fock::{annihilation_single, Cutoffs, Mode, TwoModeOperator, TwoModeState};
use crate::linalg::{csr_from_triplets, csr_to_dense, expm_action, expm_anti_hermitian, max_abs, CompensatedSum};
use crate::DEFAULT_TRUNCATION_TOLERANCE;

/// Poisson tail dropped by the default series order; the eigenvalue residual
/// scales with its square root.
pub const SERIES_TAIL: f64 = 1e-24;
/// Default bound on `|α|` and `|β|`.
pub const DEFAULT_AMPLITUDE_CAP: f64 = 4.0;

/// Eigenvalues `α` of `Â_ξ` and `β` of `B̂_ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub alpha: C64,
    pub beta: C64,
    pub xi: f64,
}

impl CoherentLabel {
    pub fn new(alpha: C64, beta: C64, xi: f64) -> Result<Self> {
        Self::with_cap(alpha, beta, xi, DEFAULT_AMPLITUDE_CAP)
    }

    pub fn with_cap(alpha: C64, beta: C64, xi: f64, cap: f64) -> Result<Self> {
        check_xi(xi)?;
        for (name, z) in [("alpha", alpha), ("beta", beta)] {
            if !z.is_finite() || z.norm() > cap {
                return invalid(format!("|{name}| = {} exceeds amplitude cap {cap}", z.norm()));
            }
        }
        Ok(Self { alpha, beta, xi })
    }
}

/// Local amplitudes `((α + ξβ*)/√(1−ξ²), (β + ξα*)/√(1−ξ²))`.
pub fn local_displacement_decomposition(label: &CoherentLabel) -> (C64, C64) {
    let s = (1.0 - label.xi * label.xi).sqrt();
    let (a, b, x) = (label.alpha, label.beta, label.xi);
    ((a + b.conj() * x) / s, (b + a.conj() * x) / s)
}

/// Square cutoffs for `|α, β; ξ⟩`. Per mode: thermal mean `ξ²/(1−ξ²)` plus
/// `|local amplitude|²` plus 12 standard deviations and 10 levels, but at
/// least the squeezed-vacuum level where `ξ^{2D}` reaches 1e-30, shifted by
/// `|amp|² + 6|amp|`.
pub fn coherent_cutoffs(label: &CoherentLabel) -> Cutoffs {
    let x2 = label.xi * label.xi;
    let thermal = x2 / (1.0 - x2);
    let floor = (1e-30f64.ln() / (2.0 * label.xi.ln())).ceil().max(1.0);
    let (g, d) = local_displacement_decomposition(label);
    let size = |amp: C64| {
        let shift = amp.norm_sqr();
        let var = thermal * (thermal + 1.0) + shift * (2.0 * thermal + 1.0);
        let moments = thermal + shift + 12.0 * var.sqrt() + 10.0;
        moments.max(floor + shift + 6.0 * amp.norm()).ceil() as usize
    };
    let dim = size(g).max(size(d));
    Cutoffs { a: dim, b: dim }
}

fn check_cap(amplitude: C64) -> Result<()> {
    if !amplitude.is_finite() || amplitude.norm() > DEFAULT_AMPLITUDE_CAP {
        return invalid(format!("|amplitude| = {} exceeds cap {DEFAULT_AMPLITUDE_CAP}", amplitude.norm()));
    }
    Ok(())
}

fn checked_unitary(u: TwoModeOperator) -> Result<TwoModeOperator> {
    let dense = csr_to_dense(u.csr());
    let n = dense.nrows();
    let defect = max_abs(&(dense.adjoint() * &dense - DMatrix::<C64>::identity(n, n)));
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::Truncation { loss: defect, tolerance: UNITARITY_TOLERANCE });
    }
    Ok(u)
}

/// `D_{Â_ξ}(α) = exp(αÂ_ξ† − α*Â_ξ)` (or the `B̂_ξ` analogue), exponentiated
/// as a two-mode generator. The generator couples the whole window, so the
/// flattened dimension must fit the dense cap.
pub fn collective_displacement(which: Mode, amplitude: C64, xi: f64, cutoffs: Cutoffs) -> Result<TwoModeOperator> {
    check_cap(amplitude)?;
    let a = crate::ens::collective_annihilator(which, xi, cutoffs)?;
    let gen = &a.adjoint().scale(amplitude) - &a.scale(amplitude.conj());
    checked_unitary(TwoModeOperator::from_csr(cutoffs, expm_anti_hermitian(gen.csr())?))
}

/// Single-mode displacement `exp(γa† − γ*a)` on `cutoff` levels.
pub fn single_mode_displacement(amplitude: C64, cutoff: usize) -> Result<DMatrix<C64>> {
    let a = annihilation_single(cutoff)?;
    let mut t = Vec::new();
    for n in 1..cutoff {
        let s = a[(n - 1, n)];
        t.push((n, n - 1, amplitude * s));
        t.push((n - 1, n, -amplitude.conj() * s));
    }
    Ok(csr_to_dense(&expm_anti_hermitian(&csr_from_triplets(cutoff, cutoff, t))?))
}

fn checked_single_mode(u: DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = u.nrows();
    let gram = u.adjoint() * &u;
    let defect = max_abs(&(gram.view((0, 0), (n - 1, n - 1)) - DMatrix::<C64>::identity(n - 1, n - 1)));
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::Truncation { loss: defect, tolerance: UNITARITY_TOLERANCE });
    }
    Ok(u)
}

/// `(D_a(γ) ⊗ D_b(δ))|ψ⟩`, computed as `U_a C U_bᵀ` on the coefficient matrix.
pub fn apply_local_displacement(gamma: C64, delta: C64, state: &TwoModeState) -> Result<TwoModeState> {
    let c = state.cutoffs();
    let ua = checked_single_mode(single_mode_displacement(gamma, c.a)?)?;
    let ub = checked_single_mode(single_mode_displacement(delta, c.b)?)?;
    TwoModeState::from_coeffs(ua * state.coeffs() * ub.transpose(), state.truncation_tolerance())
}

/// Smallest `n` with Poisson tail `P(N > n) ≤ tail` for mean `|z|²`.
fn poisson_cut(z: C64, tail: f64) -> usize {
    let mean = z.norm_sqr();
    if mean == 0.0 {
        return 0;
    }
    let top = (mean + 20.0 * mean.sqrt() + 40.0).ceil() as usize;
    let pmf: Vec<f64> =
        (0..=top).map(|k| (-mean + k as f64 * mean.ln() - ln_factorial(k as u64)).exp()).collect();
    let mut acc = 0.0;
    for k in (0..=top).rev() {
        acc += pmf[k];
        if acc > tail {
            return k;
        }
    }
    0
}

/// Series order for [`coherent_state_series`]: both Poisson tails at most
/// `tail`.
pub fn default_series_order(label: &CoherentLabel, tail: f64) -> usize {
    poisson_cut(label.alpha, tail).max(poisson_cut(label.beta, tail))
}

/// `e^{−|α|²/2−|β|²/2} Σ_{n,m ≤ n_max} αⁿβᵐ/√(n!m!) |n, m; ξ⟩`, normalized.
///
/// The recorded truncation loss is the squared norm missing from the
/// unnormalized partial sum, covering both the series cut and the window.
pub fn coherent_state_series(label: &CoherentLabel, cutoffs: Cutoffs, n_max: usize) -> Result<TwoModeState> {
    coherent_state_series_with(label, cutoffs, n_max, DEFAULT_TRUNCATION_TOLERANCE)
}

pub fn coherent_state_series_with(
    label: &CoherentLabel,
    cutoffs: Cutoffs,
    n_max: usize,
    tolerance: f64,
) -> Result<TwoModeState> {
    let xi = label.xi;
    let weight = |z: C64, n: usize| -> C64 {
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        if z.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let log = n as f64 * z.norm().ln() - 0.5 * ln_factorial(n as u64);
        C64::from_polar(log.exp(), n as f64 * z.arg())
    };
    let prefactor = (-0.5 * (label.alpha.norm_sqr() + label.beta.norm_sqr())).exp();
    let seed = tmsv_in(xi, cutoffs, 1.0)?;
    let mut column = seed.coeffs().clone();
    let mut acc = DMatrix::<C64>::zeros(cutoffs.a, cutoffs.b);
    for m in 0..=n_max {
        if m > 0 {
            column = raise_collective(&column, Mode::B, xi).0 / C64::new((m as f64).sqrt(), 0.0);
        }
        let wm = weight(label.beta, m);
        if wm.norm() == 0.0 {
            continue;
        }
        let mut state = column.clone();
        for n in 0..=n_max {
            if n > 0 {
                state = raise_collective(&state, Mode::A, xi).0 / C64::new((n as f64).sqrt(), 0.0);
            }
            let wn = weight(label.alpha, n);
            if wn.norm() == 0.0 {
                break;
            }
            acc += &state * (wn * wm * prefactor);
        }
    }
    let inside: f64 = acc.iter().map(|z| z.norm_sqr()).collect::<CompensatedSum>().value();
    let loss = (1.0 - inside).abs();
    if loss > tolerance {
        return Err(Error::Truncation { loss, tolerance });
    }
    Ok(TwoModeState::from_coeffs(acc, tolerance)?.normalize()?.with_truncation_loss(loss))
}

/// `|α, β; ξ⟩` with [`coherent_cutoffs`] and the default series order.
pub fn coherent_state(label: &CoherentLabel) -> Result<TwoModeState> {
    let n_max = default_series_order(label, SERIES_TAIL);
    coherent_state_series(label, coherent_cutoffs(label), n_max)
}

/// `D_A(α) D_B(β) |0, 0; ξ⟩`, acting with the exponentials of the collective
/// generators on the state vector.
pub fn coherent_state_by_displacement(label: &CoherentLabel, cutoffs: Cutoffs) -> Result<TwoModeState> {
    let vac = tmsv_in(label.xi, cutoffs, DEFAULT_TRUNCATION_TOLERANCE)?;
    let mut v = vac.to_vector();
    for (which, amp) in [(Mode::B, label.beta), (Mode::A, label.alpha)] {
        check_cap(amp)?;
        let a = crate::ens::collective_annihilator(which, label.xi, cutoffs)?;
        let gen = &a.adjoint().scale(amp) - &a.scale(amp.conj());
        v = expm_action(gen.csr(), &v);
    }
    TwoModeState::from_vector(cutoffs, &v)?.normalize()
}

/// `D_a(γ) ⊗ D_b(δ) |0, 0; ξ⟩` with `(γ, δ)` from
/// [`local_displacement_decomposition`].
pub fn coherent_state_by_local_displacement(label: &CoherentLabel, cutoffs: Cutoffs) -> Result<TwoModeState> {
    let (g, d) = local_displacement_decomposition(label);
    let vac = tmsv_in(label.xi, cutoffs, DEFAULT_TRUNCATION_TOLERANCE)?;
    apply_local_displacement(g, d, &vac)?.normalize()
}

/// Product of ordinary coherent states `|α⟩_A |β⟩_B`.
pub fn bare_coherent_product(alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<TwoModeState> {
    let amps = |z: C64, d: usize| -> Vec<C64> {
        let mut v = Vec::with_capacity(d);
        let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
        for n in 0..d {
            v.push(c);
            c *= z / ((n + 1) as f64).sqrt();
        }
        v
    };
    TwoModeState::product(&amps(alpha, cutoffs.a), &amps(beta, cutoffs.b))
}
