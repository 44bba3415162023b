//! Reduced states, Schmidt spectra and entanglement entropy of pure states.
//!
//! [`schmidt_spectrum_svd`] is the brute-force route: singular values of the
//! amplitude matrix, independent of the closed-form coefficients in
//! [`crate::ens`].

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::ens::{check_xi, closed_form_schmidt, cutoff_policy, default_m_max, ens_state, EnsLabel};
use crate::error::{invalid, Error, Result};
use crate::fock::{Cutoffs, Mode, TwoModeState};
use crate::linalg::{hermitian_eigenvalues, max_abs, CompensatedSum};
use crate::DENSE_DIM_LIMIT;

/// Schmidt values below this are dropped before taking logarithms.
pub const SCHMIDT_FLOOR: f64 = 1e-14;

/// Hermitian matrix on a single-mode or flattened two-mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    /// `Some` for two-mode matrices in the `n_A·D_B + n_B` layout.
    cutoffs: Option<Cutoffs>,
}

impl DensityMatrix {
    pub fn single_mode(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("density matrix must be square");
        }
        Ok(Self { matrix, cutoffs: None })
    }

    pub fn two_mode(matrix: DMatrix<C64>, cutoffs: Cutoffs) -> Result<Self> {
        if matrix.nrows() != cutoffs.dim() || matrix.ncols() != cutoffs.dim() {
            return invalid(format!("density matrix is {}x{}, cutoffs {cutoffs}", matrix.nrows(), matrix.ncols()));
        }
        Ok(Self { matrix, cutoffs: Some(cutoffs) })
    }

    /// `|ψ⟩⟨ψ|` on the flattened basis.
    pub fn pure(state: &TwoModeState) -> Result<Self> {
        let c = state.cutoffs();
        if c.dim() > DENSE_DIM_LIMIT {
            return Err(Error::Resource(format!(
                "dense density matrix of dimension {} exceeds limit {DENSE_DIM_LIMIT}",
                c.dim()
            )));
        }
        let v = state.to_vector();
        Ok(Self { matrix: &v * v.adjoint(), cutoffs: Some(c) })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn cutoffs(&self) -> Option<Cutoffs> {
        self.cutoffs
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `Tr(ρ X)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<C64> {
        if op.shape() != self.matrix.shape() {
            return invalid("operator and density matrix dimensions differ");
        }
        Ok((&self.matrix * op).trace())
    }
}

/// Partial trace of `|ψ⟩⟨ψ|` keeping `keep`.
pub fn reduced_density(state: &TwoModeState, keep: Mode) -> DensityMatrix {
    let c = state.coeffs();
    let matrix = match keep {
        Mode::A => c * c.adjoint(),
        Mode::B => c.transpose() * c.map(|z| z.conj()),
    };
    DensityMatrix { matrix, cutoffs: None }
}

/// Singular values of the amplitude matrix, descending.
pub fn schmidt_spectrum_svd(state: &TwoModeState) -> Vec<f64> {
    let mut sv: Vec<f64> = state.coeffs().clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `−Σ p log₂ p` with `0·log 0 = 0`.
pub fn shannon_bits(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    probabilities
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .collect::<CompensatedSum>()
        .value()
}

fn entropy_of_schmidt_values(values: impl IntoIterator<Item = f64>) -> f64 {
    shannon_bits(values.into_iter().map(f64::abs).filter(|&v| v >= SCHMIDT_FLOOR).map(|v| v * v))
}

/// Entanglement entropy in bits from the SVD spectrum.
pub fn entanglement_entropy(state: &TwoModeState) -> f64 {
    entropy_of_schmidt_values(schmidt_spectrum_svd(state)).max(0.0)
}

/// Entanglement entropy of `|N_A, N_B; ξ⟩` from the closed-form coefficients.
pub fn entropy_from_closed_form(label: &EnsLabel) -> Result<f64> {
    let spec = closed_form_schmidt(label, default_m_max(label))?;
    Ok(entropy_of_schmidt_values(spec.coeffs).max(0.0))
}

/// Bare Fock states `|n_A, n_B⟩` with `n_A + n_B ≤ bound`.
pub fn witness_states(bound: usize) -> Vec<(usize, usize)> {
    (0..=bound).flat_map(|na| (0..=bound - na).map(move |nb| (na, nb))).collect()
}

/// Compression `W_ij = Σ_L ⟨w_i|L⟩⟨L|w_j⟩` of the partial ENS resolution of
/// identity (labels `N_A, N_B ≤ n_max`) onto the witness states.
pub fn completeness_compression(xi: f64, n_max: usize, witness_bound: usize) -> Result<DMatrix<C64>> {
    check_xi(xi)?;
    let witnesses = witness_states(witness_bound);
    let k = witnesses.len();
    let mut w = DMatrix::<C64>::zeros(k, k);
    for na in 0..=n_max {
        for nb in 0..=n_max {
            let label = EnsLabel::new(na, nb, xi)?;
            let s = ens_state(&label)?;
            let proj: Vec<C64> = witnesses.iter().map(|&(i, j)| s.amplitude(i, j)).collect();
            for r in 0..k {
                for c in 0..k {
                    w[(r, c)] += proj[r] * proj[c].conj();
                }
            }
        }
    }
    Ok(w)
}

/// `max |W − 1|` for [`completeness_compression`]; tends to zero as `n_max`
/// grows.
pub fn completeness_defect(xi: f64, n_max: usize, witness_bound: usize) -> Result<f64> {
    let w = completeness_compression(xi, n_max, witness_bound)?;
    let k = w.nrows();
    Ok(max_abs(&(w - DMatrix::<C64>::identity(k, k))))
}

/// Cutoffs large enough for every label with `N_A, N_B ≤ n_max`.
pub fn common_cutoffs(xi: f64, n_max: usize) -> Result<Cutoffs> {
    let mut c = Cutoffs::new(1, 1)?;
    for na in 0..=n_max {
        for nb in 0..=n_max {
            c = c.max(&cutoff_policy(&EnsLabel::new(na, nb, xi)?));
        }
    }
    Ok(c)
}

/// One of the three monotonicity properties of ENS entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Conjecture {
    /// Entropy grows with `N_B` at fixed `N_A`.
    IncreasingInNb,
    /// Entropy grows with `N_A` at fixed `N_B`.
    IncreasingInNa,
    /// Entropy grows with `ξ` at fixed label.
    IncreasingInXi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureFinding {
    pub conjecture: Conjecture,
    pub comparisons: usize,
    pub holds: usize,
    /// `(N_A, N_B, ξ)` of the smaller element of each failing pair.
    pub violations: Vec<(usize, usize, f64)>,
}

impl ConjectureFinding {
    pub fn fraction(&self) -> f64 {
        if self.comparisons == 0 {
            1.0
        } else {
            self.holds as f64 / self.comparisons as f64
        }
    }
}

/// Evaluates the monotonicity conjectures on `N_A, N_B ≤ n_max` for each
/// `ξ` in `xis` (ascending). Findings are data, not failures.
pub fn monotonicity_findings(xis: &[f64], n_max: usize) -> Result<Vec<ConjectureFinding>> {
    let mut grids = Vec::with_capacity(xis.len());
    for &xi in xis {
        let mut g = vec![vec![0.0; n_max + 1]; n_max + 1];
        for (na, row) in g.iter_mut().enumerate() {
            for (nb, e) in row.iter_mut().enumerate() {
                *e = entropy_from_closed_form(&EnsLabel::new(na, nb, xi)?)?;
            }
        }
        grids.push(g);
    }
    let mut nb_f = ConjectureFinding { conjecture: Conjecture::IncreasingInNb, comparisons: 0, holds: 0, violations: vec![] };
    let mut na_f = ConjectureFinding { conjecture: Conjecture::IncreasingInNa, comparisons: 0, holds: 0, violations: vec![] };
    let mut xi_f = ConjectureFinding { conjecture: Conjecture::IncreasingInXi, comparisons: 0, holds: 0, violations: vec![] };
    let tally = |f: &mut ConjectureFinding, ok: bool, at: (usize, usize, f64)| {
        f.comparisons += 1;
        if ok {
            f.holds += 1;
        } else {
            f.violations.push(at);
        }
    };
    for (g, &xi) in grids.iter().zip(xis) {
        for na in 0..=n_max {
            for nb in 0..=n_max {
                if nb < n_max {
                    tally(&mut nb_f, g[na][nb + 1] > g[na][nb], (na, nb, xi));
                }
                if na < n_max {
                    tally(&mut na_f, g[na + 1][nb] > g[na][nb], (na, nb, xi));
                }
            }
        }
    }
    for (w, pair) in grids.windows(2).zip(xis.windows(2)) {
        for na in 0..=n_max {
            for nb in 0..=n_max {
                tally(&mut xi_f, w[1][na][nb] > w[0][na][nb], (na, nb, pair[0]));
            }
        }
    }
    Ok(vec![nb_f, na_f, xi_f])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ens::tmsv;
    use approx::assert_abs_diff_eq;

    /// Entropy of the geometric law `(1−p)pᵐ`, summed directly.
    fn geometric_entropy_oracle(p: f64) -> f64 {
        (0..4000)
            .map(|m| (1.0 - p) * p.powi(m))
            .filter(|&q| q > 0.0)
            .map(|q| -q * q.log2())
            .sum()
    }

    #[test]
    fn geometric_oracle_value() {
        let closed = -(0.51f64).log2() - (0.49 / 0.51) * 0.49f64.log2();
        assert_abs_diff_eq!(geometric_entropy_oracle(0.49), closed, epsilon = 1e-12);
        assert_abs_diff_eq!(closed, 1.96022, epsilon = 1e-5);
    }

    #[test]
    fn product_state_is_unentangled() {
        let s = TwoModeState::fock(Cutoffs::new(4, 5).unwrap(), 2, 3).unwrap();
        let rho = reduced_density(&s, Mode::A);
        assert_abs_diff_eq!(rho.matrix()[(2, 2)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-15);
        let sv = schmidt_spectrum_svd(&s);
        assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-14);
        assert!(sv[1..].iter().all(|v| v.abs() < 1e-14));
        assert_abs_diff_eq!(entanglement_entropy(&s), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_like_state_has_one_bit() {
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 0)] = C64::new(1.0, 0.0);
        c[(1, 1)] = C64::new(1.0, 0.0);
        let s = TwoModeState::from_coeffs(c, 1e-12).unwrap().normalize().unwrap();
        assert_abs_diff_eq!(entanglement_entropy(&s), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tmsv_reduced_state_and_spectrum() {
        let xi: f64 = 0.7;
        let s = tmsv(xi, 100).unwrap();
        let rho = reduced_density(&s, Mode::B);
        for m in 0..20 {
            assert_abs_diff_eq!(rho.matrix()[(m, m)].re, 0.51 * xi.powi(2 * m as i32), epsilon = 1e-14);
        }
        let sv = schmidt_spectrum_svd(&s);
        for k in 0..20 {
            assert_abs_diff_eq!(sv[k], 0.51f64.sqrt() * xi.powi(k as i32), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(entanglement_entropy(&s), geometric_entropy_oracle(0.49), epsilon = 1e-9);
    }

    #[test]
    fn one_excitation_reduced_state_is_negative_binomial() {
        let l = EnsLabel::new(1, 0, 0.7).unwrap();
        let s = ens_state(&l).unwrap();
        let rho = reduced_density(&s, Mode::B);
        assert!(max_abs(&(rho.matrix() - DMatrix::from_diagonal(&rho.matrix().diagonal()))) < 1e-15);
        for m in 0..30 {
            let nb = crate::ens::negative_binomial_pmf(1, 0.49, m).unwrap();
            assert_abs_diff_eq!(rho.matrix()[(m, m)].re, nb, epsilon = 1e-12);
        }
    }

    #[test]
    fn svd_and_reduced_eigenvalues_agree() {
        let l = EnsLabel::new(2, 1, 0.5).unwrap();
        let s = ens_state(&l).unwrap();
        let sv = schmidt_spectrum_svd(&s);
        let mut ev = reduced_density(&s, Mode::A).eigenvalues().unwrap();
        ev.reverse();
        for (v, e) in sv.iter().zip(&ev) {
            assert_abs_diff_eq!(v * v, *e, epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_form_entropy_values() {
        let e = entropy_from_closed_form(&EnsLabel::new(0, 0, 0.7).unwrap()).unwrap();
        assert_abs_diff_eq!(e, geometric_entropy_oracle(0.49), epsilon = 1e-10);
        let a = entropy_from_closed_form(&EnsLabel::new(4, 1, 0.6).unwrap()).unwrap();
        let b = entropy_from_closed_form(&EnsLabel::new(1, 4, 0.6).unwrap()).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        let tiny = entropy_from_closed_form(&EnsLabel::new(0, 0, 1e-8).unwrap()).unwrap();
        assert!(tiny <= 1e-6);
    }

    #[test]
    fn closed_form_entropy_matches_svd() {
        let l = EnsLabel::new(2, 2, 0.6).unwrap();
        let a = entropy_from_closed_form(&l).unwrap();
        let b = entanglement_entropy(&ens_state(&l).unwrap());
        assert_abs_diff_eq!(a, b, epsilon = 1e-7);
    }

    #[test]
    fn completeness_single_witness() {
        let d = completeness_defect(0.5, 0, 0).unwrap();
        assert_abs_diff_eq!(d, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn completeness_improves_with_more_labels() {
        let d4 = completeness_defect(0.5, 4, 6).unwrap();
        let d12 = completeness_defect(0.5, 12, 6).unwrap();
        assert!(d12 < d4, "{d12} !< {d4}");
        let w = completeness_compression(0.5, 4, 6).unwrap();
        let ev = hermitian_eigenvalues(&w).unwrap();
        assert!(ev.iter().all(|&e| e >= -1e-8 && e <= 1.0 + 1e-8));
    }
}
