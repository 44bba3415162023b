//! Separability tests built on the total-noise operator
//! `Ω(ξ) = ω₊² + ω₋²`, with `ω₊ = x_A/√ξ − √ξ x_B` and `ω₋ = p_A/√ξ + √ξ p_B`.
//!
//! Separable states satisfy `⟨Ω⟩ ≥ ξ⁻¹ + ξ` (Duan) and `⟨Δ²Ω⟩ ≥ 4`
//! (variance criterion). Partial transposition is available both as a dense
//! matrix map and as a sparse minimum-eigenvalue routine for pure states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::entanglement::{schmidt_spectrum_svd, DensityMatrix};
use crate::ens::check_xi;
use crate::error::{invalid, Error, Result};
use crate::fock::{expectation_real, variance, Cutoffs, Mode, Quadrature, TwoModeOperator, TwoModeState};
use crate::linalg::{hermitian_eigenvalues, hermitian_eigenvalues_sparse};
use crate::DENSE_DIM_LIMIT;

/// Values closer than this to a bound count as satisfied (boundary).
pub const VERDICT_TOLERANCE: f64 = 1e-9;
/// Separable lower bound on `⟨Δ²Ω⟩`.
pub const VARIANCE_BOUND: f64 = 4.0;
/// Extra Fock levels added before forming products for the moment identity.
const MOMENT_PADDING: usize = 4;
/// Largest number of nonzero amplitudes accepted by [`pt_min_eigenvalue_explicit`].
const PT_SUPPORT_LIMIT: usize = DENSE_DIM_LIMIT;

fn check_test_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi.is_finite()) {
        return invalid(format!("criterion parameter must be positive and finite, got {xi}"));
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(ω₊, ω₋)` for any `ξ > 0`; `ξ > 1` gives the partner oscillator's
/// operators.
pub fn epr_operators(xi: f64, cutoffs: Cutoffs) -> Result<(TwoModeOperator, TwoModeOperator)> {
    check_test_xi(xi)?;
    let (s, inv) = (xi.sqrt(), 1.0 / xi.sqrt());
    let q = |m, w| TwoModeOperator::quadrature(m, w, cutoffs);
    let plus = &q(Mode::A, Quadrature::X).scale(real(inv)) - &q(Mode::B, Quadrature::X).scale(real(s));
    let minus = &q(Mode::A, Quadrature::P).scale(real(inv)) + &q(Mode::B, Quadrature::P).scale(real(s));
    Ok((plus.hermitian_part(), minus.hermitian_part()))
}

/// `Ω(ξ) = ω₊² + ω₋²`, the zero-mean total noise.
pub fn omega_operator(xi: f64, cutoffs: Cutoffs) -> Result<TwoModeOperator> {
    let (p, m) = epr_operators(xi, cutoffs)?;
    Ok((&(&p * &p) + &(&m * &m)).hermitian_part())
}

/// `(ω₊ − ⟨ω₊⟩)² + (ω₋ − ⟨ω₋⟩)²` for the given state.
pub fn omega_mean_subtracted(state: &TwoModeState, xi: f64) -> Result<TwoModeOperator> {
    let c = state.cutoffs();
    let (p, m) = epr_operators(xi, c)?;
    let id = TwoModeOperator::identity(c);
    let centred = |op: &TwoModeOperator| -> Result<TwoModeOperator> {
        let mean = expectation_real(op, state)? / state.norm_sqr();
        Ok(op - &id.scale(real(mean)))
    };
    let (dp, dm) = (centred(&p)?, centred(&m)?);
    Ok((&(&dp * &dp) + &(&dm * &dm)).hermitian_part())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Violated,
    Satisfied,
    Inconclusive,
}

/// A criterion value against its separable bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub value: f64,
    pub bound: f64,
    pub verdict: Verdict,
    /// `value − bound`; negative means the bound is broken.
    pub margin: f64,
    /// Satisfied only because the value sits within tolerance of the bound.
    pub boundary: bool,
}

impl CriterionOutcome {
    pub fn judge(value: f64, bound: f64) -> Self {
        let margin = value - bound;
        let verdict = if margin < -VERDICT_TOLERANCE { Verdict::Violated } else { Verdict::Satisfied };
        Self { value, bound, verdict, margin, boundary: margin.abs() <= VERDICT_TOLERANCE }
    }
}

/// Duan test: `Δ²ω₊ + Δ²ω₋` against `ξ⁻¹ + ξ`, with means subtracted.
pub fn duan_test(state: &TwoModeState, xi: f64) -> Result<CriterionOutcome> {
    let (p, m) = epr_operators(xi, state.cutoffs())?;
    let value = variance(&p, state)? + variance(&m, state)?;
    Ok(CriterionOutcome::judge(value, 1.0 / xi + xi))
}

/// ENS with `N_A` below `ξ²/(1−ξ²)` break the Duan bound.
pub fn duan_violation_threshold(xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(xi * xi / (1.0 - xi * xi))
}

/// `⟨Ω²⟩ − ⟨Ω⟩²` of the zero-mean `Ω(ξ)` against 4.
pub fn variance_criterion(state: &TwoModeState, xi: f64) -> Result<CriterionOutcome> {
    let omega = omega_operator(xi, state.cutoffs())?;
    Ok(CriterionOutcome::judge(variance(&omega, state)?, VARIANCE_BOUND))
}

/// As [`variance_criterion`], with the EPR operators centred on the state's
/// own means first.
pub fn variance_criterion_mean_subtracted(state: &TwoModeState, xi: f64) -> Result<CriterionOutcome> {
    let omega = omega_mean_subtracted(state, xi)?;
    Ok(CriterionOutcome::judge(variance(&omega, state)?, VARIANCE_BOUND))
}

/// Dense partial transpose on `mode`:
/// `ρ(n,m; n′,m′) → ρ(n,m′; n′,m)` for mode B.
pub fn partial_transpose(rho: &DensityMatrix, mode: Mode) -> Result<DensityMatrix> {
    let Some(c) = rho.cutoffs() else {
        return invalid("partial transpose needs a two-mode density matrix");
    };
    if c.dim() > DENSE_DIM_LIMIT {
        return Err(Error::Resource(format!("partial transpose of dimension {} exceeds {DENSE_DIM_LIMIT}", c.dim())));
    }
    let m = rho.matrix();
    let out = DMatrix::from_fn(c.dim(), c.dim(), |r, s| {
        let (n, k) = c.levels(r);
        let (n2, k2) = c.levels(s);
        match mode {
            Mode::B => m[(c.index(n, k2), c.index(n2, k))],
            Mode::A => m[(c.index(n2, k), c.index(n, k2))],
        }
    });
    DensityMatrix::two_mode(out, c)
}

/// Smallest eigenvalue of a dense partially transposed matrix.
pub fn min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(rho.matrix())?.first().copied().unwrap_or(0.0))
}

/// Smallest eigenvalue of `(|ψ⟩⟨ψ|)^{T_B}` / `‖ψ‖²` from the Schmidt
/// coefficients: the transposed projector has spectrum `λ_k²` and `±λ_jλ_k`
/// (`j < k`), so the minimum is `−λ₁λ₂`, or zero for a product state.
///
/// The SVD runs on the `D_A × D_B` amplitude matrix; windows whose smaller
/// side exceeds the dense cap are refused.
pub fn pt_min_eigenvalue(state: &TwoModeState) -> Result<f64> {
    let c = state.cutoffs();
    if c.a.min(c.b) > DENSE_DIM_LIMIT {
        return Err(Error::Resource(format!("Schmidt decomposition of a {c} window exceeds {DENSE_DIM_LIMIT}")));
    }
    let norm = state.norm_sqr();
    let sv = schmidt_spectrum_svd(state);
    Ok(match sv.as_slice() {
        [l1, l2, ..] if *l2 > 0.0 => -l1 * l2 / norm,
        [l1] => l1 * l1 / norm,
        _ => 0.0,
    })
}

/// [`pt_min_eigenvalue`] by explicit partial transposition: the matrix is
/// assembled from pairs of nonzero amplitudes and diagonalized block by
/// block; only blocks above the dense cap are refused.
pub fn pt_min_eigenvalue_explicit(state: &TwoModeState) -> Result<f64> {
    let c = state.cutoffs();
    let coeffs = state.coeffs();
    let support: Vec<(usize, usize, C64)> = (0..c.a)
        .flat_map(|n| (0..c.b).map(move |m| (n, m)))
        .map(|(n, m)| (n, m, coeffs[(n, m)]))
        .filter(|t| t.2 != C64::new(0.0, 0.0))
        .collect();
    if support.len() > PT_SUPPORT_LIMIT {
        return Err(Error::Resource(format!(
            "state has {} nonzero amplitudes; partial transpose limited to {PT_SUPPORT_LIMIT}",
            support.len()
        )));
    }
    let norm = state.norm_sqr();
    // ρ^{T_B}(n,m; n′,m′) = ψ(n,m′) ψ*(n′,m)
    let mut triplets = Vec::with_capacity(support.len() * support.len());
    for &(n, m2, p) in &support {
        for &(n2, m, q) in &support {
            triplets.push((c.index(n, m), c.index(n2, m2), p * q.conj() / norm));
        }
    }
    let eig = hermitian_eigenvalues_sparse(c.dim(), &triplets)?;
    Ok(eig.first().copied().unwrap_or(0.0))
}

/// The two routes to the partial-transpose variance of `(1−ξ²)Â_ξ†Â_ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtMomentCheck {
    /// `(1−ξ²)²(⟨N²⟩_PT − ⟨N⟩²_PT)`, `N = Â_ξ†Â_ξ`, on the transposed matrix.
    pub lhs: f64,
    /// `Δ²[(a†−ξb†)(a−ξb)] + ξ²` on the state itself.
    pub rhs: f64,
    pub defect: f64,
}

fn pt_trace(pt: &DMatrix<C64>, op: &TwoModeOperator) -> C64 {
    op.triplets().into_iter().map(|(r, c, x)| pt[(c, r)] * x).sum()
}

/// Evaluates both sides of the partial-transpose moment identity in a window
/// padded so that every operator product is exact on the state's support.
pub fn pt_moment_identity_check(state: &TwoModeState, xi: f64) -> Result<PtMomentCheck> {
    check_xi(xi)?;
    let c = state.cutoffs().grown(MOMENT_PADDING, MOMENT_PADDING);
    let (padded, _) = state.resized(c);
    let padded = padded.normalize()?;

    let rho = DensityMatrix::pure(&padded)?;
    let pt = partial_transpose(&rho, Mode::B)?;
    let n = crate::ens::collective_number(Mode::A, xi, c)?;
    let n2 = &n * &n;
    let first = pt_trace(pt.matrix(), &n).re;
    let second = pt_trace(pt.matrix(), &n2).re;
    let s = 1.0 - xi * xi;
    let lhs = s * s * (second - first * first);

    let a = TwoModeOperator::annihilation(Mode::A, c);
    let b = TwoModeOperator::annihilation(Mode::B, c);
    let lowered = &a - &b.scale(real(xi));
    let m = (&lowered.adjoint() * &lowered).hermitian_part();
    let rhs = variance(&m, &padded)? + xi * xi;

    Ok(PtMomentCheck { lhs, rhs, defect: (lhs - rhs).abs() })
}

/// Where the numbers in a [`CriteriaReport`] came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub truncation_tolerance: f64,
    pub truncation_loss: f64,
    pub verdict_tolerance: f64,
    pub dense_dim_limit: usize,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub xi: f64,
    pub duan_value: f64,
    pub duan_bound: f64,
    pub variance_value: f64,
    pub variance_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pt_min_eigenvalue: Option<f64>,
    pub duan: CriterionOutcome,
    pub variance: CriterionOutcome,
    pub partial_transpose: PtVerdict,
    pub provenance: Provenance,
}

/// Partial-transpose outcome; `min_eigenvalue` is absent when the spectrum
/// was too large to compute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtVerdict {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriteriaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs both criteria and the partial-transpose test on one state, after
/// zero-padding it so the quartic moments of `Ω` see no cutoff edge.
pub fn criteria_report(state: &TwoModeState, xi: f64) -> Result<CriteriaReport> {
    let (padded, _) = state.resized(state.cutoffs().grown(MOMENT_PADDING, MOMENT_PADDING));
    let state = &padded;
    let duan = duan_test(state, xi)?;
    let var = variance_criterion(state, xi)?;
    let partial_transpose = match pt_min_eigenvalue(state) {
        Ok(e) => PtVerdict {
            verdict: CriterionOutcome::judge(e, 0.0).verdict,
            min_eigenvalue: Some(e),
            note: None,
        },
        Err(Error::Resource(msg)) => PtVerdict { verdict: Verdict::Inconclusive, min_eigenvalue: None, note: Some(msg) },
        Err(e) => return Err(e),
    };
    let c = state.cutoffs();
    Ok(CriteriaReport {
        xi,
        duan_value: duan.value,
        duan_bound: duan.bound,
        variance_value: var.value,
        variance_bound: VARIANCE_BOUND,
        pt_min_eigenvalue: partial_transpose.min_eigenvalue,
        duan,
        variance: var,
        partial_transpose,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION"),
            cutoff_a: c.a,
            cutoff_b: c.b,
            truncation_tolerance: state.truncation_tolerance(),
            truncation_loss: state.truncation_loss(),
            verdict_tolerance: VERDICT_TOLERANCE,
            dense_dim_limit: DENSE_DIM_LIMIT,
            xi,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ens::{collective_number, ens_state, tmsv, EnsLabel};
    use crate::fock::eigen_residual;
    use crate::linalg::max_abs;
    use crate::sampling::{random_product_state, random_state};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vacuum(d: usize) -> TwoModeState {
        TwoModeState::fock(Cutoffs::square(d).unwrap(), 0, 0).unwrap()
    }

    #[test]
    fn omega_expectations() {
        let s = tmsv(0.5, 40).unwrap();
        let om = omega_operator(0.5, s.cutoffs()).unwrap();
        assert!(om.hermiticity_defect() <= 1e-12);
        assert_abs_diff_eq!(expectation_real(&om, &s).unwrap(), 1.5, epsilon = 1e-10);

        let v = vacuum(6);
        let om = omega_operator(0.5, v.cutoffs()).unwrap();
        assert_abs_diff_eq!(expectation_real(&om, &v).unwrap(), 2.5, epsilon = 1e-12);

        let e = ens_state(&EnsLabel::new(2, 1, 0.5).unwrap()).unwrap();
        let om = omega_operator(0.5, e.cutoffs()).unwrap();
        assert_abs_diff_eq!(expectation_real(&om, &e).unwrap(), 7.5, epsilon = 1e-9);
    }

    #[test]
    fn omega_matches_collective_oscillator_in_interior() {
        let xi = 0.6;
        let c = Cutoffs::square(12).unwrap();
        let om = omega_operator(xi, c).unwrap();
        let n = collective_number(Mode::A, xi, c).unwrap();
        let id = TwoModeOperator::identity(c);
        let k = (1.0 / xi - xi) * 2.0;
        let rhs = &n.scale(real(k)) + &id.scale(real(1.0 / xi - xi));
        let diff = om.interior_block(2) - rhs.interior_block(2);
        assert!(max_abs(&diff) <= 1e-10);
    }

    #[test]
    fn omega_interior_spectrum_is_evenly_spaced() {
        let xi = 0.5;
        let om = omega_operator(xi, Cutoffs::square(40).unwrap()).unwrap();
        let eig = hermitian_eigenvalues(&om.interior_block(2)).unwrap();
        let step = 1.0 / xi - xi;
        assert!(eig[0] >= step - 1e-6);
        for k in 0..10 {
            let target = step * (2 * k + 1) as f64;
            assert!(eig.iter().any(|e| (e - target).abs() <= 1e-6), "level {k} missing");
        }
    }

    #[test]
    fn partner_oscillator_sum() {
        let xi = 0.5;
        let label = EnsLabel::new(2, 1, xi).unwrap();
        let s = ens_state(&label).unwrap();
        let c = s.cutoffs();
        let sum = &omega_operator(xi, c).unwrap() + &omega_operator(1.0 / xi, c).unwrap();
        let lambda = 2.0 * (1.0 / xi - xi) * 4.0;
        assert!(eigen_residual(&sum, &s, real(lambda)).unwrap() <= 1e-7);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = Cutoffs::square(3).unwrap();
        assert!(omega_operator(0.0, c).is_err());
        assert!(omega_operator(f64::NAN, c).is_err());
        assert!(duan_violation_threshold(1.0).is_err());
    }

    #[test]
    fn duan_examples() {
        let v = vacuum(6);
        for xi in [0.3, 0.5, 0.8] {
            let o = duan_test(&v, xi).unwrap();
            assert_abs_diff_eq!(o.value, 1.0 / xi + xi, epsilon = 1e-12);
            assert_eq!(o.verdict, Verdict::Satisfied);
            assert!(o.boundary);
        }
        let t = duan_test(&tmsv(0.7, 80).unwrap(), 0.7).unwrap();
        assert_abs_diff_eq!(t.value, 1.0 / 0.7 - 0.7, epsilon = 1e-9);
        assert_eq!(t.verdict, Verdict::Violated);

        let e = ens_state(&EnsLabel::new(0, 5, 0.7).unwrap()).unwrap();
        let o = duan_test(&e, 0.7).unwrap();
        assert_abs_diff_eq!(o.value, 1.0 / 0.7 - 0.7, epsilon = 1e-8);
        assert_eq!(o.verdict, Verdict::Violated);
    }

    #[test]
    fn threshold_separates_detected_labels() {
        assert_abs_diff_eq!(duan_violation_threshold(0.7).unwrap(), 0.49 / 0.51, epsilon = 1e-15);
        assert_abs_diff_eq!(duan_violation_threshold(0.9).unwrap(), 0.81 / 0.19, epsilon = 1e-14);
        assert!(duan_violation_threshold(1e-6).unwrap() < 1e-11);
        for xi in [0.3, 0.7, 0.9] {
            let t = duan_violation_threshold(xi).unwrap();
            for na in 0..8 {
                let value = (1.0 / xi - xi) * (2 * na + 1) as f64;
                assert_eq!(value < 1.0 / xi + xi, (na as f64) < t, "ξ={xi} N_A={na}");
            }
        }
    }

    #[test]
    fn variance_criterion_examples() {
        let e = ens_state(&EnsLabel::new(2, 3, 0.6).unwrap()).unwrap();
        let o = variance_criterion(&e, 0.6).unwrap();
        assert!(o.value <= 1e-8, "{}", o.value);
        assert_eq!(o.verdict, Verdict::Violated);

        let v = vacuum(8);
        for xi in [0.3, 0.7] {
            let o = variance_criterion(&v, xi).unwrap();
            assert_abs_diff_eq!(o.value, 4.0, epsilon = 1e-8);
            assert!(o.boundary);
            assert_eq!(o.verdict, Verdict::Satisfied);
        }
        for xi in [0.3, 0.7] {
            for n in 0..=5 {
                for m in 0..=5 {
                    let s = TwoModeState::fock(Cutoffs::square(10).unwrap(), n, m).unwrap();
                    assert!(variance_criterion(&s, xi).unwrap().value >= 4.0 - 1e-8);
                }
            }
        }
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(CriterionOutcome::judge(4.0 - 5e-10, 4.0).verdict, Verdict::Satisfied);
        assert_eq!(CriterionOutcome::judge(4.0 - 2e-9, 4.0).verdict, Verdict::Violated);
        assert!(!CriterionOutcome::judge(5.0, 4.0).boundary);
    }

    #[test]
    fn partial_transpose_of_product_and_entangled_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_product_state(Cutoffs::square(4).unwrap(), &mut rng).unwrap();
        let rho = DensityMatrix::pure(&s).unwrap();
        let pt = partial_transpose(&rho, Mode::B).unwrap();
        assert!(pt.hermiticity_defect() <= 1e-14);
        assert_abs_diff_eq!(pt.trace(), 1.0, epsilon = 1e-12);
        assert!(min_eigenvalue(&pt).unwrap() >= -1e-10);
        // Transposing twice restores the matrix.
        let back = partial_transpose(&pt, Mode::B).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) == 0.0);

        let t = tmsv(0.5, 20).unwrap();
        let dense = min_eigenvalue(&partial_transpose(&DensityMatrix::pure(&t).unwrap(), Mode::B).unwrap()).unwrap();
        assert!(dense < -1e-3);
        assert_abs_diff_eq!(pt_min_eigenvalue(&t).unwrap(), dense, epsilon = 1e-12);
        assert_abs_diff_eq!(pt_min_eigenvalue_explicit(&t).unwrap(), dense, epsilon = 1e-12);
        // Pure-state negativity oracle: −max_{i≠j} λ_i λ_j for Schmidt weights λ_n ∝ ξⁿ.
        assert_abs_diff_eq!(dense, -(1.0 - 0.25) * 0.5, epsilon = 1e-10);
    }

    #[test]
    fn partial_transpose_on_either_mode_has_same_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(Cutoffs::new(3, 4).unwrap(), &mut rng).unwrap();
        let rho = DensityMatrix::pure(&s).unwrap();
        let ea = partial_transpose(&rho, Mode::A).unwrap().eigenvalues().unwrap();
        let eb = partial_transpose(&rho, Mode::B).unwrap().eigenvalues().unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(pt_min_eigenvalue(&s).unwrap(), eb[0], epsilon = 1e-12);
        assert_abs_diff_eq!(pt_min_eigenvalue_explicit(&s).unwrap(), eb[0], epsilon = 1e-12);
    }

    #[test]
    fn schmidt_and_explicit_pt_minima_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..6 {
            let c = Cutoffs::new(2 + k % 3, 3 + k % 4).unwrap();
            let s = random_state(c, &mut rng).unwrap();
            assert_abs_diff_eq!(pt_min_eigenvalue(&s).unwrap(), pt_min_eigenvalue_explicit(&s).unwrap(), epsilon = 1e-12);
            let p = random_product_state(c, &mut rng).unwrap();
            assert!(pt_min_eigenvalue(&p).unwrap().abs() <= 1e-12);
            assert!(pt_min_eigenvalue_explicit(&p).unwrap() >= -1e-12);
        }
        let e = ens_state(&EnsLabel::new(2, 1, 0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(pt_min_eigenvalue(&e).unwrap(), pt_min_eigenvalue_explicit(&e).unwrap(), epsilon = 1e-10);
        let one = TwoModeState::fock(Cutoffs::square(1).unwrap(), 0, 0).unwrap();
        assert_eq!(pt_min_eigenvalue(&one).unwrap(), 1.0);
        assert_eq!(pt_min_eigenvalue(&vacuum(3)).unwrap(), 0.0);
    }

    #[test]
    fn ens_is_npt() {
        let e = ens_state(&EnsLabel::new(1, 0, 0.5).unwrap()).unwrap();
        assert!(pt_min_eigenvalue(&e).unwrap() < -1e-4);
    }

    #[test]
    fn moment_identity_two_routes() {
        let v = vacuum(4);
        let r = pt_moment_identity_check(&v, 0.5).unwrap();
        assert!(r.defect <= 1e-12);
        assert!(r.rhs >= 0.25 - 1e-8);

        let t = tmsv(0.7, 40).unwrap();
        assert!(pt_moment_identity_check(&t, 0.7).unwrap().defect <= 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let s = random_state(Cutoffs::square(8).unwrap(), &mut rng).unwrap();
            let r = pt_moment_identity_check(&s, 0.3).unwrap();
            assert!(r.defect <= 1e-8, "{r:?}");
            assert!(r.rhs >= 0.09 - 1e-8);
        }
    }

    #[test]
    fn report_contrasts_the_two_criteria() {
        let e = ens_state(&EnsLabel::new(3, 1, 0.7).unwrap()).unwrap();
        let r = criteria_report(&e, 0.7).unwrap();
        assert_eq!(r.duan.verdict, Verdict::Satisfied);
        assert_eq!(r.variance.verdict, Verdict::Violated);
        assert!(r.pt_min_eigenvalue.unwrap() < 0.0);
        assert_eq!(r.partial_transpose.verdict, Verdict::Violated);

        let r = criteria_report(&vacuum(5), 0.5).unwrap();
        assert_abs_diff_eq!(r.duan_value, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.variance_value, 4.0, epsilon = 1e-10);
        assert!(r.duan.boundary && r.variance.boundary);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["duan"]["verdict"], "satisfied");
        assert_eq!(json["provenance"]["cutoff_a"], 5 + MOMENT_PADDING);
        assert_eq!(json["partial_transpose"]["verdict"], "satisfied");
        assert_eq!(json["variance_bound"], 4.0);
    }
}
