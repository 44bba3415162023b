//! Two-mode squeezed vacuum and entangled number states (ENS).
//!
//! `|N_A, N_B; ξ⟩ = (Â_ξ†)^{N_A} (B̂_ξ†)^{N_B} |0,0;ξ⟩ / √(N_A! N_B!)` with the
//! collective annihilators
//!
//! ```text
//! Â_ξ = (a − ξ b†)/√(1−ξ²),   B̂_ξ = (b − ξ a†)/√(1−ξ²)
//! ```
//!
//! and `|0,0;ξ⟩ = √(1−ξ²) Σ ξⁿ |n⟩|n⟩`. States are built numerically by
//! ladder action ([`ens_state`]); the Schmidt coefficients also have a
//! closed form ([`closed_form_schmidt`]) and the two are meant to be compared.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use twofloat::TwoFloat;

use crate::error::{invalid, Error, Result};
use crate::fock::{Cutoffs, Mode, TwoModeOperator, TwoModeState};
use crate::linalg::{expm_anti_hermitian, max_abs, CompensatedSum};
use crate::DEFAULT_TRUNCATION_TOLERANCE;

/// Allowed `|Σ C_m² − 1|` for a closed-form spectrum.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
/// Allowed unitarity defect of exponentiated generators.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 1.0) {
        return invalid(format!("squeezing parameter must satisfy 0 < ξ < 1, got {xi}"));
    }
    Ok(())
}

/// Label `(N_A, N_B; ξ)` of an entangled number state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsLabel {
    pub n_a: usize,
    pub n_b: usize,
    pub xi: f64,
}

impl EnsLabel {
    pub fn new(n_a: usize, n_b: usize, xi: f64) -> Result<Self> {
        check_xi(xi)?;
        Ok(Self { n_a, n_b, xi })
    }

    /// Squeezing strength `r = tanh⁻¹ ξ` of the equivalent parametric amplifier.
    pub fn squeezing_r(&self) -> f64 {
        self.xi.atanh()
    }

    pub fn swapped(&self) -> Self {
        Self { n_a: self.n_b, n_b: self.n_a, xi: self.xi }
    }

    /// `N_A − N_B`: Schmidt pairs are `|m + offset⟩_A |m⟩_B` (offset ≥ 0).
    pub fn offset(&self) -> i64 {
        self.n_a as i64 - self.n_b as i64
    }
}

/// Mean and variance of `b†b` in `|N_A, N_B; ξ⟩`:
/// `(N_B + ξ²(N_A+1))/(1−ξ²)` and `ξ²(N_A + N_B + 2N_AN_B + 1)/(1−ξ²)²`.
pub fn photon_number_moments(label: &EnsLabel) -> (f64, f64) {
    let (na, nb, x2) = (label.n_a as f64, label.n_b as f64, label.xi * label.xi);
    let mean = (nb + x2 * (na + 1.0)) / (1.0 - x2);
    let var = x2 * (na + nb + 2.0 * na * nb + 1.0) / ((1.0 - x2) * (1.0 - x2));
    (mean, var)
}

/// Squared Schmidt coefficient below which the window may end.
const TAIL_TARGET: f64 = 1e-32;

/// Cutoffs for `|N_A, N_B; ξ⟩`. The smaller mode gets
/// `max(⌈mean + 12σ + N_B + 10⌉, m* + 10)`, where the moments are those of
/// `b†b` and `m*` is the first Schmidt index past `mean + 12σ` with
/// `C_m² ≤ 1e-32`. The mode with more quanta gets `|N_A − N_B|` extra levels.
pub fn cutoff_policy(label: &EnsLabel) -> Cutoffs {
    let (mean, var) = photon_number_moments(label);
    let bulk = (mean + 12.0 * var.sqrt()).ceil() as usize;
    let moments = bulk + label.n_b + 10;
    let (hi, lo) = (label.n_a.max(label.n_b), label.n_a.min(label.n_b));
    let mut m = bulk;
    while schmidt_coefficient(hi, lo, label.xi, m).powi(2) > TAIL_TARGET
        || schmidt_coefficient(hi, lo, label.xi, m + 1).powi(2) > TAIL_TARGET
    {
        m += 1;
    }
    let small = moments.max(m + 10);
    let big = small + hi - lo;
    if label.n_a >= label.n_b {
        Cutoffs { a: big, b: small }
    } else {
        Cutoffs { a: small, b: big }
    }
}

/// Two-mode squeezed vacuum on a square `cutoff × cutoff` window.
pub fn tmsv(xi: f64, cutoff: usize) -> Result<TwoModeState> {
    tmsv_in(xi, Cutoffs::square(cutoff)?, DEFAULT_TRUNCATION_TOLERANCE)
}

/// Two-mode squeezed vacuum inside arbitrary cutoffs; the diagonal runs to
/// `min(D_A, D_B)`. The dropped tail mass `ξ^{2·min(D)}` must fit the
/// tolerance.
pub fn tmsv_in(xi: f64, cutoffs: Cutoffs, tolerance: f64) -> Result<TwoModeState> {
    check_xi(xi)?;
    let d = cutoffs.a.min(cutoffs.b);
    let tail = xi.powi(2 * d as i32);
    if tail > tolerance {
        return Err(Error::Truncation { loss: tail, tolerance });
    }
    let mut coeffs = DMatrix::zeros(cutoffs.a, cutoffs.b);
    let mut amp = (1.0 - xi * xi).sqrt();
    for n in 0..d {
        coeffs[(n, n)] = C64::new(amp, 0.0);
        amp *= xi;
    }
    Ok(TwoModeState::from_coeffs(coeffs, tolerance)?.normalize()?.with_truncation_loss(tail))
}

/// `Â_ξ` (`which = A`) or `B̂_ξ` (`which = B`) as a matrix.
pub fn collective_annihilator(which: Mode, xi: f64, cutoffs: Cutoffs) -> Result<TwoModeOperator> {
    check_xi(xi)?;
    let s = (1.0 - xi * xi).sqrt();
    let own = TwoModeOperator::annihilation(which, cutoffs);
    let partner = TwoModeOperator::creation(which.other(), cutoffs);
    Ok((&own - &partner.scale(C64::new(xi, 0.0))).scale(C64::new(1.0 / s, 0.0)))
}

/// `Â_ξ†Â_ξ` or `B̂_ξ†B̂_ξ`.
pub fn collective_number(which: Mode, xi: f64, cutoffs: Cutoffs) -> Result<TwoModeOperator> {
    let a = collective_annihilator(which, xi, cutoffs)?;
    Ok((&a.adjoint() * &a).hermitian_part())
}

/// Applies `Â_ξ†` or `B̂_ξ†` to a coefficient matrix. Returns the image and
/// the squared norm created beyond the cutoff of the raised mode.
pub(crate) fn raise_collective(c: &DMatrix<C64>, which: Mode, xi: f64) -> (DMatrix<C64>, f64) {
    let (da, db) = (c.nrows(), c.ncols());
    let s = (1.0 - xi * xi).sqrt();
    let mut out = DMatrix::zeros(da, db);
    let mut leak = 0.0;
    match which {
        // (a† − ξ b)/s
        Mode::A => {
            for m in 0..db {
                for n in 0..da {
                    let mut v = C64::new(0.0, 0.0);
                    if n > 0 {
                        v += c[(n - 1, m)] * (n as f64).sqrt();
                    }
                    if m + 1 < db {
                        v -= c[(n, m + 1)] * (xi * ((m + 1) as f64).sqrt());
                    }
                    out[(n, m)] = v / s;
                }
                leak += c[(da - 1, m)].norm_sqr() * da as f64 / (s * s);
            }
        }
        // (b† − ξ a)/s
        Mode::B => {
            for m in 0..db {
                for n in 0..da {
                    let mut v = C64::new(0.0, 0.0);
                    if m > 0 {
                        v += c[(n, m - 1)] * (m as f64).sqrt();
                    }
                    if n + 1 < da {
                        v -= c[(n + 1, m)] * (xi * ((n + 1) as f64).sqrt());
                    }
                    out[(n, m)] = v / s;
                }
            }
            for n in 0..da {
                leak += c[(n, db - 1)].norm_sqr() * db as f64 / (s * s);
            }
        }
    }
    (out, leak)
}

/// Real coefficient matrix in double-double precision, column-major like
/// `DMatrix`.
struct WideMatrix {
    rows: usize,
    cols: usize,
    data: Vec<TwoFloat>,
}

impl WideMatrix {
    fn at(&self, n: usize, m: usize) -> TwoFloat {
        self.data[m * self.rows + n]
    }

    fn norm_sqr(&self) -> TwoFloat {
        self.data.iter().fold(TwoFloat::from(0.0), |acc, &x| acc + x * x)
    }

    /// `(a† − ξ b)/s` or `(b† − ξ a)/s`, with the squared norm pushed past
    /// the raised mode's cutoff.
    fn raise(&self, which: Mode, xi: f64, s: TwoFloat) -> (Self, f64) {
        let (da, db) = (self.rows, self.cols);
        let root = |k: usize| TwoFloat::from(k as f64).sqrt();
        let mut data = vec![TwoFloat::from(0.0); da * db];
        for m in 0..db {
            for n in 0..da {
                let mut v = TwoFloat::from(0.0);
                match which {
                    Mode::A => {
                        if n > 0 {
                            v += self.at(n - 1, m) * root(n);
                        }
                        if m + 1 < db {
                            v -= self.at(n, m + 1) * root(m + 1) * xi;
                        }
                    }
                    Mode::B => {
                        if m > 0 {
                            v += self.at(n, m - 1) * root(m);
                        }
                        if n + 1 < da {
                            v -= self.at(n + 1, m) * root(n + 1) * xi;
                        }
                    }
                }
                data[m * da + n] = v / s;
            }
        }
        let edge: f64 = match which {
            Mode::A => (0..db).map(|m| self.at(da - 1, m).hi().powi(2)).sum::<f64>() * da as f64,
            Mode::B => (0..da).map(|n| self.at(n, db - 1).hi().powi(2)).sum::<f64>() * db as f64,
        };
        let s2 = f64::from(s * s);
        (Self { rows: da, cols: db, data }, edge / s2)
    }
}

/// Ladder construction with cumulative truncation accounting. The loss is
/// `1 − Π(kept fraction)` over the seed truncation and every raising step.
///
/// The coefficients are real, and the raising steps run in double-double
/// arithmetic: at large `ξ` each step amplifies rounding in the high-photon
/// tail, enough to cost eight digits by `N_A + N_B = 12` in plain `f64`.
pub(crate) fn ens_ladder(label: &EnsLabel, cutoffs: Cutoffs, tolerance: f64) -> Result<TwoModeState> {
    // Seed loss is checked together with the raising losses below.
    let seed = tmsv_in(label.xi, cutoffs, 1.0)?;
    let mut kept = 1.0 - seed.truncation_loss();
    let xi = label.xi;
    let s = (TwoFloat::from(1.0) - TwoFloat::new_mul(xi, xi)).sqrt();
    let (da, db) = (cutoffs.a, cutoffs.b);
    let mut data = vec![TwoFloat::from(0.0); da * db];
    let mut amp = s;
    for n in 0..da.min(db) {
        data[n * da + n] = amp;
        amp *= xi;
    }
    let mut c = WideMatrix { rows: da, cols: db, data };
    let steps = std::iter::repeat_n(Mode::B, label.n_b).chain(std::iter::repeat_n(Mode::A, label.n_a));
    for which in steps {
        let (mut next, leak) = c.raise(which, xi, s);
        let inside = next.norm_sqr();
        if inside.hi().is_nan() || inside.hi() <= 0.0 {
            return Err(Error::Truncation { loss: 1.0, tolerance });
        }
        kept *= f64::from(inside) / (f64::from(inside) + leak);
        let scale = inside.sqrt();
        for x in &mut next.data {
            *x /= scale;
        }
        c = next;
    }
    let loss = (1.0 - kept).max(0.0);
    if loss > tolerance {
        return Err(Error::Truncation { loss, tolerance });
    }
    let coeffs = DMatrix::from_fn(da, db, |n, m| C64::new(f64::from(c.at(n, m)), 0.0));
    Ok(TwoModeState::from_coeffs(coeffs, tolerance)?.normalize()?.with_truncation_loss(loss))
}

/// `|N_A, N_B; ξ⟩` with cutoffs from [`cutoff_policy`] and the default tolerance.
pub fn ens_state(label: &EnsLabel) -> Result<TwoModeState> {
    ens_state_in(label, cutoff_policy(label), DEFAULT_TRUNCATION_TOLERANCE)
}

/// `|N_A, N_B; ξ⟩` in explicit cutoffs. Fails with a truncation error when
/// more than `tolerance` of the squared norm is lost to the cutoff.
pub fn ens_state_in(label: &EnsLabel, cutoffs: Cutoffs, tolerance: f64) -> Result<TwoModeState> {
    check_xi(label.xi)?;
    ens_ladder(label, cutoffs, tolerance)
}

// ---------------------------------------------------------------------------
// Closed-form Schmidt coefficients
// ---------------------------------------------------------------------------

/// Signed Schmidt coefficients `C_m` with their pairing offset.
///
/// For `offset ≥ 0`, `C_m` multiplies `|m + offset⟩_A |m⟩_B`; for
/// `offset < 0` it multiplies `|m⟩_A |m − offset⟩_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub n_a: usize,
    pub n_b: usize,
    pub xi: f64,
    pub offset: i64,
    pub coeffs: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c * c).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).collect::<CompensatedSum>().value()
    }

    /// Fock levels `(n_A, n_B)` carrying `C_m`.
    pub fn levels(&self, m: usize) -> (usize, usize) {
        if self.offset >= 0 {
            (m + self.offset as usize, m)
        } else {
            (m, m + (-self.offset) as usize)
        }
    }

    /// `(mean, variance)` of `b†b` under `{C_m²}`.
    pub fn mode_b_moments(&self) -> (f64, f64) {
        let p = self.probabilities();
        let nb = |m: usize| self.levels(m).1 as f64;
        let mean = p.iter().enumerate().map(|(m, w)| w * nb(m)).collect::<CompensatedSum>().value();
        let var = p.iter().enumerate().map(|(m, w)| w * (nb(m) - mean).powi(2)).collect::<CompensatedSum>().value();
        (mean, var)
    }

    /// Number of sign changes along `m`, skipping exact zeros.
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<bool> = self.coeffs.iter().filter(|c| **c != 0.0).map(|c| *c > 0.0).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Amplitude matrix of the state the spectrum describes.
    pub fn to_state(&self, cutoffs: Cutoffs) -> Result<TwoModeState> {
        let mut coeffs = DMatrix::zeros(cutoffs.a, cutoffs.b);
        for (m, &c) in self.coeffs.iter().enumerate() {
            let (i, j) = self.levels(m);
            if i < cutoffs.a && j < cutoffs.b {
                coeffs[(i, j)] = C64::new(c, 0.0);
            }
        }
        TwoModeState::from_coeffs(coeffs, DEFAULT_TRUNCATION_TOLERANCE)
    }

    /// CSV with columns `m, C_m, C_m_squared` behind a `#` header recording
    /// the label and offset.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# N_A={} N_B={} xi={} offset={}", self.n_a, self.n_b, self.xi, self.offset).unwrap();
        out.push_str("m,C_m,C_m_squared\n");
        for (m, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "{m},{c:.17e},{:.17e}", c * c).unwrap();
        }
        out
    }
}

fn lf(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// Signed `C_m(N_A, N_B, ξ²)` for `N_A ≥ N_B`.
///
/// The alternating sum over `k` is evaluated from signed log-magnitudes:
/// the largest term is factored out and the rescaled terms are summed with
/// compensation.
pub fn schmidt_coefficient(n_a: usize, n_b: usize, xi: f64, m: usize) -> f64 {
    debug_assert!(n_a >= n_b);
    let ln_xi = xi.ln();
    let ln_s2 = (-xi * xi).ln_1p();
    let d = n_a - n_b;
    let common = 0.5 * (lf(n_a) + lf(n_b) + lf(d + m) + lf(m));
    let terms: Vec<(f64, f64)> = (0..=m.min(n_b))
        .map(|k| {
            let log = k as f64 * ln_s2 + (n_b + m - 2 * k) as f64 * ln_xi + common
                - lf(k)
                - lf(m - k)
                - lf(d + k)
                - lf(n_b - k);
            let sign = if (n_b - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            (sign, log)
        })
        .collect();
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let scaled: CompensatedSum = terms.iter().map(|(s, l)| s * (l - top).exp()).collect();
    scaled.value() * (0.5 * (d + 1) as f64 * ln_s2 + top).exp()
}

/// Default number of Schmidt terms: the mode-B cutoff of [`cutoff_policy`].
pub fn default_m_max(label: &EnsLabel) -> usize {
    let c = cutoff_policy(label);
    c.a.min(c.b)
}

/// Closed-form spectrum for `m = 0..=m_max`.
///
/// Inputs with `N_A < N_B` are reduced to the swapped label and reported
/// with a negative offset. Fails with a truncation error when the tail past
/// `m_max` carries more than the default tolerance, and with a precision
/// error when the coefficients do not square-sum to one.
pub fn closed_form_schmidt(label: &EnsLabel, m_max: usize) -> Result<SchmidtSpectrum> {
    closed_form_schmidt_with(label, m_max, DEFAULT_TRUNCATION_TOLERANCE)
}

pub fn closed_form_schmidt_with(label: &EnsLabel, m_max: usize, tolerance: f64) -> Result<SchmidtSpectrum> {
    check_xi(label.xi)?;
    let (hi, lo) = if label.n_a >= label.n_b { (label.n_a, label.n_b) } else { (label.n_b, label.n_a) };
    let coeffs: Vec<f64> = (0..=m_max).map(|m| schmidt_coefficient(hi, lo, label.xi, m)).collect();
    let spec = SchmidtSpectrum { n_a: label.n_a, n_b: label.n_b, xi: label.xi, offset: label.offset(), coeffs };

    // Far tail decays geometrically; estimate it from the last ratio.
    let p = spec.probabilities();
    let tail = match p.len() {
        0 | 1 => f64::INFINITY,
        n => {
            let (last, prev) = (p[n - 1], p[n - 2]);
            if last == 0.0 {
                0.0
            } else if prev > 0.0 && last < prev {
                let r = last / prev;
                last * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        }
    };
    let total = spec.norm_sqr();
    let missing = (1.0 - total).max(0.0);
    if tail > tolerance || (missing > tolerance.max(NORMALIZATION_TOLERANCE) && missing > 10.0 * tail) {
        return Err(Error::Truncation { loss: tail.max(missing), tolerance });
    }
    if (total + tail - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Precision(format!(
            "Schmidt coefficients for ({}, {}; ξ={}) square-sum to {total:.15}",
            label.n_a, label.n_b, label.xi
        )));
    }
    Ok(spec)
}

/// `|C_m(N_A, 0, p)|² = (1−p)^{1+N_A} pᵐ (N_A+m)!/(N_A! m!)`.
pub fn negative_binomial_pmf(n_a: usize, p: f64, m: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("negative binomial parameter must satisfy 0 < p < 1, got {p}"));
    }
    let log = (1 + n_a) as f64 * (-p).ln_1p() + m as f64 * p.ln() + lf(n_a + m) - lf(n_a) - lf(m);
    Ok(log.exp())
}

/// `U = exp[r(a†b† − ab)]`, exponentiated exactly on each conserved
/// `n_A − n_B` block of the truncated generator.
pub fn two_mode_squeezer(r: f64, cutoffs: Cutoffs) -> Result<TwoModeOperator> {
    if !(r >= 0.0 && r.is_finite()) {
        return invalid(format!("squeezing strength must be finite and non-negative, got {r}"));
    }
    let a = TwoModeOperator::annihilation(Mode::A, cutoffs);
    let b = TwoModeOperator::annihilation(Mode::B, cutoffs);
    let gen = (&(&a.adjoint() * &b.adjoint()) - &(&a * &b)).scale(C64::new(r, 0.0));
    let u = TwoModeOperator::from_csr(cutoffs, expm_anti_hermitian(gen.csr())?);
    let defect = unitarity_defect(&u);
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::Truncation { loss: defect, tolerance: UNITARITY_TOLERANCE });
    }
    Ok(u)
}

/// `‖U†U − 1‖_max` over the interior block.
pub fn unitarity_defect(u: &TwoModeOperator) -> f64 {
    let g = &u.adjoint() * u;
    let block = g.interior_block(1);
    let n = block.nrows();
    max_abs(&(block - DMatrix::<C64>::identity(n, n)))
}
