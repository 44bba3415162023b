//! Truncated two-mode Fock space: states, operators and the ladder algebra.
//!
//! A [`TwoModeState`] holds amplitudes `c[n_A][n_B]` for `n_A < D_A`,
//! `n_B < D_B`. A [`TwoModeOperator`] is a sparse matrix on the flattened
//! index `n_A·D_B + n_B`. Operators assembled from ladder operators remember
//! how to rebuild themselves at larger cutoffs, which lets [`apply`] report
//! the squared norm that a product pushes past the cutoff instead of silently
//! dropping it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{csr_adjoint, csr_from_triplets, csr_matvec, csr_to_dense};
use crate::{DEFAULT_TRUNCATION_TOLERANCE, DENSE_DIM_LIMIT};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Hermiticity defect allowed for builders flagged Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Largest imaginary part tolerated in the expectation of a Hermitian operator.
pub const EXPECTATION_IMAG_TOLERANCE: f64 = 1e-10;
/// Negative variances above this are clamped to zero.
pub const VARIANCE_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::A => Mode::B,
            Mode::B => Mode::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

/// Fock cutoffs `(D_A, D_B)`: mode A keeps levels `0..D_A`, mode B `0..D_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cutoffs {
    pub a: usize,
    pub b: usize,
}

impl Cutoffs {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a < 1 || b < 1 {
            return invalid(format!("cutoffs must be at least 1, got ({a}, {b})"));
        }
        Ok(Self { a, b })
    }

    pub fn square(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn dim(&self) -> usize {
        self.a * self.b
    }

    pub fn get(&self, mode: Mode) -> usize {
        match mode {
            Mode::A => self.a,
            Mode::B => self.b,
        }
    }

    #[inline]
    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.b + n_b
    }

    #[inline]
    pub fn levels(&self, idx: usize) -> (usize, usize) {
        (idx / self.b, idx % self.b)
    }

    pub fn swapped(&self) -> Self {
        Self { a: self.b, b: self.a }
    }

    pub fn grown(&self, extra_a: usize, extra_b: usize) -> Self {
        Self { a: self.a + extra_a, b: self.b + extra_b }
    }

    /// Componentwise maximum.
    pub fn max(&self, other: &Cutoffs) -> Self {
        Self { a: self.a.max(other.a), b: self.b.max(other.b) }
    }
}

impl fmt::Display for Cutoffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.a, self.b)
    }
}

fn check_same(lhs: Cutoffs, rhs: Cutoffs) -> Result<()> {
    if lhs != rhs {
        return invalid(format!("cutoff mismatch: {lhs} vs {rhs}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Pure two-mode state with amplitudes `coeffs[(n_A, n_B)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    coeffs: DMatrix<C64>,
    truncation_tolerance: f64,
    truncation_loss: f64,
}

impl TwoModeState {
    pub fn from_coeffs(coeffs: DMatrix<C64>, truncation_tolerance: f64) -> Result<Self> {
        if coeffs.nrows() < 1 || coeffs.ncols() < 1 {
            return invalid("state needs at least one level per mode");
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("state amplitudes must be finite");
        }
        if !(truncation_tolerance > 0.0 && truncation_tolerance.is_finite()) {
            return invalid(format!("truncation tolerance must be positive, got {truncation_tolerance}"));
        }
        Ok(Self { coeffs, truncation_tolerance, truncation_loss: 0.0 })
    }

    pub fn zeros(cutoffs: Cutoffs) -> Self {
        Self {
            coeffs: DMatrix::zeros(cutoffs.a, cutoffs.b),
            truncation_tolerance: DEFAULT_TRUNCATION_TOLERANCE,
            truncation_loss: 0.0,
        }
    }

    /// Bare Fock product `|n_A⟩|n_B⟩`.
    pub fn fock(cutoffs: Cutoffs, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a >= cutoffs.a || n_b >= cutoffs.b {
            return invalid(format!("Fock state |{n_a},{n_b}⟩ outside cutoffs {cutoffs}"));
        }
        let mut s = Self::zeros(cutoffs);
        s.coeffs[(n_a, n_b)] = ONE;
        Ok(s)
    }

    /// Product state `|u⟩_A ⊗ |v⟩_B`, normalized.
    pub fn product(mode_a: &[C64], mode_b: &[C64]) -> Result<Self> {
        if mode_a.is_empty() || mode_b.is_empty() {
            return invalid("product state needs non-empty factors");
        }
        let coeffs = DMatrix::from_fn(mode_a.len(), mode_b.len(), |i, j| mode_a[i] * mode_b[j]);
        Self::from_coeffs(coeffs, DEFAULT_TRUNCATION_TOLERANCE)?.normalize()
    }

    /// State from a flattened vector in the `n_A·D_B + n_B` convention.
    pub fn from_vector(cutoffs: Cutoffs, v: &DVector<C64>) -> Result<Self> {
        if v.len() != cutoffs.dim() {
            return invalid(format!("vector length {} does not match cutoffs {cutoffs}", v.len()));
        }
        let coeffs = DMatrix::from_fn(cutoffs.a, cutoffs.b, |i, j| v[cutoffs.index(i, j)]);
        Self::from_coeffs(coeffs, DEFAULT_TRUNCATION_TOLERANCE)
    }

    pub fn to_vector(&self) -> DVector<C64> {
        let c = self.cutoffs();
        DVector::from_fn(c.dim(), |k, _| {
            let (i, j) = c.levels(k);
            self.coeffs[(i, j)]
        })
    }

    pub fn cutoffs(&self) -> Cutoffs {
        Cutoffs { a: self.coeffs.nrows(), b: self.coeffs.ncols() }
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> C64 {
        if n_a < self.coeffs.nrows() && n_b < self.coeffs.ncols() {
            self.coeffs[(n_a, n_b)]
        } else {
            ZERO
        }
    }

    pub fn truncation_tolerance(&self) -> f64 {
        self.truncation_tolerance
    }

    /// Squared norm known to be missing because of the Fock cutoff.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn with_truncation_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return invalid(format!("truncation tolerance must be positive, got {tolerance}"));
        }
        self.truncation_tolerance = tolerance;
        Ok(self)
    }

    pub(crate) fn with_truncation_loss(mut self, loss: f64) -> Self {
        self.truncation_loss = loss;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !n.is_finite() || n <= 0.0 {
            return invalid("cannot normalize a zero or non-finite state");
        }
        self.coeffs /= C64::new(n.sqrt(), 0.0);
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TwoModeState) -> Result<C64> {
        check_same(self.cutoffs(), other.cutoffs())?;
        Ok(self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`, after zero-padding both states to common cutoffs.
    pub fn overlap(&self, other: &TwoModeState) -> f64 {
        let c = self.cutoffs().max(&other.cutoffs());
        let (x, _) = self.resized(c);
        let (y, _) = other.resized(c);
        x.inner(&y).map(|z| z.norm_sqr()).unwrap_or(0.0)
    }

    /// Exchange the two modes: `c'[n][m] = c[m][n]`.
    pub fn swap_modes(&self) -> Self {
        Self {
            coeffs: self.coeffs.transpose(),
            truncation_tolerance: self.truncation_tolerance,
            truncation_loss: self.truncation_loss,
        }
    }

    /// Zero-pad or crop to `cutoffs`; returns the squared norm cropped away.
    pub fn resized(&self, cutoffs: Cutoffs) -> (Self, f64) {
        let mut coeffs = DMatrix::zeros(cutoffs.a, cutoffs.b);
        let mut lost = 0.0;
        for j in 0..self.coeffs.ncols() {
            for i in 0..self.coeffs.nrows() {
                let v = self.coeffs[(i, j)];
                if i < cutoffs.a && j < cutoffs.b {
                    coeffs[(i, j)] = v;
                } else {
                    lost += v.norm_sqr();
                }
            }
        }
        let s = Self {
            coeffs,
            truncation_tolerance: self.truncation_tolerance,
            truncation_loss: self.truncation_loss + lost,
        };
        (s, lost)
    }

    /// Smallest cutoffs that keep all but `tail` squared norm, dropping
    /// trailing rows and columns.
    pub fn trimmed(&self, tail: f64) -> Self {
        let rows: Vec<f64> = self.coeffs.row_iter().map(|r| r.iter().map(|c| c.norm_sqr()).sum()).collect();
        let cols: Vec<f64> = self.coeffs.column_iter().map(|r| r.iter().map(|c| c.norm_sqr()).sum()).collect();
        let keep = |mass: &[f64]| {
            let mut acc = 0.0;
            let mut k = mass.len();
            while k > 1 && acc + mass[k - 1] <= tail / 2.0 {
                acc += mass[k - 1];
                k -= 1;
            }
            k
        };
        let c = Cutoffs { a: keep(&rows), b: keep(&cols) };
        self.resized(c).0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StateJson::from(self)).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: StateJson = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("state JSON: {e}")))?;
        j.try_into()
    }
}

/// Wire form: row-major `[re, im]` pairs in the flattened index order.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub coeffs: Vec<[f64; 2]>,
    pub truncation_tolerance: f64,
}

impl From<&TwoModeState> for StateJson {
    fn from(s: &TwoModeState) -> Self {
        let c = s.cutoffs();
        Self {
            cutoff_a: c.a,
            cutoff_b: c.b,
            coeffs: s.to_vector().iter().map(|z| [z.re, z.im]).collect(),
            truncation_tolerance: s.truncation_tolerance,
        }
    }
}

impl TryFrom<StateJson> for TwoModeState {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        let c = Cutoffs::new(j.cutoff_a, j.cutoff_b)?;
        if j.coeffs.len() != c.dim() {
            return invalid(format!("expected {} coefficients, found {}", c.dim(), j.coeffs.len()));
        }
        let v = DVector::from_iterator(c.dim(), j.coeffs.iter().map(|p| C64::new(p[0], p[1])));
        TwoModeState::from_vector(c, &v)?.with_truncation_tolerance(j.truncation_tolerance)
    }
}

// ---------------------------------------------------------------------------
// Single-mode ladder matrices
// ---------------------------------------------------------------------------

/// Truncated annihilation operator: `M[n−1][n] = √n`.
pub fn annihilation_single(cutoff: usize) -> Result<DMatrix<f64>> {
    if cutoff < 1 {
        return invalid("cutoff must be at least 1");
    }
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = (n as f64).sqrt();
    }
    Ok(m)
}

pub fn creation_single(cutoff: usize) -> Result<DMatrix<f64>> {
    Ok(annihilation_single(cutoff)?.transpose())
}

pub fn number_single(cutoff: usize) -> Result<DMatrix<f64>> {
    if cutoff < 1 {
        return invalid("cutoff must be at least 1");
    }
    Ok(DMatrix::from_diagonal(&DVector::from_fn(cutoff, |n, _| n as f64)))
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

type Builder = Arc<dyn Fn(Cutoffs) -> CsrMatrix<C64> + Send + Sync>;

/// How to rebuild an operator at other cutoffs, and how many quanta it can
/// add to (`raise`) or remove from (`lower`) each mode.
#[derive(Clone)]
struct Recipe {
    build: Builder,
    raise: [usize; 2],
    lower: [usize; 2],
}

/// Operator on the flattened two-mode basis.
#[derive(Clone)]
pub struct TwoModeOperator {
    cutoffs: Cutoffs,
    matrix: CsrMatrix<C64>,
    recipe: Option<Recipe>,
}

impl fmt::Debug for TwoModeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoModeOperator")
            .field("cutoffs", &self.cutoffs)
            .field("nnz", &self.matrix.nnz())
            .field("ladder_recipe", &self.recipe.is_some())
            .finish()
    }
}

fn embed_csr(mode: Mode, single: &DMatrix<f64>, c: Cutoffs) -> CsrMatrix<C64> {
    let mut t = Vec::new();
    for j in 0..single.ncols() {
        for i in 0..single.nrows() {
            let v = single[(i, j)];
            if v == 0.0 {
                continue;
            }
            match mode {
                Mode::A => {
                    for nb in 0..c.b {
                        t.push((c.index(i, nb), c.index(j, nb), C64::new(v, 0.0)));
                    }
                }
                Mode::B => {
                    for na in 0..c.a {
                        t.push((c.index(na, i), c.index(na, j), C64::new(v, 0.0)));
                    }
                }
            }
        }
    }
    csr_from_triplets(c.dim(), c.dim(), t)
}

fn mode_slot(mode: Mode) -> usize {
    match mode {
        Mode::A => 0,
        Mode::B => 1,
    }
}

impl TwoModeOperator {
    fn ladder(mode: Mode, dagger: bool, cutoffs: Cutoffs) -> Self {
        let build: Builder = Arc::new(move |c: Cutoffs| {
            let d = c.get(mode);
            let m = annihilation_single(d).expect("cutoffs are validated");
            embed_csr(mode, &if dagger { m.transpose() } else { m }, c)
        });
        let mut raise = [0, 0];
        let mut lower = [0, 0];
        if dagger {
            raise[mode_slot(mode)] = 1;
        } else {
            lower[mode_slot(mode)] = 1;
        }
        let matrix = build(cutoffs);
        Self { cutoffs, matrix, recipe: Some(Recipe { build, raise, lower }) }
    }

    pub fn annihilation(mode: Mode, cutoffs: Cutoffs) -> Self {
        Self::ladder(mode, false, cutoffs)
    }

    pub fn creation(mode: Mode, cutoffs: Cutoffs) -> Self {
        Self::ladder(mode, true, cutoffs)
    }

    pub fn identity(cutoffs: Cutoffs) -> Self {
        let build: Builder = Arc::new(|c: Cutoffs| csr_from_triplets(c.dim(), c.dim(), (0..c.dim()).map(|k| (k, k, ONE))));
        let matrix = build(cutoffs);
        Self { cutoffs, matrix, recipe: Some(Recipe { build, raise: [0, 0], lower: [0, 0] }) }
    }

    pub fn zero(cutoffs: Cutoffs) -> Self {
        Self::identity(cutoffs).scale(ZERO)
    }

    /// `a†a` or `b†b`.
    /// Built from integer diagonals, so `n|n⟩` is exact.
    pub fn number(mode: Mode, cutoffs: Cutoffs) -> Self {
        let build: Builder = Arc::new(move |c: Cutoffs| {
            embed_csr(mode, &number_single(c.get(mode)).expect("cutoffs are validated"), c)
        });
        let matrix = build(cutoffs);
        Self { cutoffs, matrix, recipe: Some(Recipe { build, raise: [0, 0], lower: [0, 0] }) }
    }

    /// `x̂ = (a + a†)/√2` or `p̂ = (a − a†)/(i√2)`.
    pub fn quadrature(mode: Mode, which: Quadrature, cutoffs: Cutoffs) -> Self {
        let a = Self::annihilation(mode, cutoffs);
        let ad = Self::creation(mode, cutoffs);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match which {
            Quadrature::X => (&a + &ad).scale(C64::new(s, 0.0)),
            Quadrature::P => (&a - &ad).scale(C64::new(0.0, -s)),
        }
        .hermitian_part()
    }

    /// Kronecker embedding `M ⊗ 1` (mode A) or `1 ⊗ M` (mode B) of an
    /// arbitrary single-mode matrix.
    pub fn embed(mode: Mode, single: &DMatrix<f64>, cutoffs: Cutoffs) -> Result<Self> {
        let d = cutoffs.get(mode);
        if single.nrows() != d || single.ncols() != d {
            return invalid(format!(
                "single-mode matrix is {}x{}, mode {:?} cutoff is {d}",
                single.nrows(),
                single.ncols(),
                mode
            ));
        }
        Ok(Self { cutoffs, matrix: embed_csr(mode, single, cutoffs), recipe: None })
    }

    /// Local operator `U_A ⊗ U_B` from two complex single-mode matrices.
    pub fn local_product(u_a: &DMatrix<C64>, u_b: &DMatrix<C64>) -> Result<Self> {
        if !u_a.is_square() || !u_b.is_square() {
            return invalid("local factors must be square");
        }
        let c = Cutoffs::new(u_a.nrows(), u_b.nrows())?;
        let mut t = Vec::new();
        for (i, j) in (0..c.a).flat_map(|i| (0..c.a).map(move |j| (i, j))) {
            let x = u_a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..c.b {
                for l in 0..c.b {
                    let y = u_b[(k, l)];
                    if y != ZERO {
                        t.push((c.index(i, k), c.index(j, l), x * y));
                    }
                }
            }
        }
        Ok(Self { cutoffs: c, matrix: csr_from_triplets(c.dim(), c.dim(), t), recipe: None })
    }

    pub fn from_dense(cutoffs: Cutoffs, m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != cutoffs.dim() || m.ncols() != cutoffs.dim() {
            return invalid(format!("dense matrix is {}x{}, expected dimension {}", m.nrows(), m.ncols(), cutoffs.dim()));
        }
        let t = (0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| (i, j, m[(i, j)])));
        Ok(Self { cutoffs, matrix: csr_from_triplets(cutoffs.dim(), cutoffs.dim(), t), recipe: None })
    }

    pub(crate) fn from_csr(cutoffs: Cutoffs, matrix: CsrMatrix<C64>) -> Self {
        Self { cutoffs, matrix, recipe: None }
    }

    pub fn cutoffs(&self) -> Cutoffs {
        self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.dim()
    }

    pub fn csr(&self) -> &CsrMatrix<C64> {
        &self.matrix
    }

    /// Non-zero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        self.matrix.triplet_iter().map(|(i, j, v)| (i, j, *v)).collect()
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.dim() > DENSE_DIM_LIMIT {
            return Err(Error::Resource(format!(
                "dense operator of dimension {} exceeds limit {DENSE_DIM_LIMIT}",
                self.dim()
            )));
        }
        Ok(csr_to_dense(&self.matrix))
    }

    /// Matrix element `⟨n_A, n_B| O |n_A', n_B'⟩`.
    pub fn element(&self, row: (usize, usize), col: (usize, usize)) -> C64 {
        let (i, j) = (self.cutoffs.index(row.0, row.1), self.cutoffs.index(col.0, col.1));
        self.matrix.get_entry(i, j).map(|e| e.into_value()).unwrap_or(ZERO)
    }

    pub fn scale(&self, c: C64) -> Self {
        let matrix = &self.matrix * c;
        let recipe = self.recipe.as_ref().map(|r| {
            let b = r.build.clone();
            Recipe { build: Arc::new(move |cut| &b(cut) * c), raise: r.raise, lower: r.lower }
        });
        Self { cutoffs: self.cutoffs, matrix, recipe }
    }

    pub fn adjoint(&self) -> Self {
        let recipe = self.recipe.as_ref().map(|r| {
            let b = r.build.clone();
            Recipe { build: Arc::new(move |cut| csr_adjoint(&b(cut))), raise: r.lower, lower: r.raise }
        });
        Self { cutoffs: self.cutoffs, matrix: csr_adjoint(&self.matrix), recipe }
    }

    /// `(M + M†)/2`; used by Hermitian builders so that rounding never
    /// breaks exact Hermiticity.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.matrix - &csr_adjoint(&self.matrix);
        d.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOLERANCE
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &TwoModeOperator) -> Self {
        &(self * other) - &(other * self)
    }

    /// Dense sub-block on basis states with `n_A < D_A − margin` and
    /// `n_B < D_B − margin`, the region untouched by truncation edges.
    pub fn interior_block(&self, margin: usize) -> DMatrix<C64> {
        let c = self.cutoffs;
        let keep: Vec<usize> = (0..c.dim())
            .filter(|&k| {
                let (i, j) = c.levels(k);
                i + margin < c.a && j + margin < c.b
            })
            .collect();
        let mut pos = vec![usize::MAX; c.dim()];
        for (p, &k) in keep.iter().enumerate() {
            pos[k] = p;
        }
        let mut d = DMatrix::zeros(keep.len(), keep.len());
        for (i, j, v) in self.matrix.triplet_iter() {
            if pos[i] != usize::MAX && pos[j] != usize::MAX {
                d[(pos[i], pos[j])] += *v;
            }
        }
        d
    }

    fn combine(&self, other: &TwoModeOperator, sign: f64) -> Self {
        assert_eq!(self.cutoffs, other.cutoffs, "operator cutoff mismatch");
        let matrix = if sign > 0.0 { &self.matrix + &other.matrix } else { &self.matrix - &other.matrix };
        let recipe = match (&self.recipe, &other.recipe) {
            (Some(x), Some(y)) => {
                let (bx, by) = (x.build.clone(), y.build.clone());
                let build: Builder = if sign > 0.0 {
                    Arc::new(move |c| &bx(c) + &by(c))
                } else {
                    Arc::new(move |c| &bx(c) - &by(c))
                };
                Some(Recipe {
                    build,
                    raise: [x.raise[0].max(y.raise[0]), x.raise[1].max(y.raise[1])],
                    lower: [x.lower[0].max(y.lower[0]), x.lower[1].max(y.lower[1])],
                })
            }
            _ => None,
        };
        Self { cutoffs: self.cutoffs, matrix, recipe }
    }
}

impl Add for &TwoModeOperator {
    type Output = TwoModeOperator;

    /// # Panics
    /// On mismatched cutoffs.
    fn add(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &TwoModeOperator {
    type Output = TwoModeOperator;

    fn sub(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &TwoModeOperator {
    type Output = TwoModeOperator;

    fn neg(self) -> TwoModeOperator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &TwoModeOperator {
    type Output = TwoModeOperator;

    /// Product of the truncated matrices.
    ///
    /// # Panics
    /// On mismatched cutoffs.
    fn mul(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        assert_eq!(self.cutoffs, rhs.cutoffs, "operator cutoff mismatch");
        let matrix = &self.matrix * &rhs.matrix;
        let recipe = match (&self.recipe, &rhs.recipe) {
            (Some(x), Some(y)) => {
                let (bx, by) = (x.build.clone(), y.build.clone());
                Some(Recipe {
                    build: Arc::new(move |c| &bx(c) * &by(c)),
                    raise: [x.raise[0] + y.raise[0], x.raise[1] + y.raise[1]],
                    lower: [x.lower[0] + y.lower[0], x.lower[1] + y.lower[1]],
                })
            }
            _ => None,
        };
        TwoModeOperator { cutoffs: self.cutoffs, matrix, recipe }
    }
}

// ---------------------------------------------------------------------------
// Operator–state operations
// ---------------------------------------------------------------------------

/// Result of [`apply`]: the in-window (unnormalized) image and the squared
/// norm the exact operator would have placed beyond the cutoffs.
#[derive(Debug, Clone)]
pub struct Applied {
    pub state: TwoModeState,
    /// `None` for operators without a ladder recipe (exponentials, arbitrary
    /// embedded matrices), where the overflow is not defined.
    pub truncation_loss: Option<f64>,
}

/// `O|ψ⟩` without normalization.
pub fn apply(op: &TwoModeOperator, state: &TwoModeState) -> Result<Applied> {
    check_same(op.cutoffs, state.cutoffs())?;
    let out = csr_matvec(&op.matrix, &state.to_vector());
    let image = TwoModeState::from_vector(op.cutoffs, &out)?
        .with_truncation_tolerance(state.truncation_tolerance())?;

    let truncation_loss = op.recipe.as_ref().map(|r| {
        if r.raise == [0, 0] {
            return 0.0;
        }
        // Exact action: rebuild in a window large enough that no product of
        // truncated matrices touches an edge, then measure what falls outside.
        let ext = op.cutoffs.grown(r.raise[0] + r.lower[0], r.raise[1] + r.lower[1]);
        let (padded, _) = state.resized(ext);
        let full = csr_matvec(&(r.build)(ext), &padded.to_vector());
        let c = op.cutoffs;
        full.iter()
            .enumerate()
            .filter(|(k, _)| {
                let (i, j) = ext.levels(*k);
                i >= c.a || j >= c.b
            })
            .map(|(_, v)| v.norm_sqr())
            .sum()
    });
    Ok(Applied { state: image, truncation_loss })
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(op: &TwoModeOperator, state: &TwoModeState) -> Result<C64> {
    check_same(op.cutoffs, state.cutoffs())?;
    let v = state.to_vector();
    let ov = csr_matvec(&op.matrix, &v);
    Ok(v.iter().zip(ov.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Real expectation of a Hermitian operator.
pub fn expectation_real(op: &TwoModeOperator, state: &TwoModeState) -> Result<f64> {
    let e = expectation(op, state)?;
    if e.im.abs() > EXPECTATION_IMAG_TOLERANCE * e.re.abs().max(1.0) {
        return Err(Error::Precision(format!("expectation of Hermitian operator has imaginary part {:.3e}", e.im)));
    }
    Ok(e.re)
}

/// `⟨O²⟩ − ⟨O⟩²`, computed as `‖(O − ⟨O⟩)ψ‖²` for Hermitian `O`.
pub fn variance(op: &TwoModeOperator, state: &TwoModeState) -> Result<f64> {
    if !op.is_hermitian() {
        return invalid(format!("variance needs a Hermitian operator (defect {:.3e})", op.hermiticity_defect()));
    }
    check_same(op.cutoffs, state.cutoffs())?;
    let v = state.to_vector();
    let norm = v.norm_squared();
    let mean = expectation_real(op, state)? / norm;
    let ov = csr_matvec(&op.matrix, &v);
    let dev: f64 = ov.iter().zip(v.iter()).map(|(o, x)| (o - x * mean).norm_sqr()).sum::<f64>() / norm;
    if dev < VARIANCE_FLOOR {
        return Err(Error::Precision(format!("negative variance {dev:.3e}")));
    }
    Ok(dev.max(0.0))
}

/// `‖(O − λ)ψ‖`.
pub fn eigen_residual(op: &TwoModeOperator, state: &TwoModeState, eigenvalue: C64) -> Result<f64> {
    check_same(op.cutoffs, state.cutoffs())?;
    let v = state.to_vector();
    let ov = csr_matvec(&op.matrix, &v);
    Ok(ov.iter().zip(v.iter()).map(|(o, x)| (o - x * eigenvalue).norm_sqr()).sum::<f64>().sqrt())
}
