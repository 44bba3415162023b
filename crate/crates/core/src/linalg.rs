//! Small dense/sparse helpers shared by the physics modules.
//!
//! Hermitian eigenproblems and exponentials are split along the connected
//! components of the matrix sparsity graph before any dense work is done.
//! Ladder-built operators conserve quantities such as `n_A − n_B`, so the
//! blocks are usually much smaller than the full flattened dimension.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::DENSE_DIM_LIMIT;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Groups `0..n` into the connected components of the undirected graph `edges`.
/// Components are returned sorted, each with ascending indices.
pub fn connected_blocks(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
            parent[hi] = lo;
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

pub fn csr_from_triplets(
    nrows: usize,
    ncols: usize,
    triplets: impl IntoIterator<Item = (usize, usize, C64)>,
) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(nrows, ncols);
    for (i, j, v) in triplets {
        if v != C64::new(0.0, 0.0) {
            coo.push(i, j, v);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn csr_matvec(m: &CsrMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    assert_eq!(m.ncols(), v.len(), "matrix-vector dimension mismatch");
    let mut out = DVector::zeros(m.nrows());
    for (i, row) in m.row_iter().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (&j, &x) in row.col_indices().iter().zip(row.values()) {
            acc += x * v[j];
        }
        out[i] = acc;
    }
    out
}

pub fn csr_adjoint(m: &CsrMatrix<C64>) -> CsrMatrix<C64> {
    let t = m.transpose();
    let (offsets, cols, values) = t.disassemble();
    let values = values.into_iter().map(|v| v.conj()).collect();
    CsrMatrix::try_from_csr_data(m.ncols(), m.nrows(), offsets, cols, values)
        .expect("transpose keeps a valid CSR pattern")
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn csr_to_dense(m: &CsrMatrix<C64>) -> DMatrix<C64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

fn dense_blocks(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != C64::new(0.0, 0.0) {
                edges.push((i, j));
            }
        }
    }
    connected_blocks(n, edges)
}

fn sub_block(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

fn check_block(len: usize) -> Result<()> {
    if len > DENSE_DIM_LIMIT {
        return Err(Error::Resource(format!(
            "dense block of dimension {len} exceeds limit {DENSE_DIM_LIMIT}"
        )));
    }
    Ok(())
}

fn block_eigenvalues(block: DMatrix<C64>) -> Vec<f64> {
    if block.nrows() == 1 {
        return vec![block[(0, 0)].re];
    }
    SymmetricEigen::new(block).eigenvalues.iter().copied().collect()
}

/// Eigenvalues (ascending) of a Hermitian matrix, computed block by block.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let mut out = Vec::with_capacity(m.nrows());
    for idx in dense_blocks(m) {
        check_block(idx.len())?;
        out.extend(block_eigenvalues(sub_block(m, &idx)));
    }
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Eigenvalues (ascending) of a Hermitian matrix given as triplets.
/// Only the connected blocks are ever densified.
pub fn hermitian_eigenvalues_sparse(n: usize, triplets: &[(usize, usize, C64)]) -> Result<Vec<f64>> {
    let blocks = connected_blocks(n, triplets.iter().map(|&(i, j, _)| (i, j)));
    let mut slot = vec![(0usize, 0usize); n];
    for (b, idx) in blocks.iter().enumerate() {
        check_block(idx.len())?;
        for (k, &i) in idx.iter().enumerate() {
            slot[i] = (b, k);
        }
    }
    let mut dense: Vec<DMatrix<C64>> = blocks.iter().map(|idx| DMatrix::zeros(idx.len(), idx.len())).collect();
    for &(i, j, v) in triplets {
        let (b, r) = slot[i];
        let (_, c) = slot[j];
        dense[b][(r, c)] += v;
    }
    let mut out: Vec<f64> = dense.into_iter().flat_map(block_eigenvalues).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// `exp(K)` for an anti-Hermitian sparse `K`, via the eigen-decomposition of
/// the Hermitian `−iK` on each connected block. The result is unitary up to
/// rounding regardless of truncation.
pub fn expm_anti_hermitian(k: &CsrMatrix<C64>) -> Result<CsrMatrix<C64>> {
    let n = k.nrows();
    assert_eq!(n, k.ncols(), "exponential of a non-square matrix");
    let blocks = connected_blocks(n, k.triplet_iter().map(|(i, j, _)| (i, j)));
    let mut slot = vec![(0usize, 0usize); n];
    for (b, idx) in blocks.iter().enumerate() {
        check_block(idx.len())?;
        for (r, &i) in idx.iter().enumerate() {
            slot[i] = (b, r);
        }
    }
    let minus_i = C64::new(0.0, -1.0);
    let mut herm: Vec<DMatrix<C64>> = blocks.iter().map(|idx| DMatrix::zeros(idx.len(), idx.len())).collect();
    for (i, j, v) in k.triplet_iter() {
        let (b, r) = slot[i];
        let (_, c) = slot[j];
        herm[b][(r, c)] += minus_i * *v;
    }
    let mut triplets = Vec::new();
    for (idx, h) in blocks.iter().zip(herm) {
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            idx.len(),
            eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
        ));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        for c in 0..idx.len() {
            for r in 0..idx.len() {
                triplets.push((idx[r], idx[c], u[(r, c)]));
            }
        }
    }
    Ok(csr_from_triplets(n, n, triplets))
}

/// `exp(K) v` for sparse `K` by a scaled Taylor series: `K` is split into
/// `⌈‖K‖_∞⌉` steps and each step is summed until terms fall below 1e-17
/// relative to the partial sum. No dense matrix is formed.
pub fn expm_action(k: &CsrMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    let n = k.nrows();
    assert_eq!(n, k.ncols(), "exponential of a non-square matrix");
    let mut row_sums = vec![0.0; n];
    for (i, _, x) in k.triplet_iter() {
        row_sums[i] += x.norm();
    }
    let norm = row_sums.iter().copied().fold(0.0, f64::max);
    let steps = norm.ceil().max(1.0) as usize;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        let mut small = 0;
        for j in 1..=200 {
            term = csr_matvec(k, &term) / C64::new((steps * j) as f64, 0.0);
            acc += &term;
            if term.norm() <= 1e-17 * acc.norm() {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        out = acc;
    }
    out
}
