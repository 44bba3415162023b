//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every quantity is recomputed here from first principles (ladder actions on
//! coefficient matrices, explicit partial transposes, SVD, recurrences) and
//! compared with the library.

use std::process::ExitCode;
use std::time::Instant;

use ens_core::criteria::{pt_moment_identity_check, variance_criterion};
use ens_core::ens::{
    closed_form_schmidt, cutoff_policy, default_m_max, ens_state, ens_state_in, photon_number_moments, EnsLabel,
};
use ens_core::entanglement::{entanglement_entropy, monotonicity_findings};
use ens_core::fock::{Cutoffs, TwoModeState};
use ens_core::reports::entropy_grid;
use ens_core::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type M = DMatrix<C64>;

const XIS: [f64; 4] = [0.3, 0.5, 0.7, 0.8];
const LABEL_MAX: usize = 6;
const SEED: u64 = 20_240_601;
const PAD: usize = 4;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn labels() -> Vec<EnsLabel> {
    let mut out = Vec::new();
    for xi in XIS {
        for na in 0..=LABEL_MAX {
            for nb in 0..=na {
                out.push(EnsLabel::new(na, nb, xi).unwrap());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Ladder actions on coefficient matrices psi[(n_A, n_B)]
// ---------------------------------------------------------------------------

fn pad(psi: &M, extra: usize) -> M {
    let mut out = M::zeros(psi.nrows() + extra, psi.ncols() + extra);
    out.view_mut((0, 0), (psi.nrows(), psi.ncols())).copy_from(psi);
    out
}

fn lower_a(psi: &M) -> M {
    M::from_fn(psi.nrows(), psi.ncols(), |n, m| {
        if n + 1 < psi.nrows() {
            psi[(n + 1, m)] * ((n + 1) as f64).sqrt()
        } else {
            c(0.0)
        }
    })
}

fn raise_a(psi: &M) -> M {
    M::from_fn(psi.nrows(), psi.ncols(), |n, m| if n > 0 { psi[(n - 1, m)] * (n as f64).sqrt() } else { c(0.0) })
}

fn lower_b(psi: &M) -> M {
    lower_a(&psi.transpose()).transpose()
}

fn raise_b(psi: &M) -> M {
    raise_a(&psi.transpose()).transpose()
}

fn inner(x: &M, y: &M) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(x: &M) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

fn overlap(x: &M, y: &M) -> f64 {
    let rows = x.nrows().max(y.nrows());
    let cols = x.ncols().max(y.ncols());
    let grow = |m: &M| {
        let mut o = M::zeros(rows, cols);
        o.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        o
    };
    inner(&grow(x), &grow(y)).norm_sqr() / (norm_sqr(x) * norm_sqr(y))
}

/// `(a − ξ b†)/√(1−ξ²)` and its adjoint.
fn collective_number_a(psi: &M, xi: f64) -> M {
    let s = 1.0 / (1.0 - xi * xi);
    let low = lower_a(psi) - raise_b(psi) * c(xi);
    (raise_a(&low) - lower_b(&low) * c(xi)) * c(s)
}

fn collective_number_b(psi: &M, xi: f64) -> M {
    collective_number_a(&psi.transpose(), xi).transpose()
}

fn x_a(psi: &M) -> M {
    (lower_a(psi) + raise_a(psi)) * c(std::f64::consts::FRAC_1_SQRT_2)
}

fn p_a(psi: &M) -> M {
    (lower_a(psi) - raise_a(psi)) * C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2)
}

fn x_b(psi: &M) -> M {
    x_a(&psi.transpose()).transpose()
}

fn p_b(psi: &M) -> M {
    p_a(&psi.transpose()).transpose()
}

fn omega_plus(psi: &M, xi: f64) -> M {
    x_a(psi) * c(1.0 / xi.sqrt()) - x_b(psi) * c(xi.sqrt())
}

fn omega_minus(psi: &M, xi: f64) -> M {
    p_a(psi) * c(1.0 / xi.sqrt()) + p_b(psi) * c(xi.sqrt())
}

fn omega(psi: &M, xi: f64) -> M {
    omega_plus(&omega_plus(psi, xi), xi) + omega_minus(&omega_minus(psi, xi), xi)
}

fn residual(image: &M, psi: &M, lambda: f64) -> f64 {
    norm_sqr(&(image - psi * c(lambda))).sqrt()
}

fn mean_var(op: impl Fn(&M) -> M, psi: &M) -> (f64, f64) {
    let n = norm_sqr(psi);
    let img = op(psi);
    let mean = inner(psi, &img).re / n;
    (mean, norm_sqr(&img) / n - mean * mean)
}

fn tmsv_matrix(xi: f64, d: usize) -> M {
    let mut psi = M::zeros(d, d);
    for n in 0..d {
        psi[(n, n)] = c((1.0 - xi * xi).sqrt() * xi.powi(n as i32));
    }
    psi
}

fn fock_matrix(d_a: usize, d_b: usize, n: usize, m: usize) -> M {
    let mut psi = M::zeros(d_a, d_b);
    psi[(n, m)] = c(1.0);
    psi
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

fn pure_density(psi: &M) -> M {
    let v: Vec<C64> = (0..psi.nrows()).flat_map(|n| (0..psi.ncols()).map(move |m| psi[(n, m)])).collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let d = v.len();
    M::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm)
}

/// `ρ^{T_B}` in the flattened `n·D_B + m` order.
fn transpose_b(rho: &M, d_a: usize, d_b: usize) -> M {
    M::from_fn(d_a * d_b, d_a * d_b, |i, j| {
        let (n, m) = (i / d_b, i % d_b);
        let (n2, m2) = (j / d_b, j % d_b);
        rho[(n * d_b + m2, n2 * d_b + m)]
    })
}

fn min_eig(h: &M) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Seeded samples
// ---------------------------------------------------------------------------

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
    (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> M {
    let v = gaussian_vec(rng, d * d);
    let psi = M::from_fn(d, d, |n, m| v[n * d + m]);
    let s = norm_sqr(&psi).sqrt();
    psi / c(s)
}

fn random_product(rng: &mut ChaCha8Rng, d: usize) -> M {
    let u = gaussian_vec(rng, d);
    let w = gaussian_vec(rng, d);
    let psi = M::from_fn(d, d, |n, m| u[n] * w[m]);
    let s = norm_sqr(&psi).sqrt();
    psi / c(s)
}

fn to_state(psi: &M) -> TwoModeState {
    TwoModeState::from_coeffs(psi.clone(), 1e-12).unwrap()
}

// ---------------------------------------------------------------------------
// Scalar oracles
// ---------------------------------------------------------------------------

/// `(1−p)^{N+1} p^m binom(N+m, m)` by running products.
fn nb_pmf_table(n_a: usize, p: f64, m_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut v = (1.0 - p).powi(n_a as i32 + 1);
    for m in 0..=m_max {
        if m > 0 {
            v *= p * (n_a + m) as f64 / m as f64;
        }
        out.push(v);
    }
    out
}

fn shannon_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Entropy of a geometric Schmidt distribution `(1−p)pᵐ`.
fn geometric_entropy_bits(p: f64) -> f64 {
    -(1.0 - p).log2() - p / (1.0 - p) * p.log2()
}

fn sign_changes(c: &[f64]) -> usize {
    let peak = c.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let nz: Vec<f64> = c.iter().copied().filter(|x| x.abs() > 1e-12 * peak).collect();
    nz.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

/// `exp(r(a†b† − ab))ψ` by scaled Taylor steps.
fn squeeze(psi: &M, r: f64) -> M {
    let gen = |x: &M| raise_b(&raise_a(x)) - lower_b(&lower_a(x));
    let steps = (r * psi.nrows() as f64).ceil().max(1.0) as usize;
    let h = r / steps as f64;
    let mut v = psi.clone();
    for _ in 0..steps {
        let mut term = v.clone();
        let mut acc = v.clone();
        for k in 1..60 {
            term = gen(&term) * c(h / k as f64);
            acc += &term;
            if norm_sqr(&term).sqrt() < 1e-18 * norm_sqr(&acc).sqrt() {
                break;
            }
        }
        v = acc;
    }
    v
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

struct Outcome {
    passed: bool,
    detail: String,
}

fn worst(slot: &mut (f64, String), value: f64, at: impl FnOnce() -> String) {
    if value > slot.0 || value.is_nan() {
        *slot = (value, at());
    }
}

fn tag(l: &EnsLabel) -> String {
    format!("({},{},{})", l.n_a, l.n_b, l.xi)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut w = (0.0, String::from("-"));
    for l in labels() {
        let spec = closed_form_schmidt(&l, default_m_max(&l)).unwrap();
        let mut closed: Vec<f64> = spec.coeffs.iter().map(|x| x.abs()).collect();
        closed.sort_by(|a, b| b.total_cmp(a));
        let state = ens_state(&l).unwrap();
        let mut sv: Vec<f64> = state.coeffs().clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let n = closed.len().max(sv.len());
        let d = (0..n)
            .map(|k| (closed.get(k).copied().unwrap_or(0.0) - sv.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        worst(&mut w, d, || tag(&l));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: w.0 <= 1e-9 && secs < 30.0,
        detail: format!("max | |C_m| - sigma_m | = {:.3e} at {} (<= 1e-9); {secs:.1} s (< 30 s)", w.0, w.1),
    }
}

fn eigenstates() -> Outcome {
    let mut number = (0.0, String::from("-"));
    let mut pair = (0.0, String::from("-"));
    for l in labels() {
        let psi = pad(ens_state(&l).unwrap().coeffs(), PAD);
        let ra = residual(&collective_number_a(&psi, l.xi), &psi, l.n_a as f64);
        let rb = residual(&collective_number_b(&psi, l.xi), &psi, l.n_b as f64);
        worst(&mut number, ra.max(rb), || tag(&l));
        let img = omega(&psi, l.xi) + omega(&psi, 1.0 / l.xi);
        let lambda = 2.0 * (1.0 / l.xi - l.xi) * (l.n_a + l.n_b + 1) as f64;
        worst(&mut pair, residual(&img, &psi, lambda), || tag(&l));
    }
    Outcome {
        passed: number.0 <= 1e-8 && pair.0 <= 1e-7,
        detail: format!(
            "number residual {:.3e} at {} (<= 1e-8); pair-sum residual {:.3e} at {} (<= 1e-7)",
            number.0, number.1, pair.0, pair.1
        ),
    }
}

fn duan_saturation() -> Outcome {
    let mut w = (0.0, String::from("-"));
    for xi in [0.3, 0.5, 0.7] {
        let t = tmsv_matrix(xi, 150);
        let lib = ens_core::ens::tmsv(xi, 146).unwrap();
        let (mean, _) = mean_var(|p| omega(p, xi), &t);
        worst(&mut w, (mean - (1.0 / xi - xi)).abs(), || format!("tmsv({xi})"));
        worst(&mut w, 1.0 - overlap(&t, lib.coeffs()), || format!("tmsv({xi}) vs library"));
        let vac = fock_matrix(1 + PAD, 1 + PAD, 0, 0);
        let (mean, _) = mean_var(|p| omega(p, xi), &vac);
        worst(&mut w, (mean - (1.0 / xi + xi)).abs(), || format!("vacuum, xi={xi}"));
    }
    Outcome { passed: w.0 <= 1e-8, detail: format!("max defect {:.3e} at {} (<= 1e-8)", w.0, w.1) }
}

fn variance_criterion_check() -> Outcome {
    let mut ens = (0.0, String::from("-"));
    let mut agree = (0.0, String::from("-"));
    for l in labels() {
        let state = ens_state(&l).unwrap();
        let psi = pad(state.coeffs(), PAD);
        let (_, var) = mean_var(|p| omega(p, l.xi), &psi);
        worst(&mut ens, var, || tag(&l));
        let lib = variance_criterion(&state, l.xi).unwrap().value;
        worst(&mut agree, (lib - var).abs(), || tag(&l));
    }
    let mut vac = 0.0f64;
    for xi in XIS {
        let (_, v) = mean_var(|p| omega(p, xi), &fock_matrix(1 + PAD, 1 + PAD, 0, 0));
        vac = vac.max((v - 4.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lowest = f64::INFINITY;
    for k in 0..50 {
        let xi = XIS[k % XIS.len()];
        let psi = pad(&random_product(&mut rng, 6), PAD);
        let (_, v) = mean_var(|p| omega(p, xi), &psi);
        lowest = lowest.min(v);
    }
    Outcome {
        passed: ens.0 <= 1e-7 && vac <= 1e-8 && lowest >= 4.0 - 1e-8 && agree.0 <= 1e-7,
        detail: format!(
            "ENS max {:.3e} at {} (<= 1e-7); vacuum |v-4| {vac:.3e} (<= 1e-8); 50 products min {lowest:.6} (>= 4 - 1e-8); library agreement {:.3e}",
            ens.0, ens.1, agree.0
        ),
    }
}

fn npt() -> Outcome {
    let d = 20;
    let t = tmsv_matrix(0.5, d);
    let e = ens_state_in(&EnsLabel::new(1, 0, 0.5).unwrap(), Cutoffs::square(d).unwrap(), 1e-9).unwrap();
    let t_min = min_eig(&transpose_b(&pure_density(&t), d, d));
    let e_min = min_eig(&transpose_b(&pure_density(e.coeffs()), d, d));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut lowest = f64::INFINITY;
    for _ in 0..20 {
        let p = random_product(&mut rng, 5);
        lowest = lowest.min(min_eig(&transpose_b(&pure_density(&p), 5, 5)));
    }
    Outcome {
        passed: t_min < -1e-4 && e_min < -1e-4 && lowest >= -1e-8,
        detail: format!(
            "tmsv(0.5) {t_min:.6}, ens(1,0,0.5) {e_min:.6} (< -1e-4); 20 products min {lowest:.3e} (>= -1e-8)"
        ),
    }
}

fn pt_moment_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut two_path = (0.0, String::from("-"));
    let mut library = (0.0, String::from("-"));
    for k in 0..50 {
        let psi = random_matrix(&mut rng, 8);
        let big = pad(&psi, PAD);
        let d = big.nrows();
        let pt = transpose_b(&pure_density(&big), d, d);
        for xi in [0.3, 0.7] {
            // N = Â†Â as a dense matrix, column by column.
            let n_op = M::from_fn(d * d, d * d, |i, j| {
                let img = collective_number_a(&fock_matrix(d, d, j / d, j % d), xi);
                img[(i / d, i % d)]
            });
            let first = (&pt * &n_op).trace().re;
            let second = (&pt * &n_op * &n_op).trace().re;
            let s = 1.0 - xi * xi;
            let lhs = s * s * (second - first * first);
            let lowered = |p: &M| lower_a(p) - lower_b(p) * c(xi);
            let raised = |p: &M| raise_a(p) - raise_b(p) * c(xi);
            let (_, var) = mean_var(|p| raised(&lowered(p)), &big);
            let rhs = var + xi * xi;
            worst(&mut two_path, (lhs - rhs).abs(), || format!("state {k}, xi={xi}"));
            let lib = pt_moment_identity_check(&to_state(&psi), xi).unwrap();
            let gap = lib.defect.max((lib.lhs - lhs).abs()).max((lib.rhs - rhs).abs());
            worst(&mut library, gap, || format!("state {k}, xi={xi}"));
        }
    }
    Outcome {
        passed: two_path.0 <= 1e-8 && library.0 <= 1e-8,
        detail: format!(
            "two-path defect {:.3e} at {} (<= 1e-8); library defect/agreement {:.3e} at {}",
            two_path.0, two_path.1, library.0, library.1
        ),
    }
}

fn moments() -> Outcome {
    let mut w = (0.0, String::from("-"));
    let mut state_w = (0.0, String::from("-"));
    let mut nb = (0.0, String::from("-"));
    for l in labels() {
        let spec = closed_form_schmidt(&l, default_m_max(&l)).unwrap();
        let (mut mean, mut second) = (0.0, 0.0);
        for (m, x) in spec.coeffs.iter().enumerate() {
            let nb_level = spec.levels(m).1 as f64;
            mean += x * x * nb_level;
            second += x * x * nb_level * nb_level;
        }
        let var = second - mean * mean;
        let (cm, cv) = photon_number_moments(&l);
        worst(&mut w, (mean - cm).abs().max((var - cv).abs()), || tag(&l));
        let psi = pad(ens_state(&l).unwrap().coeffs(), PAD);
        let (sm, sv) = mean_var(|p| raise_b(&lower_b(p)), &psi);
        worst(&mut state_w, (sm - cm).abs().max((sv - cv).abs()), || tag(&l));
        if l.n_b == 0 {
            let pmf = nb_pmf_table(l.n_a, l.xi * l.xi, spec.coeffs.len() - 1);
            for (x, p) in spec.coeffs.iter().zip(&pmf) {
                worst(&mut nb, (x * x - p).abs(), || tag(&l));
            }
        }
    }
    Outcome {
        passed: w.0 <= 1e-8 && state_w.0 <= 1e-8 && nb.0 <= 1e-10,
        detail: format!(
            "distribution moments {:.3e} at {} (<= 1e-8); ladder-state moments {:.3e} at {}; NB pmf {:.3e} at {} (<= 1e-10)",
            w.0, w.1, state_w.0, state_w.1, nb.0, nb.1
        ),
    }
}

fn entropy() -> Outcome {
    let oracle = geometric_entropy_bits(0.49);
    let t = ens_core::ens::tmsv(0.7, 200).unwrap();
    let lib = entanglement_entropy(&t);
    let svd = shannon_bits(t.coeffs().clone().svd(false, false).singular_values.iter().map(|s| s * s));
    let grid = entropy_grid(0.7, 10).unwrap();
    let mut asym = 0.0f64;
    for i in 0..=10 {
        for j in 0..=10 {
            asym = asym.max((grid.entropy[i][j] - grid.entropy[j][i]).abs());
        }
    }
    for f in monotonicity_findings(&[0.5, 0.7], 10).unwrap() {
        println!("[NOTE] conjecture {:?}: {}/{} comparisons hold", f.conjecture, f.holds, f.comparisons);
    }
    Outcome {
        passed: (oracle - 1.96022).abs() <= 1e-4
            && (lib - 1.96022).abs() <= 1e-4
            && (lib - oracle).abs() <= 1e-9
            && (svd - oracle).abs() <= 1e-9
            && asym <= 1e-9,
        detail: format!(
            "tmsv(0.7) {lib:.6} bits, geometric oracle {oracle:.6}, SVD {svd:.6} (1.96022 +- 1e-4); grid asymmetry {asym:.3e} (<= 1e-9)"
        ),
    }
}

fn fig1() -> Outcome {
    let start = Instant::now();
    let mut nodes = Vec::new();
    let mut nodes_ok = true;
    let mut nb = 0.0f64;
    for k in 0..=4 {
        let l = EnsLabel::new(120, k, 0.7).unwrap();
        let spec = closed_form_schmidt(&l, default_m_max(&l)).unwrap();
        let s = sign_changes(&spec.coeffs);
        nodes_ok &= s == k;
        nodes.push(s);
        if k == 0 {
            let pmf = nb_pmf_table(120, 0.49, spec.coeffs.len() - 1);
            nb = spec.coeffs.iter().zip(&pmf).map(|(x, p)| (x * x - p).abs()).fold(0.0, f64::max);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: nodes_ok && nb <= 1e-10 && secs < 120.0,
        detail: format!("sign changes for N_B=0..4: {nodes:?}; NB law {nb:.3e} (<= 1e-10); {secs:.1} s (< 120 s)"),
    }
}

fn limits() -> Outcome {
    let mut fock = 1.0f64;
    for na in 0..=LABEL_MAX {
        for nb in 0..=LABEL_MAX {
            let s = ens_state(&EnsLabel::new(na, nb, 1e-8).unwrap()).unwrap();
            let c = s.cutoffs();
            fock = fock.min(overlap(s.coeffs(), &fock_matrix(c.a, c.b, na, nb)));
        }
    }
    let mut squeezer = 1.0f64;
    for xi in [0.3, 0.5, 0.7] {
        for n in 0..=3 {
            let l = EnsLabel::new(n, 0, xi).unwrap();
            let c = cutoff_policy(&l);
            let img = squeeze(&fock_matrix(c.a, c.b, n, 0), xi.atanh());
            squeezer = squeezer.min(overlap(&img, ens_state(&l).unwrap().coeffs()));
        }
    }
    Outcome {
        passed: fock >= 1.0 - 1e-5 && squeezer >= 1.0 - 1e-8,
        detail: format!("min Fock overlap {fock:.12} (>= 1 - 1e-5); min squeezer overlap {squeezer:.12} (>= 1 - 1e-8)"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form Schmidt coefficients vs SVD", oracle_equivalence),
        ("collective number eigenstates and pair-sum eigenvalue", eigenstates),
        ("total-noise saturation", duan_saturation),
        ("variance criterion", variance_criterion_check),
        ("negative partial transpose", npt),
        ("partial-transpose moment identity", pt_moment_identity),
        ("photon-number moments and negative binomial law", moments),
        ("entanglement entropy", entropy),
        ("Schmidt distribution nodes at N_A = 120", fig1),
        ("small-squeezing and squeezer limits", limits),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
