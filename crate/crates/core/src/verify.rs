//! Self-check suites run by `ens verify`.
//!
//! Each check compares a closed-form result with an independent numerical
//! route at a fixed tolerance. Hard checks decide the exit status;
//! monotonicity conjectures are reported as findings only.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criteria::{
    min_eigenvalue, omega_operator, partial_transpose, pt_moment_identity_check, variance_criterion,
};
use crate::ens::{
    closed_form_schmidt, collective_number, default_m_max, ens_state, ens_state_in, negative_binomial_pmf,
    photon_number_moments, tmsv, two_mode_squeezer, EnsLabel,
};
use crate::entanglement::{entanglement_entropy, monotonicity_findings, schmidt_spectrum_svd, ConjectureFinding, DensityMatrix};
use crate::error::Result;
use crate::fock::{apply, eigen_residual, expectation_real, Cutoffs, Mode, TwoModeState};
use crate::sampling::{random_product_state, random_state};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

/// Grid sizes for one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Labels `0 ≤ N_B ≤ N_A ≤ label_max`.
    pub label_max: usize,
    pub xis: Vec<f64>,
    pub random_states: usize,
    pub product_states: usize,
    pub pt_product_states: usize,
    pub entropy_n_max: usize,
    pub fig1_n_a: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite) -> Self {
        match suite {
            Suite::Fast => Self {
                suite,
                label_max: 3,
                xis: vec![0.3, 0.7],
                random_states: 10,
                product_states: 10,
                pt_product_states: 5,
                entropy_n_max: 4,
                fig1_n_a: 30,
            },
            Suite::Full => Self {
                suite,
                label_max: 6,
                xis: vec![0.3, 0.5, 0.7, 0.8],
                random_states: 50,
                product_states: 50,
                pt_product_states: 20,
                entropy_n_max: 10,
                fig1_n_a: 120,
            },
        }
    }

    fn labels(&self) -> Result<Vec<EnsLabel>> {
        let mut out = Vec::new();
        for &xi in &self.xis {
            for na in 0..=self.label_max {
                for nb in 0..=na {
                    out.push(EnsLabel::new(na, nb, xi)?);
                }
            }
        }
        Ok(out)
    }
}

/// Outcome of one numbered check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: SuiteConfig,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub findings: Vec<ConjectureFinding>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "[{}] {:>2} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
        }
        for f in &self.findings {
            let _ = writeln!(
                out,
                "[NOTE] conjecture {:?}: {}/{} comparisons hold",
                f.conjecture, f.holds, f.comparisons
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verify report serializes")
    }
}

/// Largest value seen and where.
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self { value: 0.0, at: String::from("-") }
    }

    fn see(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() {
            self.value = value;
            self.at = at();
        }
    }
}

fn check(id: u32, name: &'static str, passed: bool, detail: String) -> Check {
    Check { id, name, passed, detail }
}

fn tag(l: &EnsLabel) -> String {
    format!("({},{},{})", l.n_a, l.n_b, l.xi)
}

/// Sorted `|C_m|` against SVD singular values.
fn oracle_equivalence(cfg: &SuiteConfig) -> Result<Check> {
    let mut worst = Worst::new();
    for l in cfg.labels()? {
        let spec = closed_form_schmidt(&l, default_m_max(&l))?;
        let mut closed: Vec<f64> = spec.coeffs.iter().map(|c| c.abs()).collect();
        closed.sort_by(|a, b| b.total_cmp(a));
        let svd = schmidt_spectrum_svd(&ens_state(&l)?);
        let n = closed.len().max(svd.len());
        let d = (0..n)
            .map(|k| (closed.get(k).copied().unwrap_or(0.0) - svd.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        worst.see(d, || tag(&l));
    }
    Ok(check(1, "closed-form Schmidt vs SVD", worst.value <= 1e-9, format!("max diff {:.3e} at {} (limit 1e-9)", worst.value, worst.at)))
}

fn eigenstates(cfg: &SuiteConfig) -> Result<Check> {
    let mut number = Worst::new();
    let mut pair = Worst::new();
    for l in cfg.labels()? {
        let s = ens_state(&l)?;
        let c = s.cutoffs();
        for (which, n) in [(Mode::A, l.n_a), (Mode::B, l.n_b)] {
            let r = eigen_residual(&collective_number(which, l.xi, c)?, &s, C64::new(n as f64, 0.0))?;
            number.see(r, || tag(&l));
        }
        let sum = &omega_operator(l.xi, c)? + &omega_operator(1.0 / l.xi, c)?;
        let lambda = 2.0 * (1.0 / l.xi - l.xi) * (l.n_a + l.n_b + 1) as f64;
        pair.see(eigen_residual(&sum, &s, C64::new(lambda, 0.0))?, || tag(&l));
    }
    Ok(check(
        2,
        "collective number and two-oscillator eigenstates",
        number.value <= 1e-8 && pair.value <= 1e-7,
        format!(
            "number residual {:.3e} at {} (limit 1e-8); pair residual {:.3e} at {} (limit 1e-7)",
            number.value, number.at, pair.value, pair.at
        ),
    ))
}

fn duan_saturation() -> Result<Check> {
    let mut worst = Worst::new();
    for xi in [0.3, 0.5, 0.7] {
        let t = tmsv(xi, 120)?;
        let v = expectation_real(&omega_operator(xi, t.cutoffs())?, &t)?;
        worst.see((v - (1.0 / xi - xi)).abs(), || format!("tmsv({xi})"));
        let vac = TwoModeState::fock(Cutoffs::square(4)?, 0, 0)?;
        let v = expectation_real(&omega_operator(xi, vac.cutoffs())?, &vac)?;
        worst.see((v - (1.0 / xi + xi)).abs(), || format!("vacuum, xi={xi}"));
    }
    Ok(check(3, "total-noise saturation", worst.value <= 1e-8, format!("max defect {:.3e} at {} (limit 1e-8)", worst.value, worst.at)))
}

fn variance_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut ens = Worst::new();
    for l in cfg.labels()? {
        ens.see(variance_criterion(&ens_state(&l)?, l.xi)?.value, || tag(&l));
    }
    let vac = TwoModeState::fock(Cutoffs::square(6)?, 0, 0)?;
    let mut vac_defect: f64 = 0.0;
    for &xi in &cfg.xis {
        vac_defect = vac_defect.max((variance_criterion(&vac, xi)?.value - 4.0).abs());
    }
    let mut lowest = f64::INFINITY;
    for k in 0..cfg.product_states {
        let s = random_product_state(Cutoffs::square(6)?, rng)?;
        let xi = cfg.xis[k % cfg.xis.len()];
        lowest = lowest.min(variance_criterion(&s, xi)?.value);
    }
    let ok = ens.value <= 1e-7 && vac_defect <= 1e-8 && lowest >= 4.0 - 1e-8;
    Ok(check(
        4,
        "variance criterion",
        ok,
        format!(
            "ENS max {:.3e} at {} (limit 1e-7); vacuum |v-4| {:.3e}; product min {:.9} over {}",
            ens.value, ens.at, vac_defect, lowest, cfg.product_states
        ),
    ))
}

fn npt_checks(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<Check> {
    let cut = Cutoffs::square(20)?;
    let dense_min = |s: &TwoModeState| -> Result<f64> { min_eigenvalue(&partial_transpose(&DensityMatrix::pure(s)?, Mode::B)?) };
    let t = dense_min(&tmsv(0.5, 20)?)?;
    let e = dense_min(&ens_state_in(&EnsLabel::new(1, 0, 0.5)?, cut, 1e-9)?)?;
    let mut lowest = f64::INFINITY;
    for _ in 0..cfg.pt_product_states {
        lowest = lowest.min(dense_min(&random_product_state(Cutoffs::square(6)?, rng)?)?);
    }
    Ok(check(
        5,
        "partial transpose",
        t < -1e-4 && e < -1e-4 && lowest >= -1e-8,
        format!("tmsv(0.5) {t:.6}; ens(1,0,0.5) {e:.6}; product min {lowest:.3e} over {}", cfg.pt_product_states),
    ))
}

fn moment_identity(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = Worst::new();
    let mut floor_ok = true;
    for k in 0..cfg.random_states {
        let s = random_state(Cutoffs::square(8)?, rng)?;
        for xi in [0.3, 0.7] {
            let r = pt_moment_identity_check(&s, xi)?;
            worst.see(r.defect, || format!("state {k}, xi={xi}"));
            floor_ok &= r.rhs >= xi * xi - 1e-8;
        }
    }
    Ok(check(
        6,
        "partial-transpose moment identity",
        worst.value <= 1e-8 && floor_ok,
        format!("max defect {:.3e} at {} over {} states (limit 1e-8)", worst.value, worst.at, cfg.random_states),
    ))
}

fn moments(cfg: &SuiteConfig) -> Result<Check> {
    let mut worst = Worst::new();
    let mut nb = Worst::new();
    for l in cfg.labels()? {
        let spec = closed_form_schmidt(&l, default_m_max(&l))?;
        let (mean, var) = spec.mode_b_moments();
        let (cm, cv) = photon_number_moments(&l);
        worst.see((mean - cm).abs().max((var - cv).abs()), || tag(&l));
        if l.n_b == 0 {
            for (m, c) in spec.coeffs.iter().enumerate() {
                nb.see((c * c - negative_binomial_pmf(l.n_a, l.xi * l.xi, m)?).abs(), || tag(&l));
            }
        }
    }
    Ok(check(
        7,
        "photon-number moments and negative binomial law",
        worst.value <= 1e-8 && nb.value <= 1e-10,
        format!("moment diff {:.3e} at {} (limit 1e-8); pmf diff {:.3e} (limit 1e-10)", worst.value, worst.at, nb.value),
    ))
}

fn entropy_checks(cfg: &SuiteConfig) -> Result<(Check, Vec<ConjectureFinding>)> {
    let e = entanglement_entropy(&tmsv(0.7, 200)?);
    let geometric = -(0.51f64).log2() - (0.49 / 0.51) * (0.49f64).log2();
    let grid = crate::reports::entropy_grid(0.7, cfg.entropy_n_max)?;
    let findings = monotonicity_findings(&[0.5, 0.7], cfg.entropy_n_max)?;
    let ok = (e - 1.96022).abs() <= 1e-4 && (e - geometric).abs() <= 1e-9 && grid.asymmetry <= 1e-9;
    Ok((
        check(
            8,
            "entanglement entropy",
            ok,
            format!("tmsv(0.7) {e:.6} bits; grid asymmetry {:.3e} (N <= {})", grid.asymmetry, cfg.entropy_n_max),
        ),
        findings,
    ))
}

fn fig1(cfg: &SuiteConfig) -> Result<Check> {
    let mut nodes = Vec::new();
    let mut ok = true;
    let mut nb_diff: f64 = 0.0;
    for nb in 0..=4 {
        let l = EnsLabel::new(cfg.fig1_n_a, nb, 0.7)?;
        let spec = closed_form_schmidt(&l, default_m_max(&l))?;
        let k = spec.sign_changes();
        ok &= k == nb;
        nodes.push(k.to_string());
        if nb == 0 {
            for (m, c) in spec.coeffs.iter().enumerate() {
                nb_diff = nb_diff.max((c * c - negative_binomial_pmf(l.n_a, 0.49, m)?).abs());
            }
        }
    }
    Ok(check(
        9,
        "Schmidt distribution nodes",
        ok && nb_diff <= 1e-10,
        format!("N_A={}, sign changes for N_B=0..4: [{}]; NB diff {nb_diff:.3e}", cfg.fig1_n_a, nodes.join(",")),
    ))
}

fn limits() -> Result<Check> {
    let mut product: f64 = 1.0;
    for (na, nb) in [(0, 0), (1, 0), (2, 3), (4, 1)] {
        let s = ens_state(&EnsLabel::new(na, nb, 1e-8)?)?;
        let f = TwoModeState::fock(s.cutoffs(), na, nb)?;
        product = product.min(s.overlap(&f));
    }
    let mut squeezer: f64 = 1.0;
    let xi = 0.5;
    for n in 0..=3 {
        let l = EnsLabel::new(n, 0, xi)?;
        let s = ens_state(&l)?;
        let u = two_mode_squeezer(l.squeezing_r(), s.cutoffs())?;
        let img = apply(&u, &TwoModeState::fock(s.cutoffs(), n, 0)?)?.state;
        squeezer = squeezer.min(img.overlap(&s));
    }
    Ok(check(
        10,
        "small-squeezing and squeezer limits",
        product >= 1.0 - 1e-5 && squeezer >= 1.0 - 1e-8,
        format!("min Fock overlap {product:.12}; min squeezer overlap {squeezer:.12}"),
    ))
}

/// Runs every check of `suite`; random states are drawn from `seed`.
pub fn run(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let cfg = SuiteConfig::new(suite);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (entropy, findings) = entropy_checks(&cfg)?;
    let checks = vec![
        oracle_equivalence(&cfg)?,
        eigenstates(&cfg)?,
        duan_saturation()?,
        variance_checks(&cfg, &mut rng)?,
        npt_checks(&cfg, &mut rng)?,
        moment_identity(&cfg, &mut rng)?,
        moments(&cfg)?,
        entropy,
        fig1(&cfg)?,
        limits()?,
    ];
    Ok(VerifyReport { config: cfg, seed, checks, findings })
}
