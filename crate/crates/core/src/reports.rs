//! Data products behind the command-line tool: Schmidt distributions,
//! entropy grids, criteria reports and state dumps, as CSV, JSON or SVG text.
//!
//! Every output starts with a [`Meta`] block (tool version, config echo,
//! cutoffs, truncation loss). Nothing time-dependent is written, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::criteria::CriteriaReport;
use crate::ens::{closed_form_schmidt, default_m_max, photon_number_moments, EnsLabel, SchmidtSpectrum};
use crate::entanglement::{entropy_from_closed_form, monotonicity_findings, ConjectureFinding};
use crate::error::{invalid, Result};
use crate::fock::TwoModeState;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest `n_max` accepted by [`entropy_grid`].
pub const ENTROPY_GRID_LIMIT: usize = 10;
/// Vertical shift per `N_B` in the offset distribution plot.
pub const FIG1_OFFSET_STEP: f64 = 0.02;

/// Header shared by all outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: String,
    pub command: String,
    pub config: Value,
    pub cutoffs: Vec<String>,
    pub truncation_loss: f64,
}

impl Meta {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            tool: format!("ens {TOOL_VERSION}"),
            command: command.to_string(),
            config,
            cutoffs: Vec::new(),
            truncation_loss: 0.0,
        }
    }

    pub fn with_cutoffs(mut self, cutoffs: impl IntoIterator<Item = String>, truncation_loss: f64) -> Self {
        self.cutoffs = cutoffs.into_iter().collect();
        self.truncation_loss = truncation_loss;
        self
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("tool: {}", self.tool),
            format!("command: {}", self.command),
            format!("config: {}", self.config),
            format!("cutoffs: {}", self.cutoffs.join(" ")),
            format!("truncation_loss: {:e}", self.truncation_loss),
        ]
    }

    /// `# key: value` lines.
    pub fn csv_header(&self) -> String {
        self.lines().into_iter().map(|l| format!("# {l}\n")).collect()
    }

    fn svg_comment(&self) -> String {
        let body: String = self.lines().into_iter().map(|l| format!("  {}\n", l.replace("--", "- -"))).collect();
        format!("<!--\n{body}-->\n")
    }
}

// ---------------------------------------------------------------------------
// Schmidt distributions
// ---------------------------------------------------------------------------

/// Closed-form spectrum of one label with its moment checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSeries {
    pub label: EnsLabel,
    pub spectrum: SchmidtSpectrum,
    /// `1 − Σ C_m²` over the emitted range.
    pub truncation_loss: f64,
    pub sign_changes: usize,
    pub mean: f64,
    pub variance: f64,
    pub closed_form_mean: f64,
    pub closed_form_variance: f64,
}

impl DistributionSeries {
    /// `"D_AxD_B"` implied by the emitted range.
    pub fn cutoffs_label(&self) -> String {
        let (a, b) = self.spectrum.levels(self.spectrum.coeffs.len() - 1);
        format!("{}x{}", a + 1, b + 1)
    }
}

pub fn distribution_series(label: &EnsLabel, m_max: Option<usize>) -> Result<DistributionSeries> {
    let spectrum = closed_form_schmidt(label, m_max.unwrap_or_else(|| default_m_max(label)))?;
    let (mean, variance) = spectrum.mode_b_moments();
    let (closed_form_mean, closed_form_variance) = photon_number_moments(label);
    Ok(DistributionSeries {
        label: *label,
        truncation_loss: (1.0 - spectrum.norm_sqr()).max(0.0),
        sign_changes: spectrum.sign_changes(),
        spectrum,
        mean,
        variance,
        closed_form_mean,
        closed_form_variance,
    })
}

/// `ξ = 0.7`, `N_A = 120`, `N_B = 0..=4`.
pub fn fig1_series() -> Result<Vec<DistributionSeries>> {
    (0..=4).map(|nb| distribution_series(&EnsLabel::new(120, nb, 0.7)?, None)).collect()
}

pub fn distribution_meta(series: &[DistributionSeries], config: Value) -> Meta {
    let loss = series.iter().map(|s| s.truncation_loss).fold(0.0, f64::max);
    Meta::new("distribution", config).with_cutoffs(series.iter().map(|s| s.cutoffs_label()), loss)
}

/// Long-format CSV: `N_A,N_B,xi,m,n_A,n_B,C_m,C_m_squared`.
pub fn distribution_csv(series: &[DistributionSeries], meta: &Meta) -> String {
    let mut out = meta.csv_header();
    out.push_str("N_A,N_B,xi,m,n_A,n_B,C_m,C_m_squared\n");
    for s in series {
        for (m, c) in s.spectrum.coeffs.iter().enumerate() {
            let (na, nb) = s.spectrum.levels(m);
            let _ = writeln!(out, "{},{},{},{m},{na},{nb},{c:e},{:e}", s.label.n_a, s.label.n_b, s.label.xi, c * c);
        }
    }
    out
}

pub fn distribution_json(series: &[DistributionSeries], meta: &Meta) -> String {
    let body = json!({ "meta": meta, "series": series });
    serde_json::to_string_pretty(&body).expect("distribution serializes")
}

/// Line plot of `|C_m|²` against `m`. Each curve is lifted by
/// `offset_step · N_B` on screen only.
pub fn distribution_svg(series: &[DistributionSeries], meta: &Meta, offset_step: f64) -> String {
    let curves: Vec<Curve> = series
        .iter()
        .map(|s| Curve {
            name: format!("N_A={} N_B={}", s.label.n_a, s.label.n_b),
            points: s
                .spectrum
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| (m as f64, c * c + offset_step * s.label.n_b as f64))
                .collect(),
        })
        .collect();
    let title = match series.first() {
        Some(s) => format!("Squared Schmidt coefficients, xi = {}", s.label.xi),
        None => "Squared Schmidt coefficients".to_string(),
    };
    let ylabel = if offset_step > 0.0 { format!("|C_m|^2 + {offset_step}*N_B") } else { "|C_m|^2".to_string() };
    line_plot(&title, "m", &ylabel, &curves, meta)
}

// ---------------------------------------------------------------------------
// Entropy grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyGrid {
    pub xi: f64,
    pub n_max: usize,
    /// `entropy[N_A][N_B]` in bits.
    pub entropy: Vec<Vec<f64>>,
    /// `max |E(i,j) − E(j,i)|`.
    pub asymmetry: f64,
    pub findings: Vec<ConjectureFinding>,
    /// `ξ` values used for the monotonicity comparisons.
    pub conjecture_xis: Vec<f64>,
}

/// Full `(N_A, N_B) ∈ [0, n_max]²` grid from the closed form, plus the
/// monotonicity findings over `{0.5, 0.7, ξ}`.
pub fn entropy_grid(xi: f64, n_max: usize) -> Result<EntropyGrid> {
    if n_max > ENTROPY_GRID_LIMIT {
        return invalid(format!("n_max {n_max} exceeds grid limit {ENTROPY_GRID_LIMIT}"));
    }
    let mut entropy = vec![vec![0.0; n_max + 1]; n_max + 1];
    for (na, row) in entropy.iter_mut().enumerate() {
        for (nb, e) in row.iter_mut().enumerate() {
            *e = entropy_from_closed_form(&EnsLabel::new(na, nb, xi)?)?;
        }
    }
    let mut asymmetry: f64 = 0.0;
    for i in 0..=n_max {
        for j in 0..=n_max {
            asymmetry = asymmetry.max((entropy[i][j] - entropy[j][i]).abs());
        }
    }
    let mut conjecture_xis = vec![0.5, 0.7, xi];
    conjecture_xis.sort_by(f64::total_cmp);
    conjecture_xis.dedup();
    let findings = monotonicity_findings(&conjecture_xis, n_max)?;
    Ok(EntropyGrid { xi, n_max, entropy, asymmetry, findings, conjecture_xis })
}

pub fn entropy_meta(grid: &EntropyGrid, config: Value) -> Meta {
    let mut worst = String::new();
    let mut size = 0;
    for na in 0..=grid.n_max {
        for nb in 0..=grid.n_max {
            if let Ok(l) = EnsLabel::new(na, nb, grid.xi) {
                let m = default_m_max(&l);
                if m > size {
                    size = m;
                    worst = format!("m_max={m}@({na},{nb})");
                }
            }
        }
    }
    Meta::new("entropy-grid", config).with_cutoffs([worst], 0.0)
}

/// CSV columns `N_A,N_B,xi,entropy_bits`.
pub fn entropy_csv(grid: &EntropyGrid, meta: &Meta) -> String {
    let mut out = meta.csv_header();
    for line in monotonicity_summary(&grid.findings).lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("N_A,N_B,xi,entropy_bits\n");
    for (na, row) in grid.entropy.iter().enumerate() {
        for (nb, e) in row.iter().enumerate() {
            let _ = writeln!(out, "{na},{nb},{},{e}", grid.xi);
        }
    }
    out
}

pub fn entropy_json(grid: &EntropyGrid, meta: &Meta) -> String {
    serde_json::to_string_pretty(&json!({ "meta": meta, "grid": grid })).expect("grid serializes")
}

/// One line per conjecture: holds / comparisons and the first violations.
pub fn monotonicity_summary(findings: &[ConjectureFinding]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = write!(
            out,
            "{:?}: {}/{} comparisons hold ({:.6})",
            f.conjecture,
            f.holds,
            f.comparisons,
            f.fraction()
        );
        if !f.violations.is_empty() {
            let shown: Vec<String> =
                f.violations.iter().take(5).map(|(a, b, x)| format!("({a},{b},{x})")).collect();
            let _ = write!(out, "; violations at {}", shown.join(" "));
            if f.violations.len() > 5 {
                let _ = write!(out, " and {} more", f.violations.len() - 5);
            }
        }
        out.push('\n');
    }
    out
}

/// Heatmap of the grid with `N_A` across and `N_B` up.
pub fn entropy_svg(grid: &EntropyGrid, meta: &Meta) -> String {
    let n = grid.n_max + 1;
    let cell = 40.0;
    let (left, top) = (60.0, 50.0);
    let width = left + cell * n as f64 + 120.0;
    let height = top + cell * n as f64 + 60.0;
    let max = grid.entropy.iter().flatten().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut s = svg_open(width, height, meta);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="25" text-anchor="middle" font-size="15">Entanglement entropy (bits), xi = {}</text>"#,
        width / 2.0,
        grid.xi
    );
    for (na, row) in grid.entropy.iter().enumerate() {
        for (nb, e) in row.iter().enumerate() {
            let x = left + cell * na as f64;
            let y = top + cell * (n - 1 - nb) as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{}"><title>N_A={na} N_B={nb}: {e:.5}</title></rect>"#,
                ramp(e / max)
            );
        }
    }
    for k in 0..n {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{k}</text>"#,
            left + cell * (k as f64 + 0.5),
            top + cell * n as f64 + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{k}</text>"#,
            left - 6.0,
            top + cell * ((n - 1 - k) as f64 + 0.6)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">N_A</text>"#,
        left + cell * n as f64 / 2.0,
        top + cell * n as f64 + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {:.1})">N_B</text>"#,
        top + cell * n as f64 / 2.0,
        top + cell * n as f64 / 2.0
    );
    // Colour bar.
    let bar_x = left + cell * n as f64 + 30.0;
    let bar_h = cell * n as f64;
    for k in 0..50 {
        let f = k as f64 / 49.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x:.1}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            top + bar_h * (1.0 - f) - bar_h / 50.0,
            bar_h / 50.0 + 0.5,
            ramp(f)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11">{max:.3}</text>"#, bar_x + 25.0, top + 10.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11">0</text>"#, bar_x + 25.0, top + bar_h);
    s.push_str("</svg>\n");
    s
}

// ---------------------------------------------------------------------------
// Criteria and state dumps
// ---------------------------------------------------------------------------

pub fn criteria_json(report: &CriteriaReport, meta: &Meta) -> String {
    let mut v = serde_json::to_value(report).expect("report serializes");
    v["meta"] = serde_json::to_value(meta).expect("meta serializes");
    serde_json::to_string_pretty(&v).expect("report serializes")
}

/// The state's JSON form with a `meta` block and, for entangled number
/// states, the closed-form spectrum's node count.
pub fn state_dump_json(state: &TwoModeState, meta: &Meta, label: Option<&EnsLabel>) -> Result<String> {
    let state_value: Value = serde_json::from_str(&state.to_json()).expect("state JSON parses");
    let mut v = json!({ "meta": meta, "state": state_value });
    if let Some(l) = label {
        let spec = closed_form_schmidt(l, default_m_max(l))?;
        v["label"] = serde_json::to_value(l).expect("label serializes");
        v["sign_changes"] = json!(spec.sign_changes());
    }
    Ok(serde_json::to_string_pretty(&v).expect("dump serializes"))
}

// ---------------------------------------------------------------------------
// SVG primitives
// ---------------------------------------------------------------------------

struct Curve {
    name: String,
    points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn svg_open(width: f64, height: f64, meta: &Meta) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&meta.svg_comment());
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    s
}

/// Blue to yellow through green.
fn ramp(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let x = f * (stops.len() - 1) as f64;
    let i = (x.floor() as usize).min(stops.len() - 2);
    let t = x - i as f64;
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    let (a, b) = (stops[i], stops[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|k| k * mag).find(|s| span / s <= count as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn line_plot(title: &str, xlabel: &str, ylabel: &str, curves: &[Curve], meta: &Meta) -> String {
    let (width, height) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pw = width - left - right;
    let ph = height - top - bottom;
    let all = curves.iter().flat_map(|c| c.points.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let y1 = if y1 > 0.0 { y1 * 1.05 } else { 1.0 };
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - y / y1 * ph;

    let mut s = svg_open(width, height, meta);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, width / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{t}</text>"#, top + ph + 18.0);
    }
    for t in nice_ticks(0.0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, left - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{xlabel}</text>"#,
        left + pw / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.1})">{ylabel}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, c) in curves.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = top + 15.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#, lx + 25.0, ly + 4.0, c.name);
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" { "0".to_string() } else { s.to_string() }
}
