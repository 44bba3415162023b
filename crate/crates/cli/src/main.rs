//! `ens`: distributions, entropy grids, criteria reports and self-checks for
//! entangled number states.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ens_core::coherent::{
    coherent_cutoffs, coherent_state_series_with, default_series_order, CoherentLabel, SERIES_TAIL,
};
use ens_core::criteria::criteria_report;
use ens_core::ens::{cutoff_policy, ens_state_in, tmsv_in, EnsLabel};
use ens_core::fock::{Cutoffs, TwoModeState};
use ens_core::reports::{
    criteria_json, distribution_csv, distribution_json, distribution_meta, distribution_series, distribution_svg,
    entropy_csv, entropy_grid, entropy_json, entropy_meta, entropy_svg, fig1_series, state_dump_json, Meta,
    ENTROPY_GRID_LIMIT, FIG1_OFFSET_STEP,
};
use ens_core::verify::{self, Suite};
use ens_core::{Error, C64, DEFAULT_TRUNCATION_TOLERANCE};
use serde_json::{json, Value};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ens", version, about = "Entangled number states of two bosonic modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form Schmidt coefficients C_m of |N_A, N_B; xi>.
    Distribution(DistributionArgs),
    /// Entanglement entropy over the grid (N_A, N_B) in [0, n_max]^2.
    EntropyGrid(EntropyArgs),
    /// Duan, variance and partial-transpose report for one state.
    Criteria(CriteriaArgs),
    /// Run the numbered self-checks; exits 1 if any fails.
    Verify(VerifyArgs),
    /// Dump a state's Fock amplitudes as JSON.
    StateDump(StateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
struct Output {
    /// Output format; each command documents its default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistributionArgs {
    #[arg(long, default_value_t = 0.7)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    na: usize,
    /// One or more comma-separated values.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    nb: Vec<usize>,
    /// Last Schmidt index; defaults to the cutoff policy.
    #[arg(long)]
    m_max: Option<usize>,
    /// xi = 0.7, N_A = 120, N_B = 0..4; the SVG shifts curve N_B up by 0.02 N_B.
    #[arg(long)]
    fig1: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long, default_value_t = 0.7)]
    xi: f64,
    #[arg(long, default_value_t = ENTROPY_GRID_LIMIT)]
    n_max: usize,
    /// xi = 0.7, n_max = 10.
    #[arg(long)]
    fig2: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// `ens N_A N_B XI`, `tmsv XI`, `product N M` or
    /// `coherent XI RE_ALPHA IM_ALPHA RE_BETA IM_BETA`.
    #[arg(required = true, num_args = 1.., allow_negative_numbers = true, value_name = "STATE")]
    state: Vec<String>,
    /// Square Fock cutoff overriding the default window.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Truncation tolerance (squared norm allowed past the cutoff).
    #[arg(long, default_value_t = DEFAULT_TRUNCATION_TOLERANCE)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CriteriaArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Parameter of the criteria; defaults to the state's own xi.
    #[arg(long)]
    xi_test: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum, default_value = "fast")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `json` for a machine-readable report; plain text otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            Error::Truncation { .. } | Error::Precision(_) | Error::Resource(_) => EXIT_RESOURCE,
        };
        Self { code, message: e.to_string() }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Distribution(a) => distribution(a),
        Command::EntropyGrid(a) => entropy(a),
        Command::Criteria(a) => criteria(a),
        Command::Verify(a) => run_verify(a),
        Command::StateDump(a) => state_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure { code: EXIT_RESOURCE, message: format!("{}: {e}", path.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn distribution(a: DistributionArgs) -> Outcome {
    let format = a.output.format.unwrap_or(Format::Csv);
    let (series, config, offset) = if a.fig1 {
        let config = json!({ "preset": "fig1", "xi": 0.7, "na": 120, "nb": [0, 1, 2, 3, 4], "format": format_name(format) });
        (fig1_series()?, config, FIG1_OFFSET_STEP)
    } else {
        let series = a
            .nb
            .iter()
            .map(|&nb| distribution_series(&EnsLabel::new(a.na, nb, a.xi)?, a.m_max))
            .collect::<ens_core::Result<Vec<_>>>()?;
        let config = json!({ "xi": a.xi, "na": a.na, "nb": a.nb, "m_max": a.m_max, "format": format_name(format) });
        (series, config, 0.0)
    };
    let meta = distribution_meta(&series, config);
    let text = match format {
        Format::Csv => distribution_csv(&series, &meta),
        Format::Json => distribution_json(&series, &meta),
        Format::Svg => distribution_svg(&series, &meta, offset),
    };
    emit(&a.output.out, &text)
}

fn entropy(a: EntropyArgs) -> Outcome {
    let format = a.output.format.unwrap_or(Format::Csv);
    let (xi, n_max) = if a.fig2 { (0.7, ENTROPY_GRID_LIMIT) } else { (a.xi, a.n_max) };
    let grid = entropy_grid(xi, n_max)?;
    let mut config = json!({ "xi": xi, "n_max": n_max, "format": format_name(format) });
    if a.fig2 {
        config["preset"] = json!("fig2");
    }
    let meta = entropy_meta(&grid, config);
    let text = match format {
        Format::Csv => entropy_csv(&grid, &meta),
        Format::Json => entropy_json(&grid, &meta),
        Format::Svg => entropy_svg(&grid, &meta),
    };
    emit(&a.output.out, &text)
}

/// A parsed state specification.
#[derive(Debug, Clone, PartialEq)]
enum StateSpec {
    Ens(EnsLabel),
    Tmsv(f64),
    Product(usize, usize),
    Coherent(CoherentLabel),
}

fn parse_num<T: FromStr>(what: &str, s: &str) -> std::result::Result<T, Failure> {
    s.parse().map_err(|_| Failure::usage(format!("cannot parse {what} from '{s}'")))
}

fn parse_spec(words: &[String]) -> std::result::Result<StateSpec, Failure> {
    let arity = |n: usize, form: &str| {
        if words.len() == n + 1 {
            Ok(())
        } else {
            Err(Failure::usage(format!("expected `{form}`")))
        }
    };
    match words[0].as_str() {
        "ens" => {
            arity(3, "ens N_A N_B XI")?;
            let label = EnsLabel::new(
                parse_num("N_A", &words[1])?,
                parse_num("N_B", &words[2])?,
                parse_num("xi", &words[3])?,
            )?;
            Ok(StateSpec::Ens(label))
        }
        "tmsv" => {
            arity(1, "tmsv XI")?;
            let xi: f64 = parse_num("xi", &words[1])?;
            EnsLabel::new(0, 0, xi)?;
            Ok(StateSpec::Tmsv(xi))
        }
        "product" => {
            arity(2, "product N M")?;
            Ok(StateSpec::Product(parse_num("N", &words[1])?, parse_num("M", &words[2])?))
        }
        "coherent" => {
            arity(5, "coherent XI RE_ALPHA IM_ALPHA RE_BETA IM_BETA")?;
            let part = |i: usize| parse_num::<f64>("amplitude", &words[i]);
            let alpha = C64::new(part(2)?, part(3)?);
            let beta = C64::new(part(4)?, part(5)?);
            Ok(StateSpec::Coherent(CoherentLabel::new(alpha, beta, parse_num("xi", &words[1])?)?))
        }
        other => Err(Failure::usage(format!("unknown state kind '{other}' (ens, tmsv, product, coherent)"))),
    }
}

impl StateSpec {
    fn xi(&self) -> Option<f64> {
        match self {
            StateSpec::Ens(l) => Some(l.xi),
            StateSpec::Tmsv(xi) => Some(*xi),
            StateSpec::Product(..) => None,
            StateSpec::Coherent(l) => Some(l.xi),
        }
    }

    fn config(&self) -> Value {
        match self {
            StateSpec::Ens(l) => json!({ "kind": "ens", "na": l.n_a, "nb": l.n_b, "xi": l.xi }),
            StateSpec::Tmsv(xi) => json!({ "kind": "tmsv", "xi": xi }),
            StateSpec::Product(n, m) => json!({ "kind": "product", "n": n, "m": m }),
            StateSpec::Coherent(l) => json!({
                "kind": "coherent",
                "alpha": [l.alpha.re, l.alpha.im],
                "beta": [l.beta.re, l.beta.im],
                "xi": l.xi,
            }),
        }
    }

    fn build(&self, cutoff: Option<usize>, tolerance: f64) -> ens_core::Result<TwoModeState> {
        let square = |d: usize| Cutoffs::square(d);
        match self {
            StateSpec::Ens(l) => {
                let c = match cutoff {
                    Some(d) => square(d)?,
                    None => cutoff_policy(l),
                };
                ens_state_in(l, c, tolerance)
            }
            StateSpec::Tmsv(xi) => {
                let c = match cutoff {
                    Some(d) => square(d)?,
                    None => cutoff_policy(&EnsLabel::new(0, 0, *xi)?),
                };
                tmsv_in(*xi, c, tolerance)
            }
            StateSpec::Product(n, m) => TwoModeState::fock(square(cutoff.unwrap_or(*n.max(m) + 1))?, *n, *m),
            StateSpec::Coherent(l) => {
                let c = match cutoff {
                    Some(d) => square(d)?,
                    None => coherent_cutoffs(l),
                };
                coherent_state_series_with(l, c, default_series_order(l, SERIES_TAIL), tolerance)
            }
        }
    }

    fn label(&self) -> Option<&EnsLabel> {
        match self {
            StateSpec::Ens(l) => Some(l),
            _ => None,
        }
    }
}

fn state_config(spec: &StateSpec, args: &StateArgs) -> Value {
    json!({ "state": spec.config(), "cutoff": args.cutoff, "tolerance": args.tolerance })
}

fn require_json(output: &Output) -> Outcome {
    match output.format {
        None | Some(Format::Json) => Ok(()),
        Some(f) => Err(Failure::usage(format!("this command only writes json, not {}", format_name(f)))),
    }
}

fn state_meta(command: &str, config: Value, state: &TwoModeState) -> Meta {
    let c = state.cutoffs();
    Meta::new(command, config).with_cutoffs([format!("{}x{}", c.a, c.b)], state.truncation_loss())
}

fn criteria(a: CriteriaArgs) -> Outcome {
    require_json(&a.state.output)?;
    let spec = parse_spec(&a.state.state)?;
    let xi = a
        .xi_test
        .or(spec.xi())
        .ok_or_else(|| Failure::usage("product states carry no xi; pass --xi-test"))?;
    let state = spec.build(a.state.cutoff, a.state.tolerance)?;
    let report = criteria_report(&state, xi)?;
    let mut config = state_config(&spec, &a.state);
    config["xi_test"] = json!(xi);
    let c = report.provenance.clone();
    let meta = Meta::new("criteria", config).with_cutoffs([format!("{}x{}", c.cutoff_a, c.cutoff_b)], c.truncation_loss);
    emit(&a.state.output.out, &(criteria_json(&report, &meta) + "\n"))
}

fn state_dump(a: StateArgs) -> Outcome {
    require_json(&a.output)?;
    let spec = parse_spec(&a.state)?;
    let state = spec.build(a.cutoff, a.tolerance)?;
    let meta = state_meta("state-dump", state_config(&spec, &a), &state);
    emit(&a.output.out, &(state_dump_json(&state, &meta, spec.label())? + "\n"))
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let suite = match a.suite {
        SuiteArg::Fast => Suite::Fast,
        SuiteArg::Full => Suite::Full,
    };
    let as_json = match a.format {
        None => false,
        Some(Format::Json) => true,
        Some(f) => return Err(Failure::usage(format!("verify writes text or json, not {}", format_name(f)))),
    };
    let report = verify::run(suite, a.seed)?;
    let body = if as_json { report.to_json() + "\n" } else { report.to_text() };
    emit(&a.out, &body)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_INVARIANT, message: "one or more checks failed".into() })
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}
