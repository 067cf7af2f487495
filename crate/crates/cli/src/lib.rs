//! Command-line front end for `gridprice-core`.
//!
//! The binary is `gridprice`; [`run`] is the whole program (parse argv,
//! dispatch, map errors to exit codes) so tests can drive it in-process.
//!
//! Conventions shared by all subcommands:
//!
//! * periods are indexed from 0;
//! * weights are a comma triple `e1,e2,e3` with an optional `:gamma`
//!   suffix (gamma only affects formulation f3 and defaults to
//!   `10·max(e1,e2,e3)`);
//! * spread bounds (`--eta`) are a nonnegative number or `unbounded`;
//! * grids are either `start:stop:step` or an explicit comma list;
//! * commands that write files print a one-line confirmation; commands
//!   without `--out` print the document to stdout instead;
//! * identical invocations produce byte-identical output files.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Domain errors
//! print `error[CODE]: message` to stderr with a stable `CODE` (see
//! [`CliError`]).

mod commands;
mod error;
pub mod persist;

pub use error::CliError;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gridprice_core::formulations::{EtaBound, Formulation, Weights};

/// Parses `argv` and runs the selected command, returning the process
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests land here too; clap routes them
            // to stdout and reports success.
            let code = if err.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gridprice",
    version,
    about = "Optimal discriminatory retail electricity pricing",
    after_help = "Exit codes: 0 success, 1 domain error, 2 usage error.\n\
                  Domain errors print `error[CODE]: message` with a stable CODE.\n\
                  Periods are indexed from 0."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario file (reference population, optional solar).
    Generate(GenerateArgs),
    /// Solve one period under one formulation; emit outcome JSON.
    Solve(SolveArgs),
    /// Exhaustive grid search of the exact objective (small user counts).
    Oracle(OracleArgs),
    /// Sweep the price-spread bound eta; emit a CSV table.
    SweepEta(SweepEtaArgs),
    /// Sweep the revenue weight e1 for f1, f2, f3; emit CSV tables.
    SweepE1(SweepE1Args),
    /// Compare the standard and net-metering models period by period.
    CompareNm(CompareNmArgs),
    /// Sweep the serving-cost weight e2 and track sell-back.
    SweepE2Sellback(SweepE2Args),
    /// Print the closed-form saturation spread per period.
    EtaStar(EtaStarArgs),
    /// Check a stored outcome: re-solve, fairness, KKT residuals.
    Validate(ValidateArgs),
}

/// A parsed `--grid` or `--solar-profile` value list.
#[derive(Clone, Debug)]
struct ValueList(Vec<f64>);

#[derive(Args)]
struct GenerateArgs {
    /// RNG seed. The GRIDPRICE_SEED environment variable, when set,
    /// takes precedence over this flag.
    #[arg(long, default_value_t = 19)]
    seed: u64,
    /// Number of consumers.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    users: u32,
    /// Base price added to every per-user price (use 2 for the
    /// net-metering comparison).
    #[arg(long, default_value_t = 1.0)]
    base_price: f64,
    /// Cap on per-user prices.
    #[arg(long, default_value_t = 10.0)]
    price_cap: f64,
    /// Attach solar generation, scaled by this factor.
    #[arg(long)]
    solar: Option<f64>,
    /// Per-period solar shape (comma list, one value per period; night
    /// periods must be zero). Implies --solar 1 unless given.
    #[arg(long, value_parser = parse_value_list)]
    solar_profile: Option<ValueList>,
    /// Relative per-user solar jitter, in [0, 1).
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    /// Scenario label (defaults to one derived from seed and user count).
    #[arg(long)]
    label: Option<String>,
    /// Output path; prints the document to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Period index (0-based).
    #[arg(long)]
    period: usize,
    /// One of: f1, f2, f3, f4r1, f4r2, oracle0, oracle4.
    #[arg(long, value_parser = parse_formulation)]
    formulation: Formulation,
    /// Objective weights `e1,e2,e3` with optional `:gamma` suffix.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1")]
    weights: Weights,
    /// Price-spread bound: a nonnegative number or `unbounded`.
    #[arg(long, value_parser = parse_eta, default_value = "unbounded")]
    eta: EtaBound,
    /// Write outcome JSON here and print a human summary; with no --out
    /// the JSON goes to stdout instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario file (at most 4 users).
    #[arg(long)]
    scenario: PathBuf,
    /// Period index (0-based).
    #[arg(long)]
    period: usize,
    /// Price-grid resolution.
    #[arg(long, default_value_t = gridprice_core::formulations::DEFAULT_GRID_STEP)]
    grid: f64,
    /// Search the net-metering objective instead of the standard one.
    #[arg(long)]
    net: bool,
    /// Objective weights `e1,e2,e3` with optional `:gamma` suffix.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1")]
    weights: Weights,
    /// Price-spread bound: a nonnegative number or `unbounded`.
    #[arg(long, value_parser = parse_eta, default_value = "unbounded")]
    eta: EtaBound,
    /// Write outcome JSON here and print a human summary; with no --out
    /// the JSON goes to stdout instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepEtaArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// f1, f2, f3, or oracle0 sweep all periods of the standard model;
    /// f4r1 sweeps the net-metering model over the solar periods.
    #[arg(long, value_parser = parse_formulation, default_value = "f1")]
    formulation: Formulation,
    /// Objective weights; default 1,0,1 (f4r1: 1,0,0).
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
    /// Eta grid, `start:stop:step` or comma list; default 0:1.5:0.1.
    #[arg(long, value_parser = parse_value_list)]
    grid: Option<ValueList>,
    /// Sweep CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-user redistribution report (standard model
    /// only) comparing the grid's two endpoints.
    #[arg(long)]
    redistribution: Option<PathBuf>,
}

#[derive(Args)]
struct SweepE1Args {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Weights for the fixed slots; the e1 slot is overridden by the
    /// grid. Default 1,1,1.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1")]
    weights: Weights,
    /// Price-spread bound; default 0 (uniform pricing).
    #[arg(long, value_parser = parse_eta, default_value = "0")]
    eta: EtaBound,
    /// e1 grid, `start:stop:step` or comma list; default 0.5:5:0.5.
    #[arg(long, value_parser = parse_value_list)]
    grid: Option<ValueList>,
    /// Output path; tables are written as `<stem>-f1.csv`,
    /// `<stem>-f2.csv`, `<stem>-f3.csv` next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareNmArgs {
    /// Scenario file (generate with --solar for a meaningful
    /// comparison).
    #[arg(long)]
    scenario: PathBuf,
    /// Objective weights. The default keeps a small e2 so prices stay
    /// interior: with e2 = 0 the uniform price hits its lower bound,
    /// and with e2 near 1 both sides pin at the willingness cap, so
    /// either extreme hides the net-metering gap this command measures.
    #[arg(long, value_parser = parse_weights, default_value = "1,0.05,1")]
    weights: Weights,
    /// Price-spread bound; default 0 (uniform pricing).
    #[arg(long, value_parser = parse_eta, default_value = "0")]
    eta: EtaBound,
    /// Comparison CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepE2Args {
    /// Scenario file (generate with --solar; sell-back is zero without
    /// generation).
    #[arg(long)]
    scenario: PathBuf,
    /// Weights for the fixed slots; the e2 slot is overridden by the
    /// grid. Default 1,1,1.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1")]
    weights: Weights,
    /// Price-spread bound; default 0 (uniform pricing).
    #[arg(long, value_parser = parse_eta, default_value = "0")]
    eta: EtaBound,
    /// e2 grid, `start:stop:step` or comma list; default 0:2:0.2.
    #[arg(long, value_parser = parse_value_list)]
    grid: Option<ValueList>,
    /// Sweep CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EtaStarArgs {
    /// Scenario file (consumers must share one comfort curvature).
    #[arg(long)]
    scenario: PathBuf,
    /// Objective weights.
    #[arg(long, value_parser = parse_weights, default_value = "1,1,1")]
    weights: Weights,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario the outcome was solved on.
    #[arg(long)]
    scenario: PathBuf,
    /// Stored outcome file to check.
    #[arg(long)]
    outcome: PathBuf,
    /// Tolerance for the re-solve comparison and the fairness check.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Tolerance for the KKT residuals of the fresh solve.
    #[arg(long, default_value_t = 1e-6)]
    kkt_tol: f64,
}

/// Parses a formulation tag.
pub fn parse_formulation(s: &str) -> Result<Formulation, String> {
    match s.to_ascii_lowercase().as_str() {
        "f1" => Ok(Formulation::F1),
        "f2" => Ok(Formulation::F2),
        "f3" => Ok(Formulation::F3),
        "f4r1" => Ok(Formulation::F4R1),
        "f4r2" => Ok(Formulation::F4R2),
        "oracle0" => Ok(Formulation::Oracle0),
        "oracle4" => Ok(Formulation::Oracle4),
        other => Err(format!(
            "unknown formulation `{other}` (expected f1, f2, f3, f4r1, f4r2, oracle0, oracle4)"
        )),
    }
}

/// Parses `e1,e2,e3` with an optional `:gamma` suffix.
pub fn parse_weights(s: &str) -> Result<Weights, String> {
    let (triple, gamma) = match s.split_once(':') {
        Some((t, g)) => (t, Some(g)),
        None => (s, None),
    };
    let parts: Vec<&str> = triple.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected `e1,e2,e3` (optionally `:gamma`), got `{s}`"));
    }
    let mut vals = [0.0f64; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    let weights = Weights::new(vals[0], vals[1], vals[2]).map_err(|e| e.to_string())?;
    match gamma {
        Some(g) => {
            let g: f64 = g.trim().parse().map_err(|_| format!("`{g}` is not a number"))?;
            weights.with_gamma(g).map_err(|e| e.to_string())
        }
        None => Ok(weights),
    }
}

/// Parses a spread bound: nonnegative number or `unbounded`.
pub fn parse_eta(s: &str) -> Result<EtaBound, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("unbounded") || t.eq_ignore_ascii_case("inf") {
        return Ok(EtaBound::Unbounded);
    }
    let v: f64 = t.parse().map_err(|_| format!("`{s}` is not a number or `unbounded`"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("spread bound must be nonnegative and finite, got `{s}`"));
    }
    Ok(EtaBound::Bounded(v))
}

/// Parses `start:stop:step` or a comma list into an ascending grid.
fn parse_value_list(s: &str) -> Result<ValueList, String> {
    const MAX_POINTS: usize = 10_001;
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected `start:stop:step`, got `{s}`"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
            return Err(format!("range `{s}` must have stop >= start and step > 0"));
        }
        if (stop - start) / step >= MAX_POINTS as f64 {
            return Err(format!("range `{s}` has too many points (max {MAX_POINTS})"));
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + f64::from(k) * step;
            if v > stop + step * 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".to_string());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("grid values must be finite".to_string());
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grid must be strictly ascending".to_string());
    }
    Ok(ValueList(values))
}
