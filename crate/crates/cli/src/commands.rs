//! Subcommand implementations.
//!
//! Documents (JSON, CSV, tables) go to stdout or to `--out`;
//! "wrote <path>" confirmations go to stderr so stdout stays parseable.

use std::fs;
use std::path::{Path, PathBuf};

use gridprice_core::experiments::{
    self, comparison_to_csv, default_e1_grid, default_e2_grid, default_eta_grid,
};
use gridprice_core::formulations::{
    build_f1, build_f2, build_f3, build_f4, eta_star, eta_star_net_metering, oracle_f0, oracle_f4,
    solve_period, EtaBound, F4Variant, Formulation, FormulationError, LoweredQp, PricingOutcome,
    RetailEnv, Weights, DEFAULT_GRID_STEP,
};
use gridprice_core::qp;
use gridprice_core::scenario::{
    attach_solar, generate_reference, Scenario, DEFAULT_SOLAR_PROFILE,
};

use crate::error::CliError;
use crate::persist::{self, OutcomeFile};
use crate::{
    Command, CompareNmArgs, EtaStarArgs, GenerateArgs, OracleArgs, SolveArgs, SweepE1Args,
    SweepE2Args, SweepEtaArgs, ValidateArgs,
};

pub(crate) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Oracle(args) => oracle(args),
        Command::SweepEta(args) => sweep_eta(args),
        Command::SweepE1(args) => sweep_e1(args),
        Command::CompareNm(args) => compare_nm(args),
        Command::SweepE2Sellback(args) => sweep_e2(args),
        Command::EtaStar(args) => eta_star_cmd(args),
        Command::Validate(args) => validate(args),
    }
}

/// Writes `text` to `out`, or prints it to stdout when `out` is absent.
fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::io(path, e))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The generation seed: GRIDPRICE_SEED when set, otherwise the flag.
fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var("GRIDPRICE_SEED") {
        Ok(v) => v.trim().parse::<u64>().map_err(|_| {
            CliError::usage(format!("GRIDPRICE_SEED must be an unsigned integer, got `{v}`"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(CliError::usage("GRIDPRICE_SEED is not valid unicode"))
        }
    }
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let seed = effective_seed(args.seed)?;
    let mut scenario = generate_reference(seed, args.users as usize);
    scenario.base_price = args.base_price;
    scenario.price_cap = args.price_cap;
    if args.solar.is_some() || args.solar_profile.is_some() {
        let scale = args.solar.unwrap_or(1.0);
        let profile: Vec<f64> = match &args.solar_profile {
            Some(list) => list.0.clone(),
            None => DEFAULT_SOLAR_PROFILE.to_vec(),
        };
        scenario = attach_solar(&scenario, &profile, scale, args.jitter)?;
    }
    if let Some(label) = args.label {
        scenario.label = label;
    }
    let text = persist::scenario_to_json(&scenario)?;
    emit(&text, args.out.as_deref())
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let env = RetailEnv::for_scenario(&scenario, args.eta);
    let outcome = solve_period(&scenario, args.period, args.formulation, &args.weights, &env)?;
    let grid_step = matches!(args.formulation, Formulation::Oracle0 | Formulation::Oracle4)
        .then_some(DEFAULT_GRID_STEP);
    report_outcome(&scenario, args.period, &args.weights, args.eta, grid_step, &outcome, args.out.as_deref())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let env = RetailEnv::for_scenario(&scenario, args.eta);
    let outcome = if args.net {
        oracle_f4(&scenario, args.period, &args.weights, &env, args.grid)?
    } else {
        oracle_f0(&scenario, args.period, &args.weights, &env, args.grid)?
    };
    report_outcome(
        &scenario,
        args.period,
        &args.weights,
        args.eta,
        Some(args.grid),
        &outcome,
        args.out.as_deref(),
    )
}

/// Emits a solve result: JSON to `--out` plus a human summary on stdout,
/// or the JSON alone to stdout when no `--out` was given.
fn report_outcome(
    scenario: &Scenario,
    period: usize,
    weights: &Weights,
    eta: EtaBound,
    grid_step: Option<f64>,
    outcome: &PricingOutcome,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = OutcomeFile::new(outcome, scenario, period, weights, eta, grid_step);
    match out {
        Some(path) => {
            persist::save_outcome(&file, path)?;
            print!("{}", human_summary(scenario, period, outcome, eta));
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", file.to_json()?),
    }
    Ok(())
}

fn human_summary(
    scenario: &Scenario,
    period: usize,
    outcome: &PricingOutcome,
    eta: EtaBound,
) -> String {
    let data = scenario.period_view(period);
    let eta_text = match eta {
        EtaBound::Bounded(v) => format!("{v}"),
        EtaBound::Unbounded => "unbounded".to_string(),
    };
    let mut s = format!(
        "scenario {} — period {period}, formulation {}, eta {eta_text}, p_b {}, cap {}\n",
        scenario.label, outcome.formulation, scenario.base_price, scenario.price_cap
    );
    s.push_str("  user     omega     price    demand\n");
    for i in 0..data.n_users() {
        s.push_str(&format!(
            "{:>6}  {:>8.4}  {:>8.4}  {:>8.4}\n",
            i, data.omega[i], outcome.prices[i], outcome.demands[i]
        ));
    }
    s.push_str(&format!(
        "revenue {:.6}, cost term {:.6}, welfare penalty {:.6}, objective {:.6}\n",
        outcome.revenue, outcome.cost_term, outcome.welfare_penalty, outcome.objective
    ));
    s
}

fn sweep_eta(args: SweepEtaArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let grid = match args.grid {
        Some(list) => list.0,
        None => default_eta_grid(),
    };
    match args.formulation {
        Formulation::F4R1 => {
            if args.redistribution.is_some() {
                return Err(CliError::usage(
                    "--redistribution is only available for the standard-model sweep",
                ));
            }
            let weights = match args.weights {
                Some(w) => w,
                None => Weights::new(1.0, 0.0, 0.0)?,
            };
            let sweep = experiments::sweep_eta_net_metering(&scenario, &weights, &grid)?;
            emit(&sweep.to_csv(), args.out.as_deref())
        }
        Formulation::F4R2 | Formulation::Oracle4 => Err(CliError::domain(
            "UNSUPPORTED",
            format!(
                "sweep-eta supports f1, f2, f3, oracle0 and (net metering) f4r1; got {}",
                args.formulation
            ),
        )),
        formulation => {
            let weights = match args.weights {
                Some(w) => w,
                None => Weights::new(1.0, 0.0, 1.0)?,
            };
            let result = experiments::sweep_eta(&scenario, formulation, &weights, &grid)?;
            if let Some(path) = &args.redistribution {
                fs::write(path, result.redistribution.to_csv())
                    .map_err(|e| CliError::io(path, e))?;
                eprintln!("wrote {}", path.display());
            }
            emit(&result.sweep.to_csv(), args.out.as_deref())
        }
    }
}

/// `fig.csv` + `f1` → `fig-f1.csv` (next to the original path).
fn suffixed_path(base: &Path, tag: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}-{tag}.{ext}"))
}

fn sweep_e1(args: SweepE1Args) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let grid = match args.grid {
        Some(list) => list.0,
        None => default_e1_grid(),
    };
    let results = experiments::sweep_e1(
        &scenario,
        &[Formulation::F1, Formulation::F2, Formulation::F3],
        &args.weights,
        &grid,
        args.eta,
    )?;
    for result in &results {
        let path = suffixed_path(&args.out, &result.formulation.to_string());
        fs::write(&path, result.to_csv()).map_err(|e| CliError::io(&path, e))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn compare_nm(args: CompareNmArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let rows = experiments::compare_net_metering(&scenario, &args.weights, args.eta)?;
    emit(&comparison_to_csv(&rows), args.out.as_deref())
}

fn sweep_e2(args: SweepE2Args) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let grid = match args.grid {
        Some(list) => list.0,
        None => default_e2_grid(),
    };
    let sweep = experiments::sweep_e2_sellback(&scenario, &args.weights, &grid, args.eta)?;
    emit(&sweep.to_csv(), args.out.as_deref())
}

fn eta_star_cmd(args: EtaStarArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let alpha = scenario.consumers[0].alpha;
    if scenario.consumers.iter().any(|c| c.alpha != alpha) {
        return Err(CliError::domain(
            "UNSUPPORTED",
            "closed-form spreads need a shared comfort curvature across consumers",
        ));
    }
    let mut out = String::from("period,eta_star,eta_star_nm\n");
    for k in 0..scenario.n_periods {
        let data = scenario.period_view(k);
        let normal = eta_star(&data.omega, &args.weights, alpha)?;
        let nm = eta_star_net_metering(&data.omega, &data.s, &args.weights, alpha)?;
        out.push_str(&format!("{k},{normal},{nm}\n"));
    }
    print!("{out}");
    Ok(())
}

/// Lowers a QP formulation; `None` for the grid-search formulations.
fn lower(
    formulation: Formulation,
    data: &gridprice_core::scenario::PeriodData,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<Option<LoweredQp>, FormulationError> {
    Ok(Some(match formulation {
        Formulation::F1 => build_f1(data, weights, env)?,
        Formulation::F2 => build_f2(data, weights, env)?,
        Formulation::F3 => build_f3(data, weights, env)?,
        Formulation::F4R1 => build_f4(data, weights, env, F4Variant::Relaxed1)?,
        Formulation::F4R2 => build_f4(data, weights, env, F4Variant::Relaxed2)?,
        Formulation::Oracle0 | Formulation::Oracle4 => return Ok(None),
    }))
}

/// Counts willingness-monotonicity violations: a strictly higher
/// willingness must not get a lower price (beyond `tol`), and equal
/// willingness must get equal prices (within `tol`).
fn fairness_violations(prices: &[f64], omega: &[f64], tol: f64) -> usize {
    let n = prices.len();
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            if omega[i] > omega[j] + 1e-9 && prices[i] + tol < prices[j] {
                count += 1;
            }
            if i < j && (omega[i] - omega[j]).abs() <= 1e-9 && (prices[i] - prices[j]).abs() > tol {
                count += 1;
            }
        }
    }
    count
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let scenario = persist::load_scenario(&args.scenario)?;
    let stored = persist::load_outcome(&args.outcome)?;
    if stored.context.scenario_label != scenario.label {
        return Err(CliError::domain(
            "VALIDATE_MISMATCH",
            format!(
                "outcome was solved on scenario `{}`, this file is `{}`",
                stored.context.scenario_label, scenario.label
            ),
        ));
    }
    let (formulation, weights, eta) = stored.solve_parameters()?;
    let period = stored.context.period;
    let env = RetailEnv::for_scenario(&scenario, eta);

    // Reproduce the solve and compare against the stored numbers.
    let fresh = match formulation {
        Formulation::Oracle0 | Formulation::Oracle4 => {
            let step = stored.context.grid_step.unwrap_or(DEFAULT_GRID_STEP);
            if formulation == Formulation::Oracle0 {
                oracle_f0(&scenario, period, &weights, &env, step)?
            } else {
                oracle_f4(&scenario, period, &weights, &env, step)?
            }
        }
        f => solve_period(&scenario, period, f, &weights, &env)?,
    };
    if stored.prices.len() != fresh.prices.len() || stored.demands.len() != fresh.demands.len() {
        return Err(CliError::domain(
            "VALIDATE_MISMATCH",
            format!(
                "stored vectors have {} prices / {} demands, fresh solve has {} / {}",
                stored.prices.len(),
                stored.demands.len(),
                fresh.prices.len(),
                fresh.demands.len()
            ),
        ));
    }
    let price_delta = max_abs_diff(&stored.prices, &fresh.prices);
    let demand_delta = max_abs_diff(&stored.demands, &fresh.demands);
    let objective_delta = (stored.objective - fresh.objective).abs();
    println!(
        "recompute: max price delta {price_delta:.3e}, max demand delta {demand_delta:.3e}, objective delta {objective_delta:.3e}"
    );
    if price_delta > args.tol
        || demand_delta > args.tol
        || objective_delta > args.tol * (1.0 + fresh.objective.abs())
    {
        return Err(CliError::domain(
            "VALIDATE_MISMATCH",
            format!("stored outcome disagrees with a fresh solve beyond tolerance {}", args.tol),
        ));
    }

    // Willingness-monotone pricing on the stored prices. Formulation f3
    // carries no monotonicity guarantee, so for it violations are
    // reported but not fatal.
    let data = scenario.period_view(period);
    let violations = fairness_violations(&stored.prices, &data.omega, args.tol);
    println!("fairness: {violations} violation(s) of willingness-monotone pricing");
    if violations > 0 && formulation != Formulation::F3 {
        return Err(CliError::domain(
            "VALIDATE_FAIRNESS",
            format!("{violations} monotonicity violation(s) at tolerance {}", args.tol),
        ));
    }

    // KKT residuals of a fresh solve of the lowered problem.
    match lower(formulation, &data, &weights, &env)? {
        Some(lowered) => {
            let solution = qp::solve_qp(&lowered.problem, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER)
                .map_err(FormulationError::from)?;
            let residuals = qp::kkt_residuals(&lowered.problem, &solution)
                .map_err(FormulationError::from)?;
            println!(
                "kkt: stationarity {:.3e}, primal {:.3e}, complementarity {:.3e}",
                residuals.stationarity, residuals.primal, residuals.complementarity
            );
            if !(residuals.stationarity <= args.kkt_tol
                && residuals.primal <= args.kkt_tol
                && residuals.complementarity <= args.kkt_tol)
            {
                return Err(CliError::domain(
                    "VALIDATE_KKT",
                    format!("KKT residuals exceed tolerance {}", args.kkt_tol),
                ));
            }
        }
        None => println!("kkt: skipped (grid-search outcome)"),
    }
    println!("ok");
    Ok(())
}
