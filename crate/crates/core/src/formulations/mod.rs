//! The retailer's pricing problems.
//!
//! The base problem (here called F0) picks per-user prices `p_i ∈ [0, P]`
//! with pairwise spread at most `η`, maximizing
//!
//! ```text
//!   e₁·Σ(p_i + p_b)·x_i − e₂·(Σx_i)² − e₃·Σ(x_i − ω_i/α_i)²
//! ```
//!
//! where `x_i = max(0, (ω_i − p_b − p_i)/α_i)` is the consumer best
//! response. The max makes F0 non-convex; this module lowers its convex
//! reformulations to [`crate::qp::QpProblem`]s:
//!
//! * **F1** substitutes the linear demand rule and keeps `x_i ≥ 0` as the
//!   hard constraint `p_i + p_b ≤ ω_i` (prices only);
//! * **F2** drops the hard constraint and adds slack `t_i ≤ 0`,
//!   `t_i ≤ x_i(p)` with `+Σt_i` in the objective (prices + slacks),
//!   recovering demand afterwards from the best response;
//! * **F3** keeps `(p, x)` jointly with bounds `0 ≤ x_i ≤ ω_i/α_i` and a
//!   quadratic consistency penalty `γ·Σ(x_i − x_i(p))²`;
//! * **F4** is the net-metering variant over prosumers (see
//!   [`crate::consumer::prosumer_best_response`]): revenue `Σ P_i·Z_i`,
//!   total net purchase `ΣZ_i ≥ 0`, lowered in two relaxations that mirror
//!   F1 and F2.
//!
//! The spread bound is lowered with two auxiliary variables `u, ℓ` and
//! rows `p_i ≤ u`, `ℓ ≤ p_i`, `u − ℓ ≤ η`, which keeps the row count
//! linear in the user count.
//!
//! For small instances [`oracle_f0`]/[`oracle_f4`] search a price grid
//! against the exact best response, providing an independent check on the
//! whole lowering pipeline. Closed forms for the unconstrained optimum
//! ([`closed_form_prices`]) and the saturation spread ([`eta_star`],
//! [`eta_star_net_metering`]) cross-validate the KKT algebra.

use alloc::vec::Vec;
use core::fmt;

use crate::consumer;
use crate::qp::{self, QpError, SolveStatus};
use crate::scenario::{PeriodData, Scenario};

mod build;
mod closed_form;
mod oracle;

pub use build::{build_f1, build_f2, build_f3, build_f4, F4Variant, LoweredQp, VarLayout};
pub use closed_form::{closed_form_prices, eta_star, eta_star_net_metering};
pub use oracle::{oracle_f0, oracle_f4, DEFAULT_GRID_STEP};

/// Which pricing problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    F1,
    F2,
    F3,
    /// Net metering, F1-style relaxation.
    F4R1,
    /// Net metering, F2-style relaxation.
    F4R2,
    /// Grid search on the exact (non-convex) objective.
    Oracle0,
    /// Grid search on the exact net-metering objective.
    Oracle4,
}

impl Formulation {
    /// True for the net-metering problems (prices are total prices,
    /// demands are net consumptions).
    pub fn is_net_metering(self) -> bool {
        matches!(self, Formulation::F4R1 | Formulation::F4R2 | Formulation::Oracle4)
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Formulation::F1 => "f1",
            Formulation::F2 => "f2",
            Formulation::F3 => "f3",
            Formulation::F4R1 => "f4r1",
            Formulation::F4R2 => "f4r2",
            Formulation::Oracle0 => "oracle0",
            Formulation::Oracle4 => "oracle4",
        };
        f.write_str(s)
    }
}

/// Objective weights. `gamma` only matters for F3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Revenue weight.
    pub e1: f64,
    /// Serving-cost weight.
    pub e2: f64,
    /// Welfare-penalty weight.
    pub e3: f64,
    /// F3 consistency-penalty weight.
    pub gamma: f64,
}

impl Weights {
    /// Weights with the default `gamma = 10·max(e1, e2, e3)`.
    pub fn new(e1: f64, e2: f64, e3: f64) -> Result<Self, FormulationError> {
        let gamma = 10.0 * e1.max(e2).max(e3);
        Weights { e1, e2, e3, gamma }.validated()
    }

    /// Same weights with an explicit `gamma`.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self, FormulationError> {
        self.gamma = gamma;
        self.validated()
    }

    pub(crate) fn validated(self) -> Result<Self, FormulationError> {
        let all = [self.e1, self.e2, self.e3, self.gamma];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FormulationError::InvalidWeights {
                reason: "weights must be finite and nonnegative",
            });
        }
        if self.e1 == 0.0 && self.e2 == 0.0 && self.e3 == 0.0 {
            return Err(FormulationError::InvalidWeights {
                reason: "at least one of e1, e2, e3 must be positive",
            });
        }
        Ok(self)
    }
}

/// Price-spread policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaBound {
    /// Any two prices may differ by at most this much.
    Bounded(f64),
    /// No discrimination limit.
    Unbounded,
}

impl EtaBound {
    /// The numeric bound, infinite when unbounded.
    pub fn limit(self) -> f64 {
        match self {
            EtaBound::Bounded(eta) => eta,
            EtaBound::Unbounded => f64::INFINITY,
        }
    }
}

/// Retailer-side environment for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetailEnv {
    /// Base price added to every per-user price (ignored by the
    /// net-metering problems, whose prices are total).
    pub base_price: f64,
    /// Upper bound on each per-user price.
    pub price_cap: f64,
    pub eta: EtaBound,
}

impl RetailEnv {
    pub fn new(base_price: f64, price_cap: f64, eta: EtaBound) -> Result<Self, FormulationError> {
        let env = RetailEnv { base_price, price_cap, eta };
        env.validate()?;
        Ok(env)
    }

    /// Environment taken from a scenario's constants.
    pub fn for_scenario(scenario: &Scenario, eta: EtaBound) -> Self {
        RetailEnv { base_price: scenario.base_price, price_cap: scenario.price_cap, eta }
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        let eta_ok = match self.eta {
            EtaBound::Bounded(eta) => eta.is_finite() && eta >= 0.0,
            EtaBound::Unbounded => true,
        };
        if !(self.base_price >= 0.0 && self.base_price.is_finite())
            || !(self.price_cap > 0.0 && self.price_cap.is_finite())
            || !eta_ok
        {
            return Err(FormulationError::InvalidEnv);
        }
        Ok(())
    }
}

/// Solved prices for one period, with the objective split into its terms.
///
/// For net-metering formulations `prices` holds the total prices `P_i` and
/// `demands` the net consumptions `Z_i` (negative entries are sell-back);
/// otherwise `prices` holds the per-user surcharges `p_i` and `demands`
/// the elastic demands `x_i`. Prices are projected onto `[0, P]` and
/// elastic demands floored at zero to wash out solver roundoff; all terms
/// are evaluated directly at the reported `(prices, demands)` point, so
/// `objective = e₁·revenue − cost_term − welfare_penalty` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingOutcome {
    pub formulation: Formulation,
    pub prices: Vec<f64>,
    pub demands: Vec<f64>,
    /// Unweighted revenue `Σ(p_i+p_b)·x_i` (or `ΣP_i·Z_i`).
    pub revenue: f64,
    /// Weighted serving cost `e₂·(Σx)²`.
    pub cost_term: f64,
    /// Weighted welfare penalty `e₃·Σ(x_i − ω_i/α_i)²` (net metering:
    /// `e₃·Σ(Z_i + s_i − m_i − ω_i/α_i)²`).
    pub welfare_penalty: f64,
    /// `e₁·revenue − cost_term − welfare_penalty`.
    pub objective: f64,
}

/// Errors from lowering or solving a pricing problem.
#[derive(Debug, Clone, PartialEq)]
pub enum FormulationError {
    /// Weights violate their invariants.
    InvalidWeights { reason: &'static str },
    /// Environment violates its invariants.
    InvalidEnv,
    /// Closed-form denominator `e₁α + e₃` is zero.
    DegenerateWeights,
    /// The base price exceeds some willingness, so `p_i ≥ 0` and
    /// `p_i + p_b ≤ ω_i` cannot both hold.
    InfeasibleEnv { min_omega: f64, p_b: f64 },
    /// Grid oracle limit: the search is exponential in the user count.
    TooManyUsers { n: usize, max: usize },
    /// Grid step must be positive and finite.
    InvalidGrid { step: f64 },
    /// Period index out of range.
    BadPeriod { period: usize, n_periods: usize },
    /// Problem validation failed inside the QP layer.
    Qp(QpError),
    /// The solver stopped without an optimality certificate.
    Solver { status: SolveStatus },
}

impl fmt::Display for FormulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationError::InvalidWeights { reason } => write!(f, "invalid weights: {reason}"),
            FormulationError::InvalidEnv => write!(f, "invalid retail environment"),
            FormulationError::DegenerateWeights => {
                write!(f, "degenerate weights: e1*alpha + e3 must be positive")
            }
            FormulationError::InfeasibleEnv { min_omega, p_b } => {
                write!(f, "base price {p_b} exceeds the smallest willingness {min_omega}")
            }
            FormulationError::TooManyUsers { n, max } => {
                write!(f, "grid oracle supports at most {max} users, got {n}")
            }
            FormulationError::InvalidGrid { step } => write!(f, "invalid grid step {step}"),
            FormulationError::BadPeriod { period, n_periods } => {
                write!(f, "period {period} out of range (scenario has {n_periods})")
            }
            FormulationError::Qp(e) => write!(f, "qp: {e}"),
            FormulationError::Solver { status } => write!(f, "solver stopped with status {status:?}"),
        }
    }
}

impl core::error::Error for FormulationError {}

impl From<QpError> for FormulationError {
    fn from(e: QpError) -> Self {
        FormulationError::Qp(e)
    }
}

/// Value of the standard objective and its terms at a given operating
/// point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub revenue: f64,
    pub cost_term: f64,
    pub welfare_penalty: f64,
    pub objective: f64,
}

/// Evaluates the standard (no-renewables) objective at `(prices, demands)`.
pub fn evaluate_standard(
    data: &PeriodData,
    weights: &Weights,
    p_b: f64,
    prices: &[f64],
    demands: &[f64],
) -> ObjectiveTerms {
    let revenue: f64 =
        prices.iter().zip(demands).map(|(&p, &x)| (p + p_b) * x).sum();
    let total: f64 = demands.iter().sum();
    let cost_term = weights.e2 * total * total;
    let welfare_penalty = weights.e3
        * demands
            .iter()
            .zip(&data.omega)
            .zip(&data.alpha)
            .map(|((&x, &w), &a)| {
                let dev = x - w / a;
                dev * dev
            })
            .sum::<f64>();
    ObjectiveTerms {
        revenue,
        cost_term,
        welfare_penalty,
        objective: weights.e1 * revenue - cost_term - welfare_penalty,
    }
}

/// Evaluates the net-metering objective at `(prices, nets)`.
pub fn evaluate_net_metering(
    data: &PeriodData,
    weights: &Weights,
    prices: &[f64],
    nets: &[f64],
) -> ObjectiveTerms {
    let revenue: f64 = prices.iter().zip(nets).map(|(&p, &z)| p * z).sum();
    let total: f64 = nets.iter().sum();
    let cost_term = weights.e2 * total * total;
    let welfare_penalty = weights.e3
        * nets
            .iter()
            .zip(data.s.iter().zip(&data.m))
            .zip(data.omega.iter().zip(&data.alpha))
            .map(|((&z, (&s, &m)), (&w, &a))| {
                let dev = z + s - m - w / a;
                dev * dev
            })
            .sum::<f64>();
    ObjectiveTerms {
        revenue,
        cost_term,
        welfare_penalty,
        objective: weights.e1 * revenue - cost_term - welfare_penalty,
    }
}

/// Lowers, solves, and assembles the outcome for one scenario period.
pub fn solve_period(
    scenario: &Scenario,
    period: usize,
    formulation: Formulation,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<PricingOutcome, FormulationError> {
    if period >= scenario.n_periods {
        return Err(FormulationError::BadPeriod { period, n_periods: scenario.n_periods });
    }
    env.validate()?;
    match formulation {
        Formulation::Oracle0 => return oracle_f0(scenario, period, weights, env, DEFAULT_GRID_STEP),
        Formulation::Oracle4 => return oracle_f4(scenario, period, weights, env, DEFAULT_GRID_STEP),
        _ => {}
    }
    let data = scenario.period_view(period);
    let lowered = match formulation {
        Formulation::F1 => build_f1(&data, weights, env)?,
        Formulation::F2 => build_f2(&data, weights, env)?,
        Formulation::F3 => build_f3(&data, weights, env)?,
        Formulation::F4R1 => build_f4(&data, weights, env, F4Variant::Relaxed1)?,
        Formulation::F4R2 => build_f4(&data, weights, env, F4Variant::Relaxed2)?,
        Formulation::Oracle0 | Formulation::Oracle4 => unreachable!("handled above"),
    };
    let sol = qp::solve_qp(&lowered.problem, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER)?;
    if sol.status != SolveStatus::Optimal {
        return Err(FormulationError::Solver { status: sol.status });
    }
    let n = data.n_users();
    let prices: Vec<f64> = sol.x[..n].iter().map(|p| p.clamp(0.0, env.price_cap)).collect();
    let demands: Vec<f64> = match formulation {
        Formulation::F1 | Formulation::F2 => prices
            .iter()
            .zip(data.omega.iter().zip(&data.alpha))
            .map(|(&p, (&w, &a))| consumer::best_response(w, p + env.base_price, a))
            .collect(),
        Formulation::F3 => {
            let off = lowered.layout.demand.expect("F3 lowers demand variables");
            sol.x[off..off + n]
                .iter()
                .zip(data.omega.iter().zip(&data.alpha))
                .map(|(&x, (&w, &a))| x.clamp(0.0, w / a))
                .collect()
        }
        Formulation::F4R1 | Formulation::F4R2 => prices
            .iter()
            .zip(0..n)
            .map(|(&p, i)| {
                consumer::prosumer_best_response(data.omega[i], p, data.alpha[i], data.m[i], data.s[i])
                    .net
            })
            .collect(),
        Formulation::Oracle0 | Formulation::Oracle4 => unreachable!("handled above"),
    };
    Ok(assemble_outcome(formulation, &data, weights, env, prices, demands))
}

/// Builds a [`PricingOutcome`] by direct evaluation at `(prices, demands)`.
pub(crate) fn assemble_outcome(
    formulation: Formulation,
    data: &PeriodData,
    weights: &Weights,
    env: &RetailEnv,
    prices: Vec<f64>,
    demands: Vec<f64>,
) -> PricingOutcome {
    let terms = if formulation.is_net_metering() {
        evaluate_net_metering(data, weights, &prices, &demands)
    } else {
        evaluate_standard(data, weights, env.base_price, &prices, &demands)
    };
    PricingOutcome {
        formulation,
        prices,
        demands,
        revenue: terms.revenue,
        cost_term: terms.cost_term,
        welfare_penalty: terms.welfare_penalty,
        objective: terms.objective,
    }
}
