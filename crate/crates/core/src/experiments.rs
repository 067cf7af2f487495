//! Deterministic sweep experiments over scenarios, with CSV output.
//!
//! Each sweep varies one parameter along a grid, solves every period of
//! the scenario at each grid point, and aggregates per-period metrics
//! into one [`MetricRecord`] per grid point:
//!
//! * `avg_price` — mean of the reported per-user prices over users and
//!   periods (surcharge prices in the standard model, total prices under
//!   net metering);
//! * `revenue` / `total_elastic_load` / `objective` — summed over periods;
//! * `avg_consumer_utility` — mean utility over users and periods, via
//!   the consumer-side evaluators;
//! * `demand_stddev` — mean over periods of the population standard
//!   deviation of demand across users;
//! * `sellback_total` — `Σ max(0, −Z_i)` summed over periods (zero in
//!   the standard model).
//!
//! Sweeps are pure functions of their inputs: rerunning one yields
//! byte-identical CSV. The net-metering sweeps solve only the periods
//! with nonzero generation (all periods when there is no solar at all),
//! since the retailer reverts to the standard model for the others.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::consumer;
use crate::formulations::{
    solve_period, EtaBound, Formulation, FormulationError, PricingOutcome, RetailEnv, Weights,
};
use crate::scenario::{PeriodData, Scenario};

/// Default weight grid for the revenue-weight sweep.
pub fn default_e1_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 0.5).collect()
}

/// Default spread-bound grid; straddles the saturation spread of the
/// reference scenario (which sits below 1).
pub fn default_eta_grid() -> Vec<f64> {
    (0..=15).map(|k| k as f64 * 0.1).collect()
}

/// Default serving-cost grid for the sell-back sweep.
pub fn default_e2_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.2).collect()
}

/// Aggregated metrics for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub avg_price: f64,
    pub revenue: f64,
    pub total_elastic_load: f64,
    pub avg_consumer_utility: f64,
    pub demand_stddev: f64,
    pub sellback_total: f64,
    pub objective: f64,
}

/// One sweep: grid values paired with per-grid-point records.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Name of the swept parameter (CSV header of the first column).
    pub axis: String,
    pub grid: Vec<f64>,
    pub rows: Vec<MetricRecord>,
    pub scenario_label: String,
    pub formulation: Formulation,
}

impl SweepResult {
    /// Renders the sweep as CSV (header + one line per grid point, LF
    /// line endings, full-precision decimals).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{},avg_price,revenue,total_elastic_load,avg_consumer_utility,demand_stddev,sellback_total,objective\n",
            self.axis
        ));
        for (value, row) in self.grid.iter().zip(&self.rows) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                value,
                row.avg_price,
                row.revenue,
                row.total_elastic_load,
                row.avg_consumer_utility,
                row.demand_stddev,
                row.sellback_total,
                row.objective
            ));
        }
        out
    }
}

/// Per-user prices and demands at the two ends of a spread-bound sweep,
/// showing how discrimination redistributes consumption.
#[derive(Debug, Clone, PartialEq)]
pub struct RedistributionRow {
    pub user_id: usize,
    /// The user's willingness, averaged over periods.
    pub omega: f64,
    /// Mean price over periods at the smallest / largest grid value.
    pub price_at_eta_min: f64,
    pub price_at_eta_max: f64,
    /// Total demand over periods at the smallest / largest grid value.
    pub demand_at_eta_min: f64,
    pub demand_at_eta_max: f64,
}

/// Fig.-3-style report accompanying a spread-bound sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RedistributionReport {
    pub eta_min: f64,
    pub eta_max: f64,
    pub rows: Vec<RedistributionRow>,
}

impl RedistributionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "user_id,omega,price_at_eta_min,price_at_eta_max,demand_at_eta_min,demand_at_eta_max\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.user_id,
                r.omega,
                r.price_at_eta_min,
                r.price_at_eta_max,
                r.demand_at_eta_min,
                r.demand_at_eta_max
            ));
        }
        out
    }
}

/// A spread-bound sweep plus its redistribution report.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSweep {
    pub sweep: SweepResult,
    pub redistribution: RedistributionReport,
}

/// Per-period comparison of the standard and net-metering models.
/// Price columns are total unit prices (base price included on the
/// standard side); load columns are total grid load, inelastic demand
/// included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodComparison {
    pub period: usize,
    pub normal_price: f64,
    pub nm_price: f64,
    pub normal_load: f64,
    pub nm_load: f64,
    pub normal_revenue: f64,
    pub nm_revenue: f64,
}

/// Renders a net-metering comparison as CSV.
pub fn comparison_to_csv(rows: &[PeriodComparison]) -> String {
    let mut out = String::from(
        "period,normal_price,nm_price,normal_load,nm_load,normal_revenue,nm_revenue\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.period, r.normal_price, r.nm_price, r.normal_load, r.nm_load, r.normal_revenue,
            r.nm_revenue
        ));
    }
    out
}

/// Errors from the experiment harness.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    /// A sweep grid was empty or not strictly ascending.
    Grid { reason: &'static str },
    /// A period solve failed.
    Solve(FormulationError),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Grid { reason } => write!(f, "invalid sweep grid: {reason}"),
            ExperimentError::Solve(e) => write!(f, "solve failed: {e}"),
        }
    }
}

impl core::error::Error for ExperimentError {}

impl From<FormulationError> for ExperimentError {
    fn from(e: FormulationError) -> Self {
        ExperimentError::Solve(e)
    }
}

fn check_grid(grid: &[f64]) -> Result<(), ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::Grid { reason: "grid is empty" });
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(ExperimentError::Grid { reason: "grid values must be finite" });
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Grid { reason: "grid must be strictly ascending" });
    }
    Ok(())
}

/// Metrics of a single period's outcome.
///
/// Panics if the outcome's demands are inconsistent with the consumer
/// model (negative demand, or net consumption below the inelastic
/// residual); solver outputs assembled by this crate never are.
pub fn metrics(outcome: &PricingOutcome, data: &PeriodData, base_price: f64) -> MetricRecord {
    let n = data.n_users() as f64;
    let net = outcome.formulation.is_net_metering();
    let total_load: f64 = outcome.demands.iter().sum();
    let mut utility_sum = 0.0;
    let mut sellback = 0.0;
    for i in 0..data.n_users() {
        let (w, a) = (data.omega[i], data.alpha[i]);
        if net {
            let z = outcome.demands[i];
            utility_sum += consumer::prosumer_utility(z, w, outcome.prices[i], a, data.m[i], data.s[i])
                .expect("net consumption from a valid outcome is feasible");
            sellback += (-z).max(0.0);
        } else {
            utility_sum += consumer::utility(outcome.demands[i], w, outcome.prices[i] + base_price, a)
                .expect("demand from a valid outcome is nonnegative");
        }
    }
    let mean_demand = total_load / n;
    let variance: f64 =
        outcome.demands.iter().map(|&x| (x - mean_demand) * (x - mean_demand)).sum::<f64>() / n;
    MetricRecord {
        avg_price: outcome.prices.iter().sum::<f64>() / n,
        revenue: outcome.revenue,
        total_elastic_load: total_load,
        avg_consumer_utility: utility_sum / n,
        demand_stddev: crate::math::sqrt(variance),
        sellback_total: sellback,
        objective: outcome.objective,
    }
}

/// Combines per-period records into one aggregate (sums for the
/// extensive quantities, means for the intensive ones).
fn aggregate(records: &[MetricRecord]) -> MetricRecord {
    let k = records.len() as f64;
    let mut total = MetricRecord {
        avg_price: 0.0,
        revenue: 0.0,
        total_elastic_load: 0.0,
        avg_consumer_utility: 0.0,
        demand_stddev: 0.0,
        sellback_total: 0.0,
        objective: 0.0,
    };
    for r in records {
        total.avg_price += r.avg_price / k;
        total.revenue += r.revenue;
        total.total_elastic_load += r.total_elastic_load;
        total.avg_consumer_utility += r.avg_consumer_utility / k;
        total.demand_stddev += r.demand_stddev / k;
        total.sellback_total += r.sellback_total;
        total.objective += r.objective;
    }
    total
}

/// Solves the given periods and aggregates their metrics.
fn solve_and_aggregate(
    scenario: &Scenario,
    periods: &[usize],
    formulation: Formulation,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<(MetricRecord, Vec<PricingOutcome>), ExperimentError> {
    let mut per_period = Vec::with_capacity(periods.len());
    let mut outcomes = Vec::with_capacity(periods.len());
    for &k in periods {
        let outcome = solve_period(scenario, k, formulation, weights, env)?;
        per_period.push(metrics(&outcome, &scenario.period_view(k), scenario.base_price));
        outcomes.push(outcome);
    }
    Ok((aggregate(&per_period), outcomes))
}

fn all_periods(scenario: &Scenario) -> Vec<usize> {
    (0..scenario.n_periods).collect()
}

/// Periods the net-metering model applies to: those with any generation,
/// or every period when the scenario has no solar at all.
fn solar_periods(scenario: &Scenario) -> Vec<usize> {
    let with_solar: Vec<usize> =
        (0..scenario.n_periods).filter(|&k| scenario.total_solar(k) > 0.0).collect();
    if with_solar.is_empty() {
        all_periods(scenario)
    } else {
        with_solar
    }
}

/// Sweeps the discrimination bound (Fig.-2-style) and reports the
/// per-user redistribution between the grid's two ends (Fig.-3-style).
pub fn sweep_eta(
    scenario: &Scenario,
    formulation: Formulation,
    weights: &Weights,
    eta_grid: &[f64],
) -> Result<EtaSweep, ExperimentError> {
    check_grid(eta_grid)?;
    let periods = all_periods(scenario);
    let mut rows = Vec::with_capacity(eta_grid.len());
    let mut end_outcomes: Vec<Vec<PricingOutcome>> = Vec::new();
    for (i, &eta) in eta_grid.iter().enumerate() {
        let env = RetailEnv::for_scenario(scenario, EtaBound::Bounded(eta));
        let (record, outcomes) = solve_and_aggregate(scenario, &periods, formulation, weights, &env)?;
        rows.push(record);
        if i == 0 || i == eta_grid.len() - 1 {
            end_outcomes.push(outcomes);
        }
    }
    let at_min = &end_outcomes[0];
    let at_max = end_outcomes.last().expect("grid is nonempty");
    let n_periods = periods.len() as f64;
    let rows_redis = (0..scenario.n_users)
        .map(|i| {
            let omega: f64 =
                scenario.consumers[i].omega.iter().sum::<f64>() / scenario.n_periods as f64;
            let mean_price = |outs: &[PricingOutcome]| {
                outs.iter().map(|o| o.prices[i]).sum::<f64>() / n_periods
            };
            let total_demand =
                |outs: &[PricingOutcome]| outs.iter().map(|o| o.demands[i]).sum::<f64>();
            RedistributionRow {
                user_id: i,
                omega,
                price_at_eta_min: mean_price(at_min),
                price_at_eta_max: mean_price(at_max),
                demand_at_eta_min: total_demand(at_min),
                demand_at_eta_max: total_demand(at_max),
            }
        })
        .collect();
    Ok(EtaSweep {
        sweep: SweepResult {
            axis: String::from("eta"),
            grid: eta_grid.to_vec(),
            rows,
            scenario_label: scenario.label.clone(),
            formulation,
        },
        redistribution: RedistributionReport {
            eta_min: eta_grid[0],
            eta_max: *eta_grid.last().expect("grid is nonempty"),
            rows: rows_redis,
        },
    })
}

/// Sweeps the revenue weight for each formulation (Fig.-1-style),
/// holding `e2`, `e3`, and the environment fixed.
pub fn sweep_e1(
    scenario: &Scenario,
    formulations: &[Formulation],
    base: &Weights,
    e1_grid: &[f64],
    eta: EtaBound,
) -> Result<Vec<SweepResult>, ExperimentError> {
    check_grid(e1_grid)?;
    let periods = all_periods(scenario);
    let env = RetailEnv::for_scenario(scenario, eta);
    formulations
        .iter()
        .map(|&formulation| {
            let rows = e1_grid
                .iter()
                .map(|&e1| {
                    let w = Weights { e1, ..*base };
                    w.validated().map_err(ExperimentError::from)?;
                    solve_and_aggregate(scenario, &periods, formulation, &w, &env)
                        .map(|(record, _)| record)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SweepResult {
                axis: String::from("e1"),
                grid: e1_grid.to_vec(),
                rows,
                scenario_label: scenario.label.clone(),
                formulation,
            })
        })
        .collect()
}

/// Per-period comparison of the standard model against net metering
/// (Fig.-4/5/6-style). Periods without generation are solved with the
/// standard model on both sides.
pub fn compare_net_metering(
    scenario: &Scenario,
    weights: &Weights,
    eta: EtaBound,
) -> Result<Vec<PeriodComparison>, ExperimentError> {
    let env = RetailEnv::for_scenario(scenario, eta);
    let mut rows = Vec::with_capacity(scenario.n_periods);
    for k in 0..scenario.n_periods {
        let data = scenario.period_view(k);
        let normal = solve_period(scenario, k, Formulation::F1, weights, &env)?;
        let n = data.n_users() as f64;
        let inelastic: f64 = data.m.iter().sum();
        let normal_price =
            normal.prices.iter().sum::<f64>() / n + scenario.base_price;
        let normal_load = inelastic + normal.demands.iter().sum::<f64>();
        // Revenue on the standard side includes the base-price payments
        // for the inelastic consumption, making the two sides comparable
        // bills for the same households.
        let normal_revenue = normal.revenue + scenario.base_price * inelastic;
        if scenario.total_solar(k) > 0.0 {
            let nm = solve_period(scenario, k, Formulation::F4R1, weights, &env)?;
            rows.push(PeriodComparison {
                period: k,
                normal_price,
                nm_price: nm.prices.iter().sum::<f64>() / n,
                normal_load,
                nm_load: nm.demands.iter().sum::<f64>(),
                normal_revenue,
                nm_revenue: nm.revenue,
            });
        } else {
            rows.push(PeriodComparison {
                period: k,
                normal_price,
                nm_price: normal_price,
                normal_load,
                nm_load: normal_load,
                normal_revenue,
                nm_revenue: normal_revenue,
            });
        }
    }
    Ok(rows)
}

/// Sweeps the serving-cost weight and tracks total sell-back over the
/// net-metered periods (Fig.-7-style).
pub fn sweep_e2_sellback(
    scenario: &Scenario,
    base: &Weights,
    e2_grid: &[f64],
    eta: EtaBound,
) -> Result<SweepResult, ExperimentError> {
    check_grid(e2_grid)?;
    let periods = solar_periods(scenario);
    let env = RetailEnv::for_scenario(scenario, eta);
    let rows = e2_grid
        .iter()
        .map(|&e2| {
            let w = Weights { e2, ..*base };
            w.validated().map_err(ExperimentError::from)?;
            solve_and_aggregate(scenario, &periods, Formulation::F4R1, &w, &env)
                .map(|(record, _)| record)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        axis: String::from("e2"),
        grid: e2_grid.to_vec(),
        rows,
        scenario_label: scenario.label.clone(),
        formulation: Formulation::F4R1,
    })
}

/// Sweeps the discrimination bound under net metering (Fig.-8-style).
pub fn sweep_eta_net_metering(
    scenario: &Scenario,
    weights: &Weights,
    eta_grid: &[f64],
) -> Result<SweepResult, ExperimentError> {
    check_grid(eta_grid)?;
    let periods = solar_periods(scenario);
    let rows = eta_grid
        .iter()
        .map(|&eta| {
            let env = RetailEnv::for_scenario(scenario, EtaBound::Bounded(eta));
            solve_and_aggregate(scenario, &periods, Formulation::F4R1, weights, &env)
                .map(|(record, _)| record)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        axis: String::from("eta"),
        grid: eta_grid.to_vec(),
        rows,
        scenario_label: scenario.label.clone(),
        formulation: Formulation::F4R1,
    })
}
