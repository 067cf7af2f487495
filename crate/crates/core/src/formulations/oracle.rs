//! Brute-force grid oracle for the exact, non-convex pricing problems.
//!
//! The oracle enumerates the price grid `{0, step, 2·step, …, P}` for
//! every user, filters by the spread band, plugs each candidate into the
//! *exact* best response (including its max), and keeps the best
//! objective. It shares no code with the QP lowerings, which makes it an
//! independent check of the whole convex-relaxation pipeline — at the
//! cost of exponential work in the user count, hence the small-N limit.

use alloc::vec::Vec;

use crate::consumer;
use crate::qp::SolveStatus;
use crate::scenario::Scenario;

use super::{
    assemble_outcome, Formulation, FormulationError, PricingOutcome, RetailEnv, Weights,
};

/// Default grid resolution, in currency units.
pub const DEFAULT_GRID_STEP: f64 = 0.01;

/// Largest user count the exhaustive search accepts.
pub const MAX_ORACLE_USERS: usize = 4;

/// Tolerance for the aggregate net-purchase constraint at grid points.
const NET_TOTAL_TOL: f64 = 1e-9;

/// Exhaustive search of the original pricing problem (exact best
/// response, no relaxation).
pub fn oracle_f0(
    scenario: &Scenario,
    period: usize,
    weights: &Weights,
    env: &RetailEnv,
    grid_step: f64,
) -> Result<PricingOutcome, FormulationError> {
    search(scenario, period, weights, env, grid_step, Formulation::Oracle0)
}

/// Exhaustive search of the net-metering problem (exact prosumer
/// response, hard `ΣZ ≥ 0`).
pub fn oracle_f4(
    scenario: &Scenario,
    period: usize,
    weights: &Weights,
    env: &RetailEnv,
    grid_step: f64,
) -> Result<PricingOutcome, FormulationError> {
    search(scenario, period, weights, env, grid_step, Formulation::Oracle4)
}

/// Per-user, per-grid-point contributions to the objective.
struct UserTable {
    /// Revenue term at each grid price.
    rev: Vec<f64>,
    /// Consumption (or net consumption) at each grid price.
    load: Vec<f64>,
    /// Squared welfare deviation at each grid price.
    dev: Vec<f64>,
}

fn search(
    scenario: &Scenario,
    period: usize,
    weights: &Weights,
    env: &RetailEnv,
    grid_step: f64,
    formulation: Formulation,
) -> Result<PricingOutcome, FormulationError> {
    if period >= scenario.n_periods {
        return Err(FormulationError::BadPeriod { period, n_periods: scenario.n_periods });
    }
    weights.validated()?;
    env.validate()?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(FormulationError::InvalidGrid { step: grid_step });
    }
    let data = scenario.period_view(period);
    let n = data.n_users();
    if n > MAX_ORACLE_USERS {
        return Err(FormulationError::TooManyUsers { n, max: MAX_ORACLE_USERS });
    }

    let cap = env.price_cap;
    let n_steps = ((cap + 1e-9) / grid_step) as usize;
    let mut points: Vec<f64> = (0..=n_steps).map(|k| (k as f64 * grid_step).min(cap)).collect();
    if points.last().copied() != Some(cap) {
        points.push(cap);
    }

    let net = formulation.is_net_metering();
    let tables: Vec<UserTable> = (0..n)
        .map(|i| {
            let (w, a, m, s) = (data.omega[i], data.alpha[i], data.m[i], data.s[i]);
            let target = w / a;
            let mut rev = Vec::with_capacity(points.len());
            let mut load = Vec::with_capacity(points.len());
            let mut dev = Vec::with_capacity(points.len());
            for &p in &points {
                if net {
                    let z = consumer::prosumer_best_response(w, p, a, m, s).net;
                    rev.push(p * z);
                    load.push(z);
                    let d = z + s - m - target;
                    dev.push(d * d);
                } else {
                    let x = consumer::best_response(w, p + env.base_price, a);
                    rev.push((p + env.base_price) * x);
                    load.push(x);
                    let d = x - target;
                    dev.push(d * d);
                }
            }
            UserTable { rev, load, dev }
        })
        .collect();

    let mut best = Best { obj: f64::NEG_INFINITY, idx: Vec::new() };
    let mut idx = alloc::vec![0usize; n];
    descend(
        &Ctx { points: &points, tables: &tables, weights, eta: env.eta.limit(), net },
        0,
        (0.0, 0.0, 0.0),
        (f64::INFINITY, f64::NEG_INFINITY),
        &mut idx,
        &mut best,
    );
    if best.idx.is_empty() {
        // Only reachable in the net-metering mode, when every grid point
        // violates ΣZ ≥ 0.
        return Err(FormulationError::Solver { status: SolveStatus::Infeasible });
    }

    let prices: Vec<f64> = best.idx.iter().map(|&k| points[k]).collect();
    let demands: Vec<f64> = (0..n).map(|i| tables[i].load[best.idx[i]]).collect();
    Ok(assemble_outcome(formulation, &data, weights, env, prices, demands))
}

struct Ctx<'a> {
    points: &'a [f64],
    tables: &'a [UserTable],
    weights: &'a Weights,
    eta: f64,
    net: bool,
}

struct Best {
    obj: f64,
    idx: Vec<usize>,
}

/// Depth-first enumeration. `acc` carries the partial (revenue, load,
/// deviation) sums; `(lo, hi)` the running price extremes, which prune
/// each level's window to `[hi − η, lo + η]`.
fn descend(
    ctx: &Ctx<'_>,
    depth: usize,
    acc: (f64, f64, f64),
    (lo, hi): (f64, f64),
    idx: &mut [usize],
    best: &mut Best,
) {
    let points = ctx.points;
    let (start, end) = if ctx.eta.is_finite() && depth > 0 {
        let lo_bound = hi - ctx.eta;
        let hi_bound = lo + ctx.eta;
        (
            points.partition_point(|&p| p < lo_bound - 1e-12),
            points.partition_point(|&p| p <= hi_bound + 1e-12),
        )
    } else {
        (0, points.len())
    };
    let table = &ctx.tables[depth];
    if depth + 1 == ctx.tables.len() {
        let w = ctx.weights;
        for k in start..end {
            let rev = acc.0 + table.rev[k];
            let load = acc.1 + table.load[k];
            let dev = acc.2 + table.dev[k];
            if ctx.net && load < -NET_TOTAL_TOL {
                continue;
            }
            let obj = w.e1 * rev - w.e2 * load * load - w.e3 * dev;
            if obj > best.obj {
                best.obj = obj;
                idx[depth] = k;
                best.idx = idx.to_vec();
            }
        }
        return;
    }
    for k in start..end {
        idx[depth] = k;
        let p = points[k];
        descend(
            ctx,
            depth + 1,
            (acc.0 + table.rev[k], acc.1 + table.load[k], acc.2 + table.dev[k]),
            (lo.min(p), hi.max(p)),
            idx,
            best,
        );
    }
}
