//! Lowering of the pricing formulations to [`QpProblem`]s.
//!
//! Every build returns the QP in **minimization** form together with the
//! constant `k0` dropped by the lowering, so the true (maximized)
//! objective of the source problem is `-(f_min + k0)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::qp::QpProblem;
use crate::scenario::PeriodData;

use super::{EtaBound, FormulationError, RetailEnv, Weights};

/// Which relaxation of the net-metering problem to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F4Variant {
    /// Substitute the linear net-consumption rule and keep `P_i ≤ ω_i`
    /// hard (mirrors F1).
    Relaxed1,
    /// Drop the hard constraint, add penalized slacks (mirrors F2).
    Relaxed2,
}

/// Where each block of decision variables lives in the QP's `x`.
///
/// Prices always occupy `0..n_users`. The spread band, when lowered,
/// appends two auxiliary variables `u, ℓ` with rows `p_i ≤ u`,
/// `ℓ ≤ p_i`, `u − ℓ ≤ η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_users: usize,
    /// Start of the joint demand block (F3 only).
    pub demand: Option<usize>,
    /// Start of the slack block (F2 and the F2-style net-metering
    /// relaxation).
    pub slack: Option<usize>,
    /// Index of the band auxiliary `u`; `ℓ` is the next variable.
    pub band: Option<usize>,
}

/// A lowered problem plus the bookkeeping to map back to the source.
#[derive(Debug, Clone)]
pub struct LoweredQp {
    pub problem: QpProblem,
    pub layout: VarLayout,
    /// Constant term dropped by the lowering; the source problem's
    /// maximum equals `-(minimum + k0)`.
    pub k0: f64,
}

/// Incremental assembly of a QP: quadratic/linear cost are accumulated
/// in place, inequality rows collected and packed at the end.
struct Assembly {
    q: Mat,
    c: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    g_rows: Vec<Vec<f64>>,
    h: Vec<f64>,
    a_rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    k0: f64,
}

impl Assembly {
    fn new(n_vars: usize) -> Self {
        Assembly {
            q: Mat::zeros(n_vars, n_vars),
            c: vec![0.0; n_vars],
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            g_rows: Vec::new(),
            h: Vec::new(),
            a_rows: Vec::new(),
            b: Vec::new(),
            k0: 0.0,
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn dense(&self, entries: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.n()];
        for &(j, v) in entries {
            row[j] = v;
        }
        row
    }

    /// Adds the inequality `Σ coef·x ≤ rhs`.
    fn le_row(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let row = self.dense(entries);
        self.g_rows.push(row);
        self.h.push(rhs);
    }

    /// Adds the equality `Σ coef·x = rhs`.
    fn eq_row(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let row = self.dense(entries);
        self.a_rows.push(row);
        self.b.push(rhs);
    }

    /// Lowers the pairwise spread bound over the first `n_users`
    /// variables. A positive bound uses the two trailing auxiliaries
    /// `u, ℓ`; a zero bound collapses to the equality chain
    /// `p_i = p_{i+1}`, which avoids a badly degenerate vertex.
    fn band(&mut self, n_users: usize, band: Option<usize>, eta: f64) {
        if let Some(u) = band {
            let l = u + 1;
            for i in 0..n_users {
                self.le_row(&[(i, 1.0), (u, -1.0)], 0.0);
                self.le_row(&[(l, 1.0), (i, -1.0)], 0.0);
            }
            self.le_row(&[(u, 1.0), (l, -1.0)], eta);
        } else {
            for i in 1..n_users {
                self.eq_row(&[(i - 1, 1.0), (i, -1.0)], 0.0);
            }
        }
    }

    fn finish(self) -> (QpProblem, f64) {
        let pack = |rows: &[Vec<f64>], n: usize| {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            if refs.is_empty() { Mat::zeros(0, n) } else { Mat::from_rows(&refs) }
        };
        let n = self.n();
        let mut problem = QpProblem::new(self.q, self.c);
        problem.g = pack(&self.g_rows, n);
        problem.h = self.h;
        problem.a = pack(&self.a_rows, n);
        problem.b = self.b;
        problem.lower = self.lower;
        problem.upper = self.upper;
        (problem, self.k0)
    }
}

fn check_inputs(data: &PeriodData, weights: &Weights, env: &RetailEnv) -> Result<(), FormulationError> {
    if data.n_users() == 0 {
        return Err(FormulationError::InvalidEnv);
    }
    weights.validated()?;
    env.validate()
}

/// Returns `(n_vars, band_offset)` for a block of `base` structural
/// variables plus the band auxiliaries when the bound is finite.
fn with_band(base: usize, eta: EtaBound) -> (usize, Option<usize>) {
    match eta {
        EtaBound::Bounded(eta) if eta > 0.0 => (base + 2, Some(base)),
        _ => (base, None),
    }
}

/// Accumulates the price-block cost shared by F1 and F2 (the substituted
/// objective, negated for minimization):
///
/// ```text
///   −e₁·Σ(p_i+p_b)(ω_i−p_b−p_i)/α_i + e₂·(Σ(ω_i−p_b−p_i)/α_i)²
///   + e₃·Σ((p_i+p_b)/α_i)²
/// ```
fn substituted_price_cost(asm: &mut Assembly, data: &PeriodData, w: &Weights, p_b: f64) {
    let n = data.n_users();
    // Total demand at zero price, the constant in the e₂ expansion.
    let c0: f64 = data
        .omega
        .iter()
        .zip(&data.alpha)
        .map(|(&om, &a)| (om - p_b) / a)
        .sum();
    for i in 0..n {
        let a_i = data.alpha[i];
        let om_i = data.omega[i];
        asm.q.add_at(i, i, 2.0 * w.e1 / a_i + 2.0 * w.e3 / (a_i * a_i));
        for j in 0..n {
            asm.q.add_at(i, j, 2.0 * w.e2 / (a_i * data.alpha[j]));
        }
        asm.c[i] = -w.e1 * (om_i - 2.0 * p_b) / a_i - 2.0 * w.e2 * c0 / a_i
            + 2.0 * w.e3 * p_b / (a_i * a_i);
        asm.k0 += -w.e1 * p_b * (om_i - p_b) / a_i + w.e3 * p_b * p_b / (a_i * a_i);
    }
    asm.k0 += w.e2 * c0 * c0;
}

/// Price-only lowering with the hard demand-nonnegativity rows
/// `p_i + p_b ≤ ω_i`.
pub fn build_f1(
    data: &PeriodData,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<LoweredQp, FormulationError> {
    check_inputs(data, weights, env)?;
    let n = data.n_users();
    let min_omega = data.omega.iter().cloned().fold(f64::INFINITY, f64::min);
    if env.base_price > min_omega {
        return Err(FormulationError::InfeasibleEnv { min_omega, p_b: env.base_price });
    }
    let (n_vars, band) = with_band(n, env.eta);
    let mut asm = Assembly::new(n_vars);
    substituted_price_cost(&mut asm, data, weights, env.base_price);
    for i in 0..n {
        asm.lower[i] = 0.0;
        asm.upper[i] = env.price_cap;
        asm.le_row(&[(i, 1.0)], data.omega[i] - env.base_price);
    }
    if let EtaBound::Bounded(eta) = env.eta {
        asm.band(n, band, eta);
    }
    let (problem, k0) = asm.finish();
    Ok(LoweredQp { problem, layout: VarLayout { n_users: n, demand: None, slack: None, band }, k0 })
}

/// Price + slack lowering: no hard nonnegativity, instead slacks
/// `t_i ≤ 0`, `t_i ≤ (ω_i−p_b−p_i)/α_i` rewarded by `+Σt_i`.
pub fn build_f2(
    data: &PeriodData,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<LoweredQp, FormulationError> {
    check_inputs(data, weights, env)?;
    let n = data.n_users();
    let (n_vars, band) = with_band(2 * n, env.eta);
    let mut asm = Assembly::new(n_vars);
    substituted_price_cost(&mut asm, data, weights, env.base_price);
    for i in 0..n {
        let t = n + i;
        asm.lower[i] = 0.0;
        asm.upper[i] = env.price_cap;
        asm.upper[t] = 0.0;
        asm.c[t] = -1.0;
        asm.le_row(&[(t, 1.0), (i, 1.0 / data.alpha[i])], (data.omega[i] - env.base_price) / data.alpha[i]);
    }
    if let EtaBound::Bounded(eta) = env.eta {
        asm.band(n, band, eta);
    }
    let (problem, k0) = asm.finish();
    Ok(LoweredQp {
        problem,
        layout: VarLayout { n_users: n, demand: None, slack: Some(n), band },
        k0,
    })
}

/// Joint (price, demand) lowering with box `0 ≤ x_i ≤ ω_i/α_i` and the
/// consistency penalty `γ·Σ(x_i − (ω_i−p_b−p_i)/α_i)²`. The welfare term
/// here penalizes the price level directly, `e₃·Σ(p_i+p_b)²`.
pub fn build_f3(
    data: &PeriodData,
    weights: &Weights,
    env: &RetailEnv,
) -> Result<LoweredQp, FormulationError> {
    check_inputs(data, weights, env)?;
    if weights.gamma <= 0.0 {
        return Err(FormulationError::InvalidWeights {
            reason: "the joint formulation requires a positive gamma",
        });
    }
    let n = data.n_users();
    let p_b = env.base_price;
    let (n_vars, band) = with_band(2 * n, env.eta);
    let mut asm = Assembly::new(n_vars);
    let (e1, e2, e3, gamma) = (weights.e1, weights.e2, weights.e3, weights.gamma);
    for i in 0..n {
        let x = n + i;
        let a_i = data.alpha[i];
        let target = (data.omega[i] - p_b) / a_i;
        asm.q.add_at(i, i, 2.0 * e3 + 2.0 * gamma / (a_i * a_i));
        asm.q.add_at(x, x, 2.0 * gamma);
        asm.q.add_at(i, x, -e1 + 2.0 * gamma / a_i);
        asm.q.add_at(x, i, -e1 + 2.0 * gamma / a_i);
        for j in 0..n {
            asm.q.add_at(x, n + j, 2.0 * e2);
        }
        asm.c[i] = 2.0 * e3 * p_b - 2.0 * gamma * target / a_i;
        asm.c[x] = -e1 * p_b - 2.0 * gamma * target;
        asm.k0 += e3 * p_b * p_b + gamma * target * target;
        asm.lower[i] = 0.0;
        asm.upper[i] = env.price_cap;
        asm.lower[x] = 0.0;
        asm.upper[x] = data.omega[i] / a_i;
    }
    if let EtaBound::Bounded(eta) = env.eta {
        asm.band(n, band, eta);
    }
    let (problem, k0) = asm.finish();
    Ok(LoweredQp {
        problem,
        layout: VarLayout { n_users: n, demand: Some(n), slack: None, band },
        k0,
    })
}

/// Net-metering lowerings over total prices `P_i` (no separate base
/// price). Net consumption substitutes as `Z_i = d_i − P_i/α_i` with
/// `d_i = m_i − s_i + ω_i/α_i`; both variants keep the aggregate
/// `ΣZ_i ≥ 0` row in the substituted variables.
pub fn build_f4(
    data: &PeriodData,
    weights: &Weights,
    env: &RetailEnv,
    variant: F4Variant,
) -> Result<LoweredQp, FormulationError> {
    check_inputs(data, weights, env)?;
    let n = data.n_users();
    let d: Vec<f64> = (0..n)
        .map(|i| data.m[i] - data.s[i] + data.omega[i] / data.alpha[i])
        .collect();
    let d_total: f64 = d.iter().sum();
    let base = match variant {
        F4Variant::Relaxed1 => n,
        F4Variant::Relaxed2 => 2 * n,
    };
    let (n_vars, band) = with_band(base, env.eta);
    let mut asm = Assembly::new(n_vars);
    let (e1, e2, e3) = (weights.e1, weights.e2, weights.e3);
    for i in 0..n {
        let a_i = data.alpha[i];
        asm.q.add_at(i, i, 2.0 * e1 / a_i + 2.0 * e3 / (a_i * a_i));
        for j in 0..n {
            asm.q.add_at(i, j, 2.0 * e2 / (a_i * data.alpha[j]));
        }
        asm.c[i] = -e1 * d[i] - 2.0 * e2 * d_total / a_i;
        asm.lower[i] = 0.0;
        asm.upper[i] = env.price_cap;
    }
    asm.k0 += e2 * d_total * d_total;
    // Aggregate net purchase stays nonnegative: Σ(d_i − P_i/α_i) ≥ 0.
    let sum_row: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0 / data.alpha[i])).collect();
    asm.le_row(&sum_row, d_total);
    match variant {
        F4Variant::Relaxed1 => {
            for i in 0..n {
                asm.le_row(&[(i, 1.0)], data.omega[i]);
            }
        }
        F4Variant::Relaxed2 => {
            for i in 0..n {
                let t = n + i;
                asm.upper[t] = 0.0;
                asm.c[t] = -1.0;
                asm.le_row(&[(t, 1.0), (i, 1.0 / data.alpha[i])], data.omega[i] / data.alpha[i]);
            }
        }
    }
    if let EtaBound::Bounded(eta) = env.eta {
        asm.band(n, band, eta);
    }
    let (problem, k0) = asm.finish();
    let slack = match variant {
        F4Variant::Relaxed1 => None,
        F4Variant::Relaxed2 => Some(n),
    };
    Ok(LoweredQp { problem, layout: VarLayout { n_users: n, demand: None, slack, band }, k0 })
}

#[cfg(test)]
mod tests {
    use alloc::string::String;
    use alloc::vec;

    use super::super::{
        solve_period, EtaBound, Formulation, RetailEnv, Weights,
    };
    use super::*;
    use crate::qp;
    use crate::scenario::{ConsumerProfile, Scenario};

    fn single_user_data(omega: f64, alpha: f64, m: f64, s: f64) -> PeriodData {
        PeriodData { omega: vec![omega], alpha: vec![alpha], m: vec![m], s: vec![s] }
    }

    fn scenario_from_period(data: &PeriodData, base_price: f64, price_cap: f64) -> Scenario {
        Scenario {
            label: String::from("test"),
            seed: 0,
            n_users: data.n_users(),
            n_periods: 1,
            base_price,
            price_cap,
            consumers: (0..data.n_users())
                .map(|i| ConsumerProfile {
                    alpha: data.alpha[i],
                    omega: vec![data.omega[i]],
                    m: vec![data.m[i]],
                    s: vec![data.s[i]],
                })
                .collect(),
        }
    }

    #[test]
    fn f1_shapes_with_band() {
        let data = PeriodData {
            omega: vec![5.0, 6.0, 7.0],
            alpha: vec![2.0, 2.0, 2.0],
            m: vec![0.2, 0.2, 0.2],
            s: vec![0.0, 0.0, 0.0],
        };
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Bounded(0.5)).unwrap();
        let w = Weights::new(1.0, 0.5, 0.5).unwrap();
        let lowered = build_f1(&data, &w, &env).unwrap();
        assert_eq!(lowered.problem.n(), 5);
        assert_eq!(lowered.problem.g.rows(), 3 + 2 * 3 + 1);
        assert_eq!(lowered.layout.band, Some(3));
        lowered.problem.validate().unwrap();
    }

    #[test]
    fn f1_single_user_calculus_optimum() {
        // With e2 = e3 = 0 the problem is max (p+1)(5-1-p)/alpha, whose
        // stationary point is p + p_b = omega/2, independent of alpha.
        let data = single_user_data(5.0, 2.0, 0.0, 0.0);
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Unbounded).unwrap();
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let lowered = build_f1(&data, &w, &env).unwrap();
        let sol = qp::solve_qp(&lowered.problem, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER).unwrap();
        assert!((sol.x[0] - 1.5).abs() < 1e-7, "p = {}", sol.x[0]);
        let x = (5.0 - 1.0 - sol.x[0]) / 2.0;
        assert!((x - 1.25).abs() < 1e-7);
    }

    #[test]
    fn f1_rejects_base_price_above_willingness() {
        let data = single_user_data(5.0, 2.0, 0.0, 0.0);
        let env = RetailEnv::new(6.0, 10.0, EtaBound::Unbounded).unwrap();
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let err = build_f1(&data, &w, &env).unwrap_err();
        assert_eq!(err, FormulationError::InfeasibleEnv { min_omega: 5.0, p_b: 6.0 });
    }

    #[test]
    fn f2_shapes_with_band() {
        let data = PeriodData {
            omega: vec![5.0, 6.0, 7.0],
            alpha: vec![2.0, 2.0, 2.0],
            m: vec![0.2, 0.2, 0.2],
            s: vec![0.0, 0.0, 0.0],
        };
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Bounded(0.5)).unwrap();
        let w = Weights::new(1.0, 0.5, 0.5).unwrap();
        let lowered = build_f2(&data, &w, &env).unwrap();
        assert_eq!(lowered.problem.n(), 8);
        assert_eq!(lowered.layout.slack, Some(3));
        assert_eq!(lowered.problem.g.rows(), 3 + 2 * 3 + 1);
        lowered.problem.validate().unwrap();
    }

    #[test]
    fn f2_matches_f1_on_interior_instances() {
        // All best responses stay strictly positive at the optimum, so the
        // slack penalty never activates and both relaxations agree.
        let data = PeriodData {
            omega: vec![5.0, 5.5, 6.0],
            alpha: vec![2.0, 2.0, 2.0],
            m: vec![0.3, 0.3, 0.3],
            s: vec![0.0, 0.0, 0.0],
        };
        let scenario = scenario_from_period(&data, 1.0, 10.0);
        let w = Weights::new(1.0, 0.2, 1.0).unwrap();
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Unbounded).unwrap();
        let f1 = solve_period(&scenario, 0, Formulation::F1, &w, &env).unwrap();
        let f2 = solve_period(&scenario, 0, Formulation::F2, &w, &env).unwrap();
        for i in 0..3 {
            assert!(f1.demands[i] > 1e-3, "interior premise violated");
            assert!((f1.prices[i] - f2.prices[i]).abs() < 1e-6, "{:?} vs {:?}", f1.prices, f2.prices);
        }
        assert!((f1.objective - f2.objective).abs() < 1e-6);
    }

    #[test]
    fn f3_tracks_f1_for_large_gamma() {
        // At alpha = 1 the F3 price penalty coincides with the substituted
        // welfare term, so a stiff consistency penalty recovers F1.
        let data = PeriodData {
            omega: vec![4.0, 5.0],
            alpha: vec![1.0, 1.0],
            m: vec![0.2, 0.2],
            s: vec![0.0, 0.0],
        };
        let scenario = scenario_from_period(&data, 1.0, 10.0);
        let w = Weights::new(1.0, 0.3, 0.5).unwrap().with_gamma(1e6).unwrap();
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Unbounded).unwrap();
        let f1 = solve_period(&scenario, 0, Formulation::F1, &w, &env).unwrap();
        let f3 = solve_period(&scenario, 0, Formulation::F3, &w, &env).unwrap();
        for i in 0..2 {
            assert!(f1.demands[i] > 1e-3);
            assert!((f1.prices[i] - f3.prices[i]).abs() < 1e-3, "{:?} vs {:?}", f1.prices, f3.prices);
        }
    }

    #[test]
    fn f3_demands_stay_in_box() {
        let data = PeriodData {
            omega: vec![3.0, 8.0],
            alpha: vec![2.0, 2.0],
            m: vec![0.2, 0.2],
            s: vec![0.0, 0.0],
        };
        let scenario = scenario_from_period(&data, 1.0, 10.0);
        let w = Weights::new(2.0, 0.1, 0.4).unwrap();
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Bounded(0.5)).unwrap();
        let out = solve_period(&scenario, 0, Formulation::F3, &w, &env).unwrap();
        for i in 0..2 {
            assert!(out.demands[i] >= 0.0);
            assert!(out.demands[i] <= data.omega[i] / data.alpha[i] + 1e-9);
        }
    }

    #[test]
    fn f3_rejects_zero_gamma() {
        let data = single_user_data(5.0, 2.0, 0.0, 0.0);
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Unbounded).unwrap();
        let w = Weights { e1: 1.0, e2: 0.0, e3: 0.0, gamma: 0.0 };
        assert!(matches!(
            build_f3(&data, &w, &env),
            Err(FormulationError::InvalidWeights { .. })
        ));
    }

    #[test]
    fn f4_single_prosumer_calculus_optimum() {
        // max P(0.3 + (4-P)/2) has stationary point P = 2.3.
        let data = single_user_data(4.0, 2.0, 0.5, 0.2);
        let env = RetailEnv::new(0.0, 10.0, EtaBound::Unbounded).unwrap();
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let lowered = build_f4(&data, &w, &env, F4Variant::Relaxed1).unwrap();
        let sol = qp::solve_qp(&lowered.problem, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER).unwrap();
        assert!((sol.x[0] - 2.3).abs() < 1e-7, "P = {}", sol.x[0]);
    }

    #[test]
    fn f4_relaxed1_degenerates_to_f1_without_renewables() {
        let data = PeriodData {
            omega: vec![4.0, 5.0, 6.5],
            alpha: vec![2.0, 2.0, 2.0],
            m: vec![0.0, 0.0, 0.0],
            s: vec![0.0, 0.0, 0.0],
        };
        let scenario = scenario_from_period(&data, 0.0, 10.0);
        let w = Weights::new(1.0, 0.4, 0.7).unwrap();
        let env = RetailEnv::new(0.0, 10.0, EtaBound::Bounded(0.3)).unwrap();
        let f1 = solve_period(&scenario, 0, Formulation::F1, &w, &env).unwrap();
        let f4 = solve_period(&scenario, 0, Formulation::F4R1, &w, &env).unwrap();
        for i in 0..3 {
            assert!((f1.prices[i] - f4.prices[i]).abs() < 1e-8, "{:?} vs {:?}", f1.prices, f4.prices);
        }
        assert!((f1.objective - f4.objective).abs() < 1e-8);
    }

    #[test]
    fn f4_variants_shapes() {
        let data = PeriodData {
            omega: vec![5.0, 6.0],
            alpha: vec![2.0, 2.0],
            m: vec![0.4, 0.4],
            s: vec![0.1, 0.3],
        };
        let env = RetailEnv::new(0.0, 10.0, EtaBound::Bounded(0.2)).unwrap();
        let w = Weights::new(1.0, 0.5, 0.5).unwrap();
        let r1 = build_f4(&data, &w, &env, F4Variant::Relaxed1).unwrap();
        assert_eq!(r1.problem.n(), 4);
        assert_eq!(r1.problem.g.rows(), 1 + 2 + 2 * 2 + 1);
        let r2 = build_f4(&data, &w, &env, F4Variant::Relaxed2).unwrap();
        assert_eq!(r2.problem.n(), 6);
        assert_eq!(r2.problem.g.rows(), 1 + 2 + 2 * 2 + 1);
        r1.problem.validate().unwrap();
        r2.problem.validate().unwrap();
    }

    #[test]
    fn zero_eta_forces_uniform_prices() {
        let data = PeriodData {
            omega: vec![4.0, 5.0, 6.0, 6.5, 7.0],
            alpha: vec![2.0; 5],
            m: vec![0.3; 5],
            s: vec![0.0; 5],
        };
        let scenario = scenario_from_period(&data, 1.0, 10.0);
        let w = Weights::new(1.0, 0.2, 1.0).unwrap();
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Bounded(0.0)).unwrap();
        for formulation in [Formulation::F1, Formulation::F2, Formulation::F3] {
            let out = solve_period(&scenario, 0, formulation, &w, &env).unwrap();
            let lo = out.prices.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = out.prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo < 1e-6, "{formulation}: spread {}", hi - lo);
        }
    }

    #[test]
    fn dropped_constant_reconciles_qp_and_direct_objectives() {
        // On an interior instance the substitution is exact, so the QP
        // route -(f_min + k0) must agree with direct evaluation.
        let data = PeriodData {
            omega: vec![5.0, 5.5, 6.0],
            alpha: vec![2.0, 2.0, 2.0],
            m: vec![0.3, 0.3, 0.3],
            s: vec![0.0, 0.0, 0.0],
        };
        let scenario = scenario_from_period(&data, 1.0, 10.0);
        let w = Weights::new(1.0, 0.2, 1.0).unwrap();
        let env = RetailEnv::new(1.0, 10.0, EtaBound::Unbounded).unwrap();
        let lowered = build_f1(&data, &w, &env).unwrap();
        let sol = qp::solve_qp(&lowered.problem, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER).unwrap();
        let via_qp = -(lowered.problem.objective(&sol.x) + lowered.k0);
        let out = solve_period(&scenario, 0, Formulation::F1, &w, &env).unwrap();
        assert!((via_qp - out.objective).abs() < 1e-7, "{via_qp} vs {}", out.objective);
    }
}
