//! Closed forms for the unconstrained price optimum.
//!
//! In the regime where the spread bound, the cap, and the nonnegativity
//! bounds are all inactive (and with the base price folded to zero), the
//! stationarity system of the price-only problem is linear and solves in
//! two steps: the aggregate
//!
//! ```text
//!   Σp = Σω·(e₁ + 2Nβe₂/α) / (2·(e₁ + e₃/α + Nβe₂/α))
//! ```
//!
//! and then each price
//!
//! ```text
//!   p_i = (e₁ω_i/α + (2βe₂/α²)(Σω − Σp)) / (2·(e₁/α + e₃/α²)).
//! ```
//!
//! `β` scales the serving-cost term; `β = 1` matches the objective used
//! everywhere else in this crate. Since `p_i − p_j` is proportional to
//! `ω_i − ω_j`, the spread of the optimal prices has the closed form
//! returned by [`eta_star`]: the smallest discrimination bound that never
//! binds. With net metering the same derivation picks up each user's
//! generation, giving the per-period [`eta_star_net_metering`].

use alloc::vec::Vec;

use super::{FormulationError, Weights};

fn check_denominator(weights: &Weights, alpha: f64) -> Result<(), FormulationError> {
    if alpha.is_nan() || alpha <= 0.0 || weights.e1 * alpha + weights.e3 <= 0.0 {
        return Err(FormulationError::DegenerateWeights);
    }
    Ok(())
}

/// Optimal unconstrained prices for willingness vector `omega`.
///
/// Panics if `omega` is empty.
pub fn closed_form_prices(
    omega: &[f64],
    weights: &Weights,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>, FormulationError> {
    assert!(!omega.is_empty(), "closed_form_prices needs at least one user");
    check_denominator(weights, alpha)?;
    let (e1, e2, e3) = (weights.e1, weights.e2, weights.e3);
    let n = omega.len() as f64;
    let sum_omega: f64 = omega.iter().sum();
    let sum_p = sum_omega * (e1 + 2.0 * n * beta * e2 / alpha)
        / (2.0 * (e1 + e3 / alpha + n * beta * e2 / alpha));
    let denom = 2.0 * (e1 / alpha + e3 / (alpha * alpha));
    Ok(omega
        .iter()
        .map(|&w| {
            (e1 * w / alpha + (2.0 * beta * e2 / (alpha * alpha)) * (sum_omega - sum_p)) / denom
        })
        .collect())
}

/// The optimal discrimination level: the price spread at the
/// unconstrained optimum, `e₁α(ω_max−ω_min) / (2(αe₁+e₃))`.
///
/// Independent of `e₂` and of the number of users. Panics if `omega` is
/// empty.
pub fn eta_star(omega: &[f64], weights: &Weights, alpha: f64) -> Result<f64, FormulationError> {
    assert!(!omega.is_empty(), "eta_star needs at least one user");
    check_denominator(weights, alpha)?;
    let (lo, hi) = min_max(omega);
    Ok(weights.e1 * alpha * (hi - lo) / (2.0 * (alpha * weights.e1 + weights.e3)))
}

/// Net-metering analogue of [`eta_star`]:
/// `e₁α(ω_max − ω_min − α(s_min − s_max)) / (2(e₃ + αe₁))`.
///
/// Depends on the period through `s`, and reduces exactly to [`eta_star`]
/// when generation is uniform across users. Panics if `omega` is empty or
/// the lengths differ.
pub fn eta_star_net_metering(
    omega: &[f64],
    s: &[f64],
    weights: &Weights,
    alpha: f64,
) -> Result<f64, FormulationError> {
    assert!(!omega.is_empty(), "eta_star_net_metering needs at least one user");
    assert_eq!(omega.len(), s.len(), "willingness and generation lengths differ");
    check_denominator(weights, alpha)?;
    let (w_lo, w_hi) = min_max(omega);
    let (s_lo, s_hi) = min_max(s);
    Ok(weights.e1 * alpha * (w_hi - w_lo - alpha * (s_lo - s_hi))
        / (2.0 * (weights.e3 + alpha * weights.e1)))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[cfg(test)]
mod tests {
    use alloc::vec;

    use super::*;

    fn weights(e1: f64, e2: f64, e3: f64) -> Weights {
        Weights::new(e1, e2, e3).unwrap()
    }

    #[test]
    fn revenue_only_prices_are_half_willingness() {
        let p = closed_form_prices(&[3.0, 5.0, 8.0], &weights(1.0, 0.0, 0.0), 2.0, 1.0).unwrap();
        assert_eq!(p, vec![1.5, 2.5, 4.0]);
    }

    #[test]
    fn single_user_with_welfare_weight() {
        let p = closed_form_prices(&[5.0], &weights(1.0, 0.0, 2.0), 2.0, 1.0).unwrap();
        assert!((p[0] - 1.25).abs() < 1e-12, "p = {}", p[0]);
    }

    #[test]
    fn price_spread_equals_eta_star() {
        let omega = [3.2, 4.7, 5.9, 6.4, 3.9];
        for (e1, e2, e3) in [(1.0, 0.0, 0.0), (1.0, 0.5, 0.2), (0.7, 1.3, 2.9)] {
            let w = weights(e1, e2, e3);
            let p = closed_form_prices(&omega, &w, 2.0, 1.0).unwrap();
            let (lo, hi) = super::min_max(&p);
            let star = eta_star(&omega, &w, 2.0).unwrap();
            assert!((hi - lo - star).abs() < 1e-10, "spread {} vs {}", hi - lo, star);
        }
    }

    #[test]
    fn eta_star_examples() {
        assert_eq!(eta_star(&[4.0, 4.0], &weights(1.0, 3.0, 2.0), 2.0).unwrap(), 0.0);
        let v = eta_star(&[3.0, 5.0], &weights(1.0, 0.0, 0.0), 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // e2 never enters.
        let v2 = eta_star(&[3.0, 5.0], &weights(1.0, 100.0, 0.0), 2.0).unwrap();
        assert_eq!(v, v2);
    }

    #[test]
    fn degenerate_weights_are_rejected() {
        let w = Weights { e1: 0.0, e2: 1.0, e3: 0.0, gamma: 1.0 };
        assert_eq!(
            eta_star(&[3.0, 5.0], &w, 2.0).unwrap_err(),
            FormulationError::DegenerateWeights
        );
        assert_eq!(
            closed_form_prices(&[3.0], &w, 2.0, 1.0).unwrap_err(),
            FormulationError::DegenerateWeights
        );
    }

    #[test]
    fn net_metering_reduces_to_plain_eta_star_for_uniform_generation() {
        let omega = [3.0, 4.5, 6.0];
        let w = weights(1.2, 0.4, 0.8);
        let plain = eta_star(&omega, &w, 2.0).unwrap();
        let nm = eta_star_net_metering(&omega, &[0.7, 0.7, 0.7], &w, 2.0).unwrap();
        assert_eq!(plain, nm);
    }

    #[test]
    fn net_metering_example_value() {
        // Δω = 2, s spread 0.5, e1 = 1, e3 = 0, α = 2 ⟹ 2·(2+1)/4 = 1.5.
        let v = eta_star_net_metering(&[3.0, 5.0], &[0.5, 0.0], &weights(1.0, 0.0, 0.0), 2.0)
            .unwrap();
        assert!((v - 1.5).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn net_metering_varies_with_the_generation_profile() {
        let omega = [3.0, 5.0, 4.0];
        let w = weights(1.0, 0.2, 0.5);
        let a = eta_star_net_metering(&omega, &[0.0, 0.0, 0.0], &w, 2.0).unwrap();
        let b = eta_star_net_metering(&omega, &[1.5, 0.0, 0.2], &w, 2.0).unwrap();
        assert!(a != b);
    }
}
