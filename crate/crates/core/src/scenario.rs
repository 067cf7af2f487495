//! Deterministic construction of consumer populations.
//!
//! The reference population mirrors a standard synthetic setup: six
//! four-hour periods starting at midnight, a shared inelastic demand
//! profile `m`, per-user base willingness `ω_i ~ U[3,7]`, and per-period
//! willingness `ω_i^(k) = 0.75·ω_i + 0.5·m_k`, with `α = 2` for everyone
//! and a base price of 1.
//!
//! Randomness comes from ChaCha8 seeded with the scenario seed. Stream 0
//! draws the base willingness values `ω_i` in user order; stream 1 draws
//! the per-user solar jitter factors (see [`attach_solar`]). Uniform
//! values are built from the top 53 bits of each 64-bit draw, so scenarios
//! reproduce bit-for-bit on any platform.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-period inelastic demand of the reference population.
pub const REFERENCE_INELASTIC: [f64; 6] = [0.16, 0.39, 0.63, 0.51, 0.78, 0.52];

/// Default per-period solar generation shape: zero overnight, light in the
/// shoulder periods, heavy at midday (enough to trigger sell-back).
pub const DEFAULT_SOLAR_PROFILE: [f64; 6] = [0.0, 0.3, 1.6, 1.8, 0.4, 0.0];

/// Comfort curvature shared by all reference consumers.
pub const DEFAULT_ALPHA: f64 = 2.0;

/// Reference base price.
pub const DEFAULT_BASE_PRICE: f64 = 1.0;

/// Reference price cap; loose enough that it never binds at reference
/// optima (prices stay below ~4).
pub const DEFAULT_PRICE_CAP: f64 = 10.0;

/// Default relative solar jitter (±10%).
pub const DEFAULT_SOLAR_JITTER: f64 = 0.1;

/// One consumer: comfort curvature plus per-period willingness, inelastic
/// demand, and solar generation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerProfile {
    /// Comfort curvature α > 0.
    pub alpha: f64,
    /// Willingness ω_i^(k), one entry per period.
    pub omega: Vec<f64>,
    /// Inelastic demand per period.
    pub m: Vec<f64>,
    /// Solar generation per period (zero without renewables).
    pub s: Vec<f64>,
}

/// A consumer population plus the retailer-side constants it was built
/// with.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub seed: u64,
    pub n_users: usize,
    pub n_periods: usize,
    /// Base price charged on top of every per-user price.
    pub base_price: f64,
    /// Cap on per-user prices.
    pub price_cap: f64,
    pub consumers: Vec<ConsumerProfile>,
}

/// Per-period slice of a scenario: one entry per user.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodData {
    pub omega: Vec<f64>,
    pub alpha: Vec<f64>,
    pub m: Vec<f64>,
    pub s: Vec<f64>,
}

impl PeriodData {
    pub fn n_users(&self) -> usize {
        self.omega.len()
    }
}

/// Validation and construction errors for scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// A structural or range constraint failed; `user` names the offending
    /// consumer when applicable.
    Invalid { what: &'static str, user: Option<usize> },
    /// Solar profile length does not match the period count.
    WrongProfileLength { expected: usize, actual: usize },
    /// Solar profile has generation in the first or last (night) period.
    NonzeroNightSolar { period: usize },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Invalid { what, user: Some(i) } => write!(f, "consumers[{i}]: {what}"),
            ScenarioError::Invalid { what, user: None } => write!(f, "{what}"),
            ScenarioError::WrongProfileLength { expected, actual } => {
                write!(f, "solar profile has {actual} entries, scenario has {expected} periods")
            }
            ScenarioError::NonzeroNightSolar { period } => {
                write!(f, "solar profile is nonzero in night period {period}")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

impl Scenario {
    /// Checks structural invariants: vector lengths, positive α, finite
    /// nonnegative data, and `0 ≤ p_b < P`.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_users == 0 || self.consumers.len() != self.n_users {
            return Err(ScenarioError::Invalid { what: "n_users must match consumers", user: None });
        }
        if self.n_periods == 0 {
            return Err(ScenarioError::Invalid { what: "n_periods must be positive", user: None });
        }
        if !(self.base_price >= 0.0 && self.base_price.is_finite()) {
            return Err(ScenarioError::Invalid { what: "p_b must be finite and >= 0", user: None });
        }
        if !(self.price_cap > self.base_price && self.price_cap.is_finite()) {
            return Err(ScenarioError::Invalid { what: "P_cap must be finite and > p_b", user: None });
        }
        for (i, c) in self.consumers.iter().enumerate() {
            if !(c.alpha > 0.0 && c.alpha.is_finite()) {
                return Err(ScenarioError::Invalid { what: "alpha must be finite and > 0", user: Some(i) });
            }
            for (vec, what) in [
                (&c.omega, "omega length must equal n_periods"),
                (&c.m, "m length must equal n_periods"),
                (&c.s, "s length must equal n_periods"),
            ] {
                if vec.len() != self.n_periods {
                    return Err(ScenarioError::Invalid { what, user: Some(i) });
                }
            }
            let nonneg = c.omega.iter().chain(&c.m).chain(&c.s).all(|v| v.is_finite() && *v >= 0.0);
            if !nonneg {
                return Err(ScenarioError::Invalid {
                    what: "omega, m, s entries must be finite and >= 0",
                    user: Some(i),
                });
            }
        }
        Ok(())
    }

    /// Gathers per-user data for period `k`. Panics if `k` is out of range.
    pub fn period_view(&self, k: usize) -> PeriodData {
        assert!(k < self.n_periods, "period {k} out of range (n_periods = {})", self.n_periods);
        PeriodData {
            omega: self.consumers.iter().map(|c| c.omega[k]).collect(),
            alpha: self.consumers.iter().map(|c| c.alpha).collect(),
            m: self.consumers.iter().map(|c| c.m[k]).collect(),
            s: self.consumers.iter().map(|c| c.s[k]).collect(),
        }
    }

    /// Same scenario with a different base price (the net-metering
    /// comparison uses p_b = 2).
    pub fn with_base_price(mut self, base_price: f64) -> Self {
        self.base_price = base_price;
        self
    }

    /// Total solar generation across users in period `k`.
    pub fn total_solar(&self, k: usize) -> f64 {
        self.consumers.iter().map(|c| c.s[k]).sum()
    }
}

/// Uniform value in [0, 1) from the top 53 bits of one 64-bit draw.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Builds the reference population: `n_users` consumers over 6 periods,
/// willingness derived from seeded uniform draws as described in the
/// module docs, no solar.
pub fn generate_reference(seed: u64, n_users: usize) -> Scenario {
    assert!(n_users >= 1, "need at least one consumer");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_periods = REFERENCE_INELASTIC.len();
    let consumers = (0..n_users)
        .map(|_| {
            let omega_base = 3.0 + 4.0 * unit_f64(&mut rng);
            ConsumerProfile {
                alpha: DEFAULT_ALPHA,
                omega: REFERENCE_INELASTIC.iter().map(|m| 0.75 * omega_base + 0.5 * m).collect(),
                m: REFERENCE_INELASTIC.to_vec(),
                s: vec![0.0; n_periods],
            }
        })
        .collect();
    Scenario {
        label: format!("reference-{seed}-{n_users}"),
        seed,
        n_users,
        n_periods,
        base_price: DEFAULT_BASE_PRICE,
        price_cap: DEFAULT_PRICE_CAP,
        consumers,
    }
}

/// Returns a copy of the scenario with per-user solar generation
/// `s_i^(k) = scale · profile[k] · f_i`, where `f_i = 1 + jitter·(2u_i−1)`
/// is a per-user factor drawn from ChaCha8 stream 1 of the scenario seed
/// (`jitter = 0` gives every user the same vector).
///
/// The profile must be zero in the first and last periods — night periods
/// have no solar generation.
pub fn attach_solar(
    scenario: &Scenario,
    profile: &[f64],
    scale: f64,
    jitter: f64,
) -> Result<Scenario, ScenarioError> {
    if profile.len() != scenario.n_periods {
        return Err(ScenarioError::WrongProfileLength {
            expected: scenario.n_periods,
            actual: profile.len(),
        });
    }
    for (k, &v) in profile.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ScenarioError::Invalid { what: "profile entries must be finite and >= 0", user: None });
        }
        if (k == 0 || k == scenario.n_periods - 1) && v != 0.0 {
            return Err(ScenarioError::NonzeroNightSolar { period: k });
        }
    }
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(ScenarioError::Invalid { what: "scale must be finite and >= 0", user: None });
    }
    if !(jitter.is_finite() && (0.0..1.0).contains(&jitter)) {
        return Err(ScenarioError::Invalid { what: "jitter must be in [0, 1)", user: None });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1);
    let mut out = scenario.clone();
    for c in out.consumers.iter_mut() {
        let factor = 1.0 + jitter * (2.0 * unit_f64(&mut rng) - 1.0);
        c.s = profile.iter().map(|&v| scale * v * factor).collect();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_deterministic() {
        let a = generate_reference(42, 20);
        let b = generate_reference(42, 20);
        assert_eq!(a, b);
        assert_ne!(a, generate_reference(43, 20));
        a.validate().unwrap();
    }

    #[test]
    fn reference_respects_recipe_bounds() {
        let s = generate_reference(7, 50);
        assert_eq!(s.n_periods, 6);
        for c in &s.consumers {
            assert_eq!(c.alpha, DEFAULT_ALPHA);
            assert_eq!(c.m, REFERENCE_INELASTIC.to_vec());
            assert!(c.s.iter().all(|&v| v == 0.0));
            // ω_i^(k) ∈ [0.75·3 + 0.5·0.16, 0.75·7 + 0.5·0.78].
            for &w in &c.omega {
                assert!((2.33..=5.64).contains(&w), "omega {w} out of range");
            }
            // The implied base willingness lies in [3, 7].
            let omega_base = (c.omega[0] - 0.5 * REFERENCE_INELASTIC[0]) / 0.75;
            assert!((3.0..=7.0).contains(&omega_base));
            // Within a user, omegas differ only through 0.5·m_k.
            for k in 1..6 {
                let lhs = c.omega[k] - c.omega[0];
                let rhs = 0.5 * (REFERENCE_INELASTIC[k] - REFERENCE_INELASTIC[0]);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn period_view_gathers_per_user() {
        let s = generate_reference(1, 3);
        let d = s.period_view(2);
        assert_eq!(d.n_users(), 3);
        assert_eq!(d.omega[1], s.consumers[1].omega[2]);
        assert_eq!(d.m, vec![0.63; 3]);
    }

    #[test]
    fn solar_shape_and_jitter() {
        let base = generate_reference(11, 4);
        let sol = attach_solar(&base, &DEFAULT_SOLAR_PROFILE, 1.0, 0.1).unwrap();
        sol.validate().unwrap();
        // Zero at night, light in periods 2/5, heavy in 3/4.
        for c in &sol.consumers {
            assert_eq!(c.s[0], 0.0);
            assert_eq!(c.s[5], 0.0);
            assert!(c.s[2] > c.s[1] && c.s[1] > 0.0);
            assert!(c.s[3] > c.s[4] && c.s[4] > 0.0);
        }
        // Jitter stays within ±10%.
        for (c, b) in sol.consumers.iter().zip(&base.consumers) {
            assert_eq!(b.s[2], 0.0);
            assert!(c.s[2] >= 0.9 * 1.6 && c.s[2] <= 1.1 * 1.6);
        }
        // Disabled jitter: identical vectors across users.
        let flat = attach_solar(&base, &DEFAULT_SOLAR_PROFILE, 1.0, 0.0).unwrap();
        for c in &flat.consumers {
            assert_eq!(c.s, flat.consumers[0].s);
        }
        // Zero scale reproduces the (solar-free) input.
        let zero = attach_solar(&base, &DEFAULT_SOLAR_PROFILE, 0.0, 0.1).unwrap();
        assert_eq!(zero, base);
    }

    #[test]
    fn solar_rejects_bad_profiles() {
        let base = generate_reference(11, 2);
        assert_eq!(
            attach_solar(&base, &[0.0, 1.0], 1.0, 0.1).unwrap_err(),
            ScenarioError::WrongProfileLength { expected: 6, actual: 2 }
        );
        assert_eq!(
            attach_solar(&base, &[0.5, 0.3, 1.6, 1.8, 0.4, 0.0], 1.0, 0.1).unwrap_err(),
            ScenarioError::NonzeroNightSolar { period: 0 }
        );
        assert_eq!(
            attach_solar(&base, &[0.0, 0.3, 1.6, 1.8, 0.4, 0.7], 1.0, 0.1).unwrap_err(),
            ScenarioError::NonzeroNightSolar { period: 5 }
        );
    }

    #[test]
    fn validate_rejects_bad_scenarios() {
        let mut s = generate_reference(3, 2);
        s.consumers[1].alpha = 0.0;
        assert_eq!(
            s.validate().unwrap_err(),
            ScenarioError::Invalid { what: "alpha must be finite and > 0", user: Some(1) }
        );
        let mut s = generate_reference(3, 2);
        s.consumers[0].omega.pop();
        assert!(matches!(s.validate().unwrap_err(), ScenarioError::Invalid { user: Some(0), .. }));
        let mut s = generate_reference(3, 2);
        s.price_cap = 0.5;
        assert!(s.validate().is_err());
    }
}
