//! Consumer-side models: convenience, utility, and closed-form best
//! responses.
//!
//! A consumer with willingness `ω` and elasticity parameter `α > 0` draws
//! convenience
//!
//! ```text
//!   C(x) = ωx − αx²/2   for x ≤ ω/α,   C(x) = ω²/(2α) otherwise,
//! ```
//!
//! from consuming `x ≥ 0` units of elastic demand: concave, increasing up
//! to the saturation point `ω/α`, flat beyond it. Facing a total unit
//! price `p`, the consumer maximizes `U(x) = C(x) − p·x`, which yields the
//! affine best response `x* = max(0, (ω − p)/α)`.
//!
//! A prosumer additionally has inelastic demand `m` and local generation
//! `s`. Its net grid consumption is `z = m − s + x`; under net metering it
//! pays `P·z` (earning money when `z < 0`). Maximizing `C(z + s − m) − P·z`
//! over `z ≥ m − s` gives `Z = m − s + max(0, (ω − P)/α)`, split into a
//! purchase part `X = max(Z, 0)` and a sell-back part `Y = max(−Z, 0)`.

use core::fmt;

/// Errors for consumer-side evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsumerError {
    /// Demand passed to a convenience/utility evaluation was negative.
    NegativeDemand { x: f64 },
    /// Net consumption `z` implies negative elastic consumption
    /// `z + s − m < 0`, which no consumption plan can realize.
    InfeasibleNet { z: f64, s: f64, m: f64 },
}

impl fmt::Display for ConsumerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsumerError::NegativeDemand { x } => write!(f, "negative demand x = {x}"),
            ConsumerError::InfeasibleNet { z, s, m } => {
                write!(f, "net consumption z = {z} is below m - s = {}", m - s)
            }
        }
    }
}

impl core::error::Error for ConsumerError {}

/// Convenience `C(x)` for willingness `omega` and elasticity `alpha > 0`.
pub fn convenience(x: f64, omega: f64, alpha: f64) -> Result<f64, ConsumerError> {
    debug_assert!(alpha > 0.0, "alpha must be positive");
    if x < 0.0 {
        return Err(ConsumerError::NegativeDemand { x });
    }
    Ok(if x <= omega / alpha { omega * x - 0.5 * alpha * x * x } else { omega * omega / (2.0 * alpha) })
}

/// Utility `U(x) = C(x) − price·x` at total unit price `price`.
pub fn utility(x: f64, omega: f64, price: f64, alpha: f64) -> Result<f64, ConsumerError> {
    Ok(convenience(x, omega, alpha)? - price * x)
}

/// Utility-maximizing elastic demand `max(0, (omega − price)/alpha)`.
///
/// Assumes `price ≥ 0`; for negative prices the utility has no maximizer.
pub fn best_response(omega: f64, price: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0, "alpha must be positive");
    ((omega - price) / alpha).max(0.0)
}

/// Optimal prosumer plan: net grid consumption and its split into
/// purchased and sold-back energy (never both nonzero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProsumerResponse {
    /// Net consumption `Z = m − s + max(0, (ω − P)/α)`.
    pub net: f64,
    /// Energy bought from the grid, `X = max(Z, 0)`.
    pub purchase: f64,
    /// Energy sold back to the grid, `Y = max(−Z, 0)`.
    pub sellback: f64,
}

/// Net-metering best response for a prosumer with inelastic demand `m`
/// and local generation `s`, facing total unit price `price`.
pub fn prosumer_best_response(
    omega: f64,
    price: f64,
    alpha: f64,
    m: f64,
    s: f64,
) -> ProsumerResponse {
    let net = m - s + best_response(omega, price, alpha);
    ProsumerResponse { net, purchase: net.max(0.0), sellback: (-net).max(0.0) }
}

/// Prosumer utility `C(z + s − m) − price·z` at net consumption `z`.
///
/// Fails if `z + s − m < 0`: the elastic consumption implied by `z`
/// would be negative. Since callers typically build `z` as `m − s + x`,
/// the re-derived `z + s − m` can dip a few ulps below zero; such
/// cancellation noise is clamped to zero rather than rejected.
pub fn prosumer_utility(
    z: f64,
    omega: f64,
    price: f64,
    alpha: f64,
    m: f64,
    s: f64,
) -> Result<f64, ConsumerError> {
    let elastic = z + s - m;
    let tol = 1e-9 * (1.0 + z.abs() + s.abs() + m.abs());
    if elastic < -tol {
        return Err(ConsumerError::InfeasibleNet { z, s, m });
    }
    Ok(convenience(elastic.max(0.0), omega, alpha)? - price * z)
}
