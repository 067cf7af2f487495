//! JSON persistence for scenarios and pricing outcomes.
//!
//! Scenario files are a single JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "label": "reference-19-20",
//!   "seed": 19,
//!   "n_users": 2,
//!   "n_periods": 6,
//!   "p_b": 1.0,
//!   "P_cap": 10.0,
//!   "consumers": [ { "alpha": 2.0, "omega": [..], "m": [..], "s": [..] } ]
//! }
//! ```
//!
//! Unknown fields are rejected; schema errors name the offending field by
//! its dotted path (e.g. `consumers[0].alpha`). Numbers round-trip
//! bitwise: serialization uses shortest-round-trip decimals, so
//! `load(save(s)) == s` exactly.
//!
//! Outcome files mirror [`PricingOutcome`] field by field, plus a
//! `context` block recording what produced them (period, weights, spread
//! bound, oracle grid step) so `validate` can re-run the solve. A spread
//! bound of `null` means unbounded.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gridprice_core::formulations::{
    EtaBound, Formulation, FormulationError, PricingOutcome, Weights,
};
use gridprice_core::scenario::{ConsumerProfile, Scenario};

use crate::error::CliError;

/// Version tag written to (and required of) every persisted file.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    label: String,
    seed: u64,
    n_users: usize,
    n_periods: usize,
    p_b: f64,
    #[serde(rename = "P_cap")]
    p_cap: f64,
    consumers: Vec<ConsumerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsumerFile {
    alpha: f64,
    omega: Vec<f64>,
    m: Vec<f64>,
    s: Vec<f64>,
}

/// Renders a scenario as its JSON document (pretty-printed, trailing
/// newline). The scenario must already satisfy [`Scenario::validate`].
pub fn scenario_to_json(scenario: &Scenario) -> Result<String, CliError> {
    scenario.validate()?;
    let file = ScenarioFile {
        version: SCHEMA_VERSION,
        label: scenario.label.clone(),
        seed: scenario.seed,
        n_users: scenario.n_users,
        n_periods: scenario.n_periods,
        p_b: scenario.base_price,
        p_cap: scenario.price_cap,
        consumers: scenario
            .consumers
            .iter()
            .map(|c| ConsumerFile {
                alpha: c.alpha,
                omega: c.omega.clone(),
                m: c.m.clone(),
                s: c.s.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::domain("SCHEMA", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes a scenario to `path`.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), CliError> {
    let text = scenario_to_json(scenario)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Parses a scenario document, naming the offending field on schema
/// violations. `origin` is used in error messages only.
pub fn scenario_from_json(text: &str, origin: &Path) -> Result<Scenario, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| schema_error(origin, &e))?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::schema(
            origin,
            "version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.version),
        ));
    }
    if file.consumers.len() != file.n_users {
        return Err(CliError::schema(
            origin,
            "n_users",
            format!("declares {} users but `consumers` has {}", file.n_users, file.consumers.len()),
        ));
    }
    let scenario = Scenario {
        label: file.label,
        seed: file.seed,
        n_users: file.n_users,
        n_periods: file.n_periods,
        base_price: file.p_b,
        price_cap: file.p_cap,
        consumers: file
            .consumers
            .into_iter()
            .map(|c| ConsumerProfile { alpha: c.alpha, omega: c.omega, m: c.m, s: c.s })
            .collect(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    scenario_from_json(&text, path)
}

/// Builds the dotted field path for a deserialization error. The path
/// tracker stops at the innermost container, so for "missing field" and
/// "unknown field" errors the field name is appended from the message.
fn schema_error(origin: &Path, err: &serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let mut field = err.path().to_string();
    if field == "." {
        field.clear();
    }
    let message = err.inner().to_string();
    for prefix in ["missing field `", "unknown field `"] {
        if let Some(rest) = message.strip_prefix(prefix) {
            if let Some(name) = rest.split('`').next() {
                if field.is_empty() {
                    field = name.to_string();
                } else {
                    field = format!("{field}.{name}");
                }
            }
        }
    }
    if field.is_empty() {
        field = "<document>".to_string();
    }
    CliError::schema(origin, &field, err.inner())
}

/// The `context` block of an outcome file: everything besides the
/// scenario needed to reproduce the solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeContext {
    /// Label of the scenario the solve ran on (cross-checked by
    /// `validate`).
    pub scenario_label: String,
    pub period: usize,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub gamma: f64,
    /// Spread bound; `null` means unbounded.
    pub eta: Option<f64>,
    /// Oracle grid step; absent for QP formulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

/// A persisted solve result: [`PricingOutcome`] fields verbatim plus the
/// reproduction context.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeFile {
    pub version: u32,
    pub context: OutcomeContext,
    pub formulation: String,
    pub prices: Vec<f64>,
    pub demands: Vec<f64>,
    pub revenue: f64,
    pub cost_term: f64,
    pub welfare_penalty: f64,
    pub objective: f64,
}

impl OutcomeFile {
    pub fn new(
        outcome: &PricingOutcome,
        scenario: &Scenario,
        period: usize,
        weights: &Weights,
        eta: EtaBound,
        grid_step: Option<f64>,
    ) -> Self {
        OutcomeFile {
            version: SCHEMA_VERSION,
            context: OutcomeContext {
                scenario_label: scenario.label.clone(),
                period,
                e1: weights.e1,
                e2: weights.e2,
                e3: weights.e3,
                gamma: weights.gamma,
                eta: match eta {
                    EtaBound::Bounded(v) => Some(v),
                    EtaBound::Unbounded => None,
                },
                grid_step,
            },
            formulation: outcome.formulation.to_string(),
            prices: outcome.prices.clone(),
            demands: outcome.demands.clone(),
            revenue: outcome.revenue,
            cost_term: outcome.cost_term,
            welfare_penalty: outcome.welfare_penalty,
            objective: outcome.objective,
        }
    }

    /// Reconstructs the solve parameters recorded in the context.
    pub fn solve_parameters(&self) -> Result<(Formulation, Weights, EtaBound), CliError> {
        let formulation = crate::parse_formulation(&self.formulation)
            .map_err(|e| CliError::domain("SCHEMA", format!("formulation: {e}")))?;
        let weights = Weights::new(self.context.e1, self.context.e2, self.context.e3)
            .and_then(|w| w.with_gamma(self.context.gamma))
            .map_err(CliError::from)?;
        let eta = match self.context.eta {
            Some(v) if v.is_finite() && v >= 0.0 => EtaBound::Bounded(v),
            Some(v) => {
                return Err(CliError::from(FormulationError::InvalidEnv).with_detail(format!(
                    "context.eta must be a nonnegative finite number or null, got {v}"
                )))
            }
            None => EtaBound::Unbounded,
        };
        Ok((formulation, weights, eta))
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::domain("SCHEMA", e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}

impl CliError {
    fn with_detail(self, detail: String) -> CliError {
        CliError::domain(self.code(), detail)
    }
}

/// Writes an outcome file to `path`.
pub fn save_outcome(file: &OutcomeFile, path: &Path) -> Result<(), CliError> {
    fs::write(path, file.to_json()?).map_err(|e| CliError::io(path, e))
}

/// Reads and parses an outcome file.
pub fn load_outcome(path: &Path) -> Result<OutcomeFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let file: OutcomeFile =
        serde_path_to_error::deserialize(&mut de).map_err(|e| schema_error(path, &e))?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::schema(
            path,
            "version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.version),
        ));
    }
    Ok(file)
}
