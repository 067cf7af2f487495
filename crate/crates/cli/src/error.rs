//! CLI error type: every failure carries a stable error-code string and
//! the process exit code it maps to.

use std::fmt;
use std::path::Path;

use gridprice_core::experiments::ExperimentError;
use gridprice_core::formulations::FormulationError;
use gridprice_core::scenario::ScenarioError;

/// Exit code for domain errors (bad data, infeasible problems, solver
/// failures, malformed files).
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for usage errors (bad flags, malformed flag values).
pub const EXIT_USAGE: i32 = 2;

/// A command failure: stable code, human message, exit code.
///
/// Codes are part of the CLI contract and never change meaning:
///
/// | code | source |
/// |---|---|
/// | `WEIGHTS_INVALID` | weights violate their invariants |
/// | `WEIGHTS_DEGENERATE` | closed-form denominator is zero |
/// | `ENV_INVALID` | base price / cap / spread bound out of range |
/// | `ENV_INFEASIBLE` | base price exceeds some willingness |
/// | `ORACLE_TOO_MANY_USERS` | grid search is exponential in users |
/// | `GRID_STEP_INVALID` | oracle grid step not positive and finite |
/// | `PERIOD_OUT_OF_RANGE` | period index past the scenario |
/// | `QP_REJECTED` | lowered problem failed QP validation |
/// | `SOLVER_FAILED` | solver stopped without an optimality certificate |
/// | `GRID_INVALID` | sweep grid empty or not ascending |
/// | `SCENARIO_INVALID` | scenario data violates its invariants |
/// | `SCHEMA` | JSON file does not match the published schema |
/// | `IO` | file could not be read or written |
/// | `UNSUPPORTED` | valid flag value not supported by this command |
/// | `VALIDATE_MISMATCH` | stored outcome disagrees with a fresh solve |
/// | `VALIDATE_FAIRNESS` | stored prices violate willingness monotonicity |
/// | `VALIDATE_KKT` | KKT residuals exceed tolerance |
/// | `USAGE` | malformed invocation detected after flag parsing |
#[derive(Debug)]
pub struct CliError {
    code: &'static str,
    message: String,
    exit: i32,
}

impl CliError {
    /// A domain error (exit 1) with an explicit code.
    pub fn domain(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, message: message.into(), exit: EXIT_DOMAIN }
    }

    /// A usage error (exit 2) detected after clap parsing.
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: "USAGE", message: message.into(), exit: EXIT_USAGE }
    }

    /// A file IO failure, with the path in the message.
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::domain("IO", format!("{}: {err}", path.display()))
    }

    /// A schema violation at `field` (dotted path into the JSON document).
    pub fn schema(path: &Path, field: &str, detail: impl fmt::Display) -> Self {
        CliError::domain("SCHEMA", format!("{}: {field}: {detail}", path.display()))
    }

    pub fn code(&self) -> &'static str {
        self.code
    }

    pub fn message(&self) -> &str {
        &self.message
    }

    pub fn exit_code(&self) -> i32 {
        self.exit
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<FormulationError> for CliError {
    fn from(e: FormulationError) -> Self {
        let code = match &e {
            FormulationError::InvalidWeights { .. } => "WEIGHTS_INVALID",
            FormulationError::DegenerateWeights => "WEIGHTS_DEGENERATE",
            FormulationError::InvalidEnv => "ENV_INVALID",
            FormulationError::InfeasibleEnv { .. } => "ENV_INFEASIBLE",
            FormulationError::TooManyUsers { .. } => "ORACLE_TOO_MANY_USERS",
            FormulationError::InvalidGrid { .. } => "GRID_STEP_INVALID",
            FormulationError::BadPeriod { .. } => "PERIOD_OUT_OF_RANGE",
            FormulationError::Qp(_) => "QP_REJECTED",
            FormulationError::Solver { .. } => "SOLVER_FAILED",
        };
        CliError::domain(code, e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Grid { .. } => CliError::domain("GRID_INVALID", e.to_string()),
            ExperimentError::Solve(inner) => inner.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::domain("SCENARIO_INVALID", e.to_string())
    }
}
