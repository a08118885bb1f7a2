use thiserror::Error;

/// Errors produced by the solver, the constant evaluators and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("density has a negative or non-finite value {value} at cell {index}")]
    InvalidDensity { index: usize, value: f64 },

    #[error("masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("density has zero mass")]
    ZeroMass,

    #[error("density cap infeasible: mass {mass} exceeds cap capacity {capacity}")]
    CapInfeasible { mass: f64, capacity: f64 },

    #[error("step size {tau} is not below the reaction limit {limit}")]
    StepTooLarge { tau: f64, limit: f64 },

    #[error("chemotactic sensitivity {lambda_chi} (lambda * chi) is not below chi_star = {chi_star}")]
    ChiAboveThreshold { lambda_chi: f64, chi_star: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{0} requires the 1d quantile backend")]
    RequiresQuantileBackend(&'static str),

    #[error("threshold violated: {0}")]
    ThresholdViolation(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}
