use thiserror::Error;

/// Errors raised by the modelling, estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument falls outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A queueing scenario has utilization at or above one.
    #[error("unstable scenario: utilization {rho:.4} >= 1")]
    Unstable { rho: f64 },

    /// Input data could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
