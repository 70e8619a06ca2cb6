use thiserror::Error;

/// Errors raised by the library. Solver aborts (blow-up, vacuum) are not
/// errors: they are recorded in a [`crate::solver::SolveReport`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("state not admissible: {0}")]
    Admissibility(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid distribution spec: {0}")]
    Distribution(String),

    #[error("partition too large: {cells} cells exceeds limit {limit}")]
    PartitionSize { cells: u128, limit: usize },

    #[error("ensemble pairing mismatch: {0}")]
    Pairing(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("picard iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("vacuum: density {min_density:e} at t = {time}")]
    Vacuum { min_density: f64, time: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("toml: {0}")]
    Toml(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
