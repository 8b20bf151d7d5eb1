use thiserror::Error;

/// Errors produced by the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular input: {0}")]
    Singular(String),

    #[error(
        "momentum ladder truncated: population {population:.3e} within 4 sites of the \
         n_max = {n_max} boundary; rerun with a larger n_max"
    )]
    Truncation { n_max: usize, population: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("undefined scaled ordinate: N*V_tilde = {0}")]
    UndefinedOrdinate(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
