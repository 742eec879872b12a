use thiserror::Error;

/// Errors surfaced by configuration checks and protocol post-processing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("significance level must lie strictly between 0 and 1, got {0}")]
    InvalidSignificance(f64),

    #[error("round count must be at least 1")]
    ZeroRounds,

    #[error("round {index} is not a key round (disposition {disposition})")]
    NotKeyRound { index: usize, disposition: String },

    #[error("photon state is not normalized: |a|² + |b|² = {0}")]
    NotNormalized(f64),

    #[error("amplitude component is not finite: {0}")]
    NonFiniteAmplitude(f64),

    #[error("invalid eavesdropper strategy {0:?}: expected `none` or `intercept:<route|interference>:<p>`")]
    InvalidStrategy(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
