//! Power prediction and explanation toolkit for radio access network
//! telemetry.
//!
//! The crate ingests per-interval telemetry CSVs, trains tree-ensemble
//! regressors (random forest, first-order gradient boosting, second-order
//! boosting) that map telemetry features to power draw in watts, attributes
//! individual predictions to features with Shapley-value and LIME engines,
//! renders the attributions as SVG artifacts, and drives a simulated RAN
//! controller loop that turns attributions into parameter recommendations.
//!
//! Every stochastic step runs on seeded ChaCha8 streams, so identical
//! inputs and seeds reproduce identical models, explanations, and artifact
//! bytes.

pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod explain;
pub mod pipeline;
pub mod report;
pub mod ric;
pub mod rng;
pub mod synth;
pub mod tree;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// A caller-supplied value or combination of values is unusable.
    #[error("{0}")]
    InvalidInput(String),
    /// A vector or matrix has the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    /// A serialized model, attribution, or config could not be decoded.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InvalidInput`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Shorthand for [`Error::Parse`].
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
