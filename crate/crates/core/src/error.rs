use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid path loss model: {0}")]
    InvalidModel(String),

    #[error("invalid network parameters: {0}")]
    InvalidParams(String),

    /// Adaptive quadrature hit its subdivision budget. `lo..hi` is the panel
    /// that carried the largest error estimate when it gave up.
    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {estimate:e}, tolerance {tolerance:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("2F1({a}, {b}; {c}; {z}) is outside the supported family (a = 1, c = b + 1, b > 0, z <= 0)")]
    UnsupportedHypergeometric { a: f64, b: f64, c: f64, z: f64 },

    #[error("no interior coverage peak on [{lo}, {hi}]")]
    NoInteriorPeak { lo: f64, hi: f64 },

    #[error("monte carlo: {0}")]
    MonteCarlo(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("configuration error: {0}")]
    Config(String),
}
