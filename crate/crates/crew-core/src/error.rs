//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shift offset {k} out of range for length {n} (|k| must be < n)")]
    ShiftOutOfRange { k: isize, n: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix (role {role}) is not positive semidefinite: lambda_min = {lambda_min:.3e}, lambda_max = {lambda_max:.3e}")]
    NotPositiveSemidefinite {
        role: &'static str,
        lambda_min: f64,
        lambda_max: f64,
    },

    #[error("matrix numerically singular even after diagonal loading")]
    IllConditioned,

    #[error("degenerate filter: |w^H s| = {inner:.3e} below tolerance {tolerance:.3e}")]
    DegenerateFilter { inner: f64, tolerance: f64 },

    #[error("degenerate denominator: s^H W s = {value:.3e} too small relative to the problem scale")]
    DegenerateDenominator { value: f64 },

    #[error("waveform entry {index} has modulus {modulus} (unimodular to 1e-12 required)")]
    NotUnimodular { index: usize, modulus: f64 },

    #[error("covariance diagonal entry {index} is {value:.3e}; strictly positive required")]
    NonpositiveDiagonal { index: usize, value: f64 },

    #[error("scale entry {index} is {value:.3e}; strictly positive required")]
    NonpositiveScale { index: usize, value: f64 },

    #[error("jamming spectrum entry {index} is negative ({value:.3e})")]
    NegativeSpectrum { index: usize, value: f64 },

    #[error("normalized-covariance entry magnitude {value} exceeds the correlation bound 1")]
    CorrelationBound { value: f64 },

    #[error("sign-covariance entry part {value} outside [-1, 1] beyond the 1e-6 estimation slack")]
    EstimationInconsistency { value: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("all sweep cells failed; first error: {0}")]
    AllCellsFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
