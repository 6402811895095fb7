//! Joint transmit-waveform / receive-filter design for radar systems whose
//! receivers quantize to one bit.
//!
//! With a one-bit receiver, interference statistics are observable only as
//! normalized (unit-diagonal) covariance matrices recovered through the
//! arcsine law. The design loop here alternates a fractional-programming
//! waveform step over unimodular sequences with a closed-form filter step
//! whose covariance is rebuilt from the normalized measurements by an
//! alternating scale fit. Exact-statistics (`crew_cyclic`) and
//! interference-blind (`can_mmf`) baselines plus a Monte-Carlo sweep
//! harness support MSE-versus-length comparisons between the approaches.
//!
//! Modules:
//! - [`model`]: shift operators, clutter/interference covariances, MSE,
//!   closed-form mismatched filter, jamming spectra, initial sequences.
//! - [`onebit`]: snapshot simulation, complex sign quantization, arcsine
//!   recovery, normalization.
//! - [`uqp`]: fractional programming over unimodular sequences via
//!   phase-projection power iterations.
//! - [`scalefit`]: the alternating `(d, a, beta)` fit, scale second-moment
//!   accumulation, and the `Q = E{d d^H} ⊙ Rbar` reconstruction.
//! - [`design`]: the design algorithms and baselines.
//! - [`sweep`]: seeded Monte-Carlo sweeps and report emission.

pub mod design;
pub mod error;
pub mod model;
pub mod onebit;
pub mod scalefit;
pub mod scenario;
pub mod seed;
pub mod sweep;
pub mod types;
pub mod uqp;

pub use design::{
    can_design, can_mmf, crew_cyclic, crew_onebit, evaluate_true_mse, run_algorithm, Algorithm,
    DesignOutcome,
};
pub use error::{Error, Result};
pub use scenario::{Jamming, ScenarioConfig, Tolerances};
pub use sweep::{emit_report, run_sweep, run_sweep_sequential, ResultsTable, SweepConfig};
pub use types::{
    CovarianceRole, HermitianCovariance, NormalizedCovariance, ReceiveFilter, Waveform, C64,
};
