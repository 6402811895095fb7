//! Experiment configuration: scenario parameters, jamming descriptions, and
//! the iteration caps / tolerances of every loop in the pipeline.
//!
//! Configs are plain JSON documents. Unknown keys are a hard error so that a
//! typo in an experiment definition cannot silently fall back to a default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jamming power-spectrum description on the normalized frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Jamming {
    /// No jamming; the spectrum is identically zero.
    None,
    /// Concentrated power at a single normalized frequency `f0 in [0, 1)`.
    Spot { f0: f64 },
    /// Power spread uniformly over the normalized band `[f1, f2]`.
    Barrage { f1: f64, f2: f64 },
}

impl Jamming {
    pub fn label(&self) -> &'static str {
        match self {
            Jamming::None => "none",
            Jamming::Spot { .. } => "spot",
            Jamming::Barrage { .. } => "barrage",
        }
    }
}

/// Iteration caps and tolerances for every loop, all explicit and defaulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Outer-loop stop: |objective(t+1) - objective(t)| < eps.
    pub design_eps: f64,
    /// Outer-loop iteration cap for the alternating designs.
    pub design_cap: usize,
    /// Fractional-programming stop: relative objective decrease below this.
    pub fractional_tol: f64,
    /// Fractional-programming outer iteration cap.
    pub fractional_cap: usize,
    /// Power-iteration stop: relative quadratic-form increase below this.
    pub power_tol: f64,
    /// Power-iteration cap per fractional step.
    pub power_cap: usize,
    /// Scale-fit stop: relative objective decrease per sweep below this.
    pub fit_tol: f64,
    /// Scale-fit sweep cap.
    pub fit_sweep_cap: usize,
    /// Projected-gradient iterations per block visit inside the scale fit.
    pub fit_block_iters: usize,
    /// Sidelobe-minimization stop: relative sidelobe-level change below this.
    pub can_tol: f64,
    /// Sidelobe-minimization iteration cap.
    pub can_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            design_eps: 1e-5,
            design_cap: 50,
            fractional_tol: 1e-6,
            fractional_cap: 100,
            power_tol: 1e-8,
            power_cap: 1000,
            fit_tol: 1e-8,
            fit_sweep_cap: 500,
            fit_block_iters: 25,
            can_tol: 1e-6,
            can_cap: 10_000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let caps = [
            ("design_cap", self.design_cap),
            ("fractional_cap", self.fractional_cap),
            ("power_cap", self.power_cap),
            ("fit_sweep_cap", self.fit_sweep_cap),
            ("fit_block_iters", self.fit_block_iters),
            ("can_cap", self.can_cap),
        ];
        for (name, cap) in caps {
            if cap == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let tols = [
            ("design_eps", self.design_eps),
            ("fractional_tol", self.fractional_tol),
            ("power_tol", self.power_tol),
            ("fit_tol", self.fit_tol),
            ("can_tol", self.can_tol),
        ];
        for (name, tol) in tols {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// One experiment: sequence length, interference description, measurement
/// budget, and determinism seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Transmit-sequence length N.
    pub n: usize,
    /// Average clutter power per adjacent range cell.
    pub beta: f64,
    /// White-noise power.
    pub sigma2: f64,
    /// Jamming power.
    pub sigma_j2: f64,
    pub jamming: Jamming,
    /// One-bit snapshots per covariance measurement.
    pub snapshots: usize,
    /// When true, normalized covariances are computed analytically instead of
    /// estimated from one-bit samples (scales stay hidden either way).
    pub oracle_mode: bool,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 25,
            beta: 1.0,
            sigma2: 0.1,
            sigma_j2: 100.0,
            jamming: Jamming::Spot { f0: 0.2 },
            snapshots: 10_000,
            oracle_mode: true,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    /// Spot-jamming benchmark scenario (sigma_J^2 = 100, sigma^2 = 0.1,
    /// beta = 1, f0 = 0.2).
    pub fn spot(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    /// Barrage-jamming benchmark scenario over the band [0.2, 0.3].
    pub fn barrage(n: usize) -> Self {
        Self {
            n,
            jamming: Jamming::Barrage { f1: 0.2, f2: 0.3 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("beta must be positive".into()));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::Config("sigma2 must be positive".into()));
        }
        if !(self.sigma_j2 >= 0.0) {
            return Err(Error::Config("sigma_j2 must be nonnegative".into()));
        }
        match self.jamming {
            Jamming::None => {}
            Jamming::Spot { f0 } => {
                if !(0.0..1.0).contains(&f0) {
                    return Err(Error::Config(format!("spot f0 = {f0} outside [0, 1)")));
                }
            }
            Jamming::Barrage { f1, f2 } => {
                if !(0.0 <= f1 && f1 < f2 && f2 < 1.0) {
                    return Err(Error::Config(format!(
                        "barrage band [{f1}, {f2}] must satisfy 0 <= f1 < f2 < 1"
                    )));
                }
            }
        }
        if self.snapshots == 0 {
            return Err(Error::Config("snapshots must be >= 1".into()));
        }
        self.tolerances.validate()
    }
}
