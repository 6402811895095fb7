//! Joint design algorithms and baselines.
//!
//! `crew_onebit` alternates a fractional-programming waveform step with a
//! filter step whose covariance is reconstructed from one-bit (normalized)
//! measurements; `crew_cyclic` is the exact-statistics baseline using the
//! same waveform step with the true interference covariance and the exact
//! closed-form filter; `can_mmf` designs the waveform by sidelobe
//! minimization alone and filters with exact statistics.
//!
//! All randomness is derived from the scenario seed, so every algorithm is
//! bit-for-bit deterministic for a fixed scenario.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    clutter_matrix, golomb, interference_covariance, isl, mmf, mse, received_covariance,
};
use crate::onebit::{estimate_normalized, normalize};
use crate::scalefit::{build_q, fit, update_moment, FitInit, FitOptions, MomentEstimate};
use crate::scenario::ScenarioConfig;
use crate::seed::derive_seed;
use crate::types::{HermitianCovariance, NormalizedCovariance, ReceiveFilter, Waveform, C64};
use crate::uqp::{dinkelbach_s_step, mu_estimate, SStepOptions};

/// Design algorithms available to the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "crew-onebit")]
    CrewOneBit,
    #[serde(rename = "crew-cyclic")]
    CrewCyclic,
    #[serde(rename = "can-mmf")]
    CanMmf,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::CrewOneBit => "crew-onebit",
            Algorithm::CrewCyclic => "crew-cyclic",
            Algorithm::CanMmf => "can-mmf",
        }
    }

    pub fn all() -> [Algorithm; 3] {
        [
            Algorithm::CrewOneBit,
            Algorithm::CrewCyclic,
            Algorithm::CanMmf,
        ]
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crew-onebit" => Ok(Algorithm::CrewOneBit),
            "crew-cyclic" => Ok(Algorithm::CrewCyclic),
            "can-mmf" => Ok(Algorithm::CanMmf),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected crew-onebit, crew-cyclic, or can-mmf)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one design run: the designed pair, the true-MSE trajectory
/// (index 0 is the initial point), and convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub s: Waveform,
    pub w: ReceiveFilter,
    pub mse_trajectory: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub algorithm: Algorithm,
}

/// Unit-norm complex Gaussian filter initialization.
fn random_filter(n: usize, seed: u64) -> ReceiveFilter {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    ReceiveFilter::new(v / C64::new(norm, 0.0)).expect("nonzero Gaussian draw")
}

fn strip_scale(bar: &NormalizedCovariance) -> Result<NormalizedCovariance> {
    NormalizedCovariance::new(bar.matrix().clone(), None)
}

/// Joint design from one-bit statistics. Covariances enter only in
/// normalized form (analytic in oracle mode, sample-estimated otherwise);
/// the unknown scales are recovered by the alternating fit, accumulated
/// into the second moment, and folded into the filter covariance
/// `Q = E{d d^H} ⊙ Rbar`. Convergence is declared on the algorithm's own
/// estimated objective `w^H Q w / |w^H s|^2`; the recorded trajectory is
/// the true MSE, used for scoring only.
pub fn crew_onebit(scenario: &ScenarioConfig) -> Result<DesignOutcome> {
    scenario.validate()?;
    let n = scenario.n;
    let tols = &scenario.tolerances;
    let s_opts = SStepOptions::from(tols);
    let fit_opts = FitOptions::from(tols);

    let gamma = interference_covariance(scenario)?;
    let gamma_bar_true = normalize(&gamma)?;

    let mut s = golomb(n)?;
    let mut w = random_filter(n, derive_seed(scenario.seed, "w-init", 0));

    // Bootstrap: listen-only measurement of Gammabar before the first
    // waveform step; the scales are unobservable through one bit, so the
    // first mu uses unit scale and unit clutter power.
    let mut gamma_bar = if scenario.oracle_mode {
        strip_scale(&gamma_bar_true)?
    } else {
        estimate_normalized(&gamma, scenario.snapshots, derive_seed(scenario.seed, "listen", 0))?
    };
    let mut a_est = DVector::from_element(n, 1.0);
    let mut beta_est = 1.0;
    let mut warm_start: Option<FitInit> = None;
    let mut moment = MomentEstimate::new(n);

    let r0 = received_covariance(&s, scenario.beta, &gamma)?;
    let mut trajectory = vec![mse(&w, &s, &r0)?];
    let mut previous_objective: Option<f64> = None;
    let mut converged = false;
    let mut outer_iterations = 0;

    for t in 0..tols.design_cap {
        outer_iterations = t + 1;

        // Waveform step for the current filter.
        let mu = mu_estimate(&w, &gamma_bar, &a_est, beta_est)?;
        s = dinkelbach_s_step(&w, &s, mu, &s_opts)?;

        // Measure under the new waveform.
        let r_true = received_covariance(&s, scenario.beta, &gamma)?;
        let r_bar = if scenario.oracle_mode {
            strip_scale(&normalize(&r_true)?)?
        } else {
            estimate_normalized(
                &r_true,
                scenario.snapshots,
                derive_seed(scenario.seed, "receive", t as u64),
            )?
        };
        if !scenario.oracle_mode {
            gamma_bar = estimate_normalized(
                &gamma,
                scenario.snapshots,
                derive_seed(scenario.seed, "listen", t as u64 + 1),
            )?;
        }

        // Filter step: recover scales, accumulate the moment, rebuild Q.
        let s_clutter = clutter_matrix(s.entries())?;
        let init = warm_start.take().unwrap_or_else(|| FitInit::heuristic(&s_clutter));
        let fitted = fit(&r_bar, &gamma_bar, &s_clutter, &init, &fit_opts)?;
        a_est = fitted.a.clone();
        beta_est = fitted.beta;
        moment = update_moment(&moment, &fitted.d)?;
        warm_start = Some(FitInit {
            d: fitted.d,
            a: fitted.a,
            beta: fitted.beta,
        });
        let q = build_q(&moment, &r_bar)?;
        w = mmf(&q, &s)?;

        trajectory.push(mse(&w, &s, &r_true)?);
        let objective = mse(&w, &s, &q)?;
        if let Some(previous) = previous_objective {
            if (objective - previous).abs() < tols.design_eps {
                converged = true;
            }
        }
        previous_objective = Some(objective);
        if converged {
            break;
        }
    }

    Ok(DesignOutcome {
        s,
        w,
        mse_trajectory: trajectory,
        outer_iterations,
        converged,
        algorithm: Algorithm::CrewOneBit,
    })
}

/// Exact-statistics baseline: the same waveform step driven by the exact
/// `mu = w^H Gamma w / beta`, alternated with the exact closed-form filter
/// `w = R(s)^{-1} s`. The true-MSE trajectory is nonincreasing.
pub fn crew_cyclic(scenario: &ScenarioConfig) -> Result<DesignOutcome> {
    scenario.validate()?;
    let n = scenario.n;
    let tols = &scenario.tolerances;
    let s_opts = SStepOptions::from(tols);

    let gamma = interference_covariance(scenario)?;
    let mut s = golomb(n)?;
    let mut w = random_filter(n, derive_seed(scenario.seed, "w-init", 0));

    let r0 = received_covariance(&s, scenario.beta, &gamma)?;
    let mut trajectory = vec![mse(&w, &s, &r0)?];
    let mut converged = false;
    let mut outer_iterations = 0;

    for t in 0..tols.design_cap {
        outer_iterations = t + 1;
        let mu = {
            let wv = w.entries();
            wv.dotc(&(gamma.matrix() * wv)).re.max(0.0) / scenario.beta
        };
        s = dinkelbach_s_step(&w, &s, mu, &s_opts)?;
        let r = received_covariance(&s, scenario.beta, &gamma)?;
        w = mmf(&r, &s)?;
        let value = mse(&w, &s, &r)?;
        let previous = *trajectory.last().expect("nonempty trajectory");
        trajectory.push(value);
        if (previous - value).abs() < tols.design_eps {
            converged = true;
            break;
        }
    }

    Ok(DesignOutcome {
        s,
        w,
        mse_trajectory: trajectory,
        outer_iterations,
        converged,
        algorithm: Algorithm::CrewCyclic,
    })
}

/// Cyclic sidelobe-level minimization of a unimodular sequence: alternate
/// between the 2N-point spectrum phase projection and the time-domain phase
/// projection, tracking the best sidelobe level seen. The output never has
/// a larger sidelobe level than the input.
pub fn can_design(s0: &Waveform, tol: f64, cap: usize) -> Waveform {
    let n = s0.len();
    if n == 1 {
        return s0.clone();
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(2 * n);
    let inverse = planner.plan_fft_inverse(2 * n);
    let sqrt_n = (n as f64).sqrt();

    let mut current = s0.clone();
    let mut best = s0.clone();
    let mut best_level = isl(s0);
    let mut previous_level = best_level;

    for _ in 0..cap {
        let mut buffer: Vec<C64> = current
            .entries()
            .iter()
            .cloned()
            .chain(std::iter::repeat(C64::new(0.0, 0.0)))
            .take(2 * n)
            .collect();
        forward.process(&mut buffer);
        for z in buffer.iter_mut() {
            let m = z.norm();
            *z = if m > 0.0 {
                *z / C64::new(m / sqrt_n, 0.0)
            } else {
                C64::new(sqrt_n, 0.0)
            };
        }
        inverse.process(&mut buffer);
        let entries = DVector::from_fn(n, |i, _| {
            let m = buffer[i].norm();
            if m > 0.0 {
                buffer[i] / C64::new(m, 0.0)
            } else {
                current.entries()[i]
            }
        });
        current = Waveform::new(entries).expect("phase projection yields unit modulus");

        let level = isl(&current);
        if level < best_level {
            best_level = level;
            best = current.clone();
        }
        if (previous_level - level).abs() <= tol * previous_level.max(1e-300) {
            break;
        }
        previous_level = level;
    }
    best
}

/// Interference-blind waveform baseline: sidelobe-minimized sequence plus
/// the exact-statistics filter, single shot.
pub fn can_mmf(scenario: &ScenarioConfig) -> Result<DesignOutcome> {
    scenario.validate()?;
    let tols = &scenario.tolerances;
    let gamma = interference_covariance(scenario)?;
    let s = can_design(&golomb(scenario.n)?, tols.can_tol, tols.can_cap);
    let r = received_covariance(&s, scenario.beta, &gamma)?;
    let w = mmf(&r, &s)?;
    let value = mse(&w, &s, &r)?;
    Ok(DesignOutcome {
        s,
        w,
        mse_trajectory: vec![value],
        outer_iterations: 1,
        converged: true,
        algorithm: Algorithm::CanMmf,
    })
}

/// True MSE of a designed pair under the scenario's ground-truth
/// covariance; all cross-algorithm comparisons use this so estimated
/// statistics never contaminate scoring.
pub fn evaluate_true_mse(outcome: &DesignOutcome, scenario: &ScenarioConfig) -> Result<f64> {
    if outcome.s.len() != scenario.n {
        return Err(Error::Dimension(format!(
            "outcome length {} vs scenario n {}",
            outcome.s.len(),
            scenario.n
        )));
    }
    let gamma = interference_covariance(scenario)?;
    let r = received_covariance(&outcome.s, scenario.beta, &gamma)?;
    mse(&outcome.w, &outcome.s, &r)
}

/// Dispatch helper used by the sweep runner and the CLI.
pub fn run_algorithm(algorithm: Algorithm, scenario: &ScenarioConfig) -> Result<DesignOutcome> {
    match algorithm {
        Algorithm::CrewOneBit => crew_onebit(scenario),
        Algorithm::CrewCyclic => crew_cyclic(scenario),
        Algorithm::CanMmf => can_mmf(scenario),
    }
}
