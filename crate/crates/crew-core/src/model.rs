//! Deterministic radar signal model: shift operators, clutter covariance
//! accumulation, MSE evaluation, closed-form mismatched filtering, jamming
//! spectrum synthesis, and waveform initialization.
//!
//! Conventions: the estimate of the current-cell scattering coefficient is
//! `w^H y / w^H s`, whose mean-square error is `w^H R w / |w^H s|^2` with
//! `R = beta * sum_{k != 0} J_k s s^H J_k^H + Gamma`. `J_k` down-shifts by
//! `k` samples for `k >= 0` and `J_{-k} = J_k^H`.

use nalgebra::{Cholesky, DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::{Jamming, ScenarioConfig};
use crate::types::{CovarianceRole, HermitianCovariance, ReceiveFilter, Waveform, C64};

/// Relative tolerance below which `|w^H s|` counts as a degenerate filter.
pub const FILTER_ALIGN_TOL: f64 = 1e-12;
/// Conditioning threshold triggering diagonal loading before inversion.
const CONDITION_TOL: f64 = 1e-10;
/// Diagonal loading factor, relative to `tr(R)/N`.
const LOADING_FACTOR: f64 = 1e-10;

/// Applies the shift operator `J_k` to a vector without materializing the
/// matrix: `k >= 0` down-shifts (leading `k` zeros), `k < 0` up-shifts
/// (trailing `|k|` zeros).
pub fn shift(v: &DVector<C64>, k: isize) -> Result<DVector<C64>> {
    let n = v.len();
    if k.unsigned_abs() >= n {
        return Err(Error::ShiftOutOfRange { k, n });
    }
    let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
    if k >= 0 {
        let k = k as usize;
        for j in 0..n - k {
            out[j + k] = v[j];
        }
    } else {
        let k = (-k) as usize;
        for j in 0..n - k {
            out[j] = v[j + k];
        }
    }
    Ok(out)
}

/// Accumulates `sum_{k != 0} J_k x x^H J_k^H`. With the waveform this is the
/// unit-power clutter covariance `S`; with the receive filter it is
/// `chi / beta`.
pub fn clutter_matrix(x: &DVector<C64>) -> Result<HermitianCovariance> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Dimension("clutter_matrix needs length >= 1".into()));
    }
    let mut acc = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let one = C64::new(1.0, 0.0);
    for k in 1..n {
        let down = shift(x, k as isize)?;
        let up = shift(x, -(k as isize))?;
        acc.gerc(one, &down, &down, one);
        acc.gerc(one, &up, &up, one);
    }
    HermitianCovariance::new(acc, CovarianceRole::Clutter)
}

/// Mean-square error of the scattering-coefficient estimate,
/// `w^H R w / |w^H s|^2`.
pub fn mse(w: &ReceiveFilter, s: &Waveform, r: &HermitianCovariance) -> Result<f64> {
    let n = s.len();
    if w.len() != n || r.dim() != n {
        return Err(Error::Dimension(format!(
            "mse: filter {}, waveform {}, covariance {}",
            w.len(),
            n,
            r.dim()
        )));
    }
    let wv = w.entries();
    let inner = wv.dotc(s.entries()).norm();
    let tolerance = FILTER_ALIGN_TOL * wv.norm() * s.entries().norm();
    if inner <= tolerance {
        return Err(Error::DegenerateFilter { inner, tolerance });
    }
    let quad = wv.dotc(&(r.matrix() * wv)).re;
    Ok(quad.max(0.0) / (inner * inner))
}

/// Closed-form mismatched filter `w = R^{-1} s`, the minimizer of
/// `w^H R w / |w^H s|^2`. Near-singular covariances get diagonal loading
/// `1e-10 * tr(R)/N` before inversion.
pub fn mmf(r: &HermitianCovariance, s: &Waveform) -> Result<ReceiveFilter> {
    let n = s.len();
    if r.dim() != n {
        return Err(Error::Dimension(format!(
            "mmf: covariance {} vs waveform {}",
            r.dim(),
            n
        )));
    }
    let ev = r.eigenvalues();
    let lambda_min = ev[0];
    let lambda_max = ev[n - 1];
    let mut m = r.matrix().clone();
    if lambda_min <= CONDITION_TOL * lambda_max.max(0.0) {
        let trace: f64 = m.diagonal().iter().map(|d| d.re).sum();
        let load = LOADING_FACTOR * trace / n as f64;
        for i in 0..n {
            m[(i, i)] += C64::new(load, 0.0);
        }
    }
    let chol = Cholesky::new(m).ok_or(Error::IllConditioned)?;
    let w = chol.solve(s.entries());
    ReceiveFilter::new(w)
}

/// Jamming power spectrum on the DFT grid `f_p = p / (2N-1)`,
/// `p = 0..2N-2`. Spot mass snaps to the (circularly) nearest grid point;
/// barrage mass is split equally over the grid points inside the band.
/// The total mass is one so that `sigma_J^2` alone sets the jamming power.
pub fn jamming_spectrum(scenario: &ScenarioConfig) -> Result<Vec<f64>> {
    scenario.validate()?;
    let n = scenario.n;
    let bins = 2 * n - 1;
    let mut eta = vec![0.0; bins];
    match scenario.jamming {
        Jamming::None => {}
        Jamming::Spot { f0 } => {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for (p, slot) in eta.iter().enumerate() {
                let _ = slot;
                let f = p as f64 / bins as f64;
                let d = (f - f0).abs();
                let dist = d.min(1.0 - d);
                if dist < best_dist {
                    best_dist = dist;
                    best = p;
                }
            }
            eta[best] = 1.0;
        }
        Jamming::Barrage { f1, f2 } => {
            let inside: Vec<usize> = (0..bins)
                .filter(|&p| {
                    let f = p as f64 / bins as f64;
                    f >= f1 - 1e-12 && f <= f2 + 1e-12
                })
                .collect();
            if inside.is_empty() {
                return Err(Error::Config(format!(
                    "barrage band [{f1}, {f2}] contains no grid point for n = {n}"
                )));
            }
            let mass = 1.0 / inside.len() as f64;
            for p in inside {
                eta[p] = mass;
            }
        }
    }
    Ok(eta)
}

/// Toeplitz Hermitian jamming covariance from a nonnegative power spectrum:
/// `gamma_m = sum_p eta_p e^{j 2 pi p m / (2N-1)} / (2N-1)` and
/// `[Gamma_J]_{k,l} = gamma_{k-l}`. Nonnegative spectra give a positive
/// semidefinite matrix up to round-off; tiny negative eigenvalues are
/// floored at zero and anything beyond the type slack is an error.
pub fn jamming_covariance(eta: &[f64]) -> Result<HermitianCovariance> {
    let bins = eta.len();
    if bins == 0 || bins % 2 == 0 {
        return Err(Error::Dimension(format!(
            "spectrum length must be odd (2N-1), got {bins}"
        )));
    }
    for (index, &value) in eta.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeSpectrum { index, value });
        }
    }
    let n = (bins + 1) / 2;
    let mut gamma = vec![C64::new(0.0, 0.0); n];
    for (m, g) in gamma.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (p, &e) in eta.iter().enumerate() {
            let phase = 2.0 * PI * (p as f64) * (m as f64) / bins as f64;
            acc += C64::new(phase.cos(), phase.sin()) * e;
        }
        *g = acc / bins as f64;
    }
    let matrix = DMatrix::from_fn(n, n, |k, l| {
        if k >= l {
            gamma[k - l]
        } else {
            gamma[l - k].conj()
        }
    });
    let cov = HermitianCovariance::new(matrix, CovarianceRole::Jamming)?;
    psd_floor(cov)
}

/// Leaves the matrix untouched when its spectrum is already nonnegative up
/// to round-off (`lambda_min >= -1e-12 * lambda_max`); floors round-off
/// negatives within the type slack; rejects anything worse.
fn psd_floor(cov: HermitianCovariance) -> Result<HermitianCovariance> {
    let eig = cov.matrix().clone().symmetric_eigen();
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lambda_min >= -1e-12 * lambda_max.max(f64::MIN_POSITIVE) {
        return Ok(cov);
    }
    if lambda_min < -1e-8 * lambda_max.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite {
            role: cov.role().as_str(),
            lambda_min,
            lambda_max,
        });
    }
    let n = cov.dim();
    let mut floored = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let one = C64::new(1.0, 0.0);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(0.0);
        if lam > 0.0 {
            let u = eig.eigenvectors.column(k).clone_owned();
            floored.gerc(C64::new(lam, 0.0), &u, &u, one);
        }
    }
    HermitianCovariance::new(floored, cov.role())
}

/// Interference covariance `Gamma = sigma_J^2 Gamma_J + sigma^2 I`,
/// strictly positive definite since `sigma^2 > 0`.
pub fn interference_covariance(scenario: &ScenarioConfig) -> Result<HermitianCovariance> {
    let eta = jamming_spectrum(scenario)?;
    let jam = jamming_covariance(&eta)?;
    let n = scenario.n;
    let mut m = jam.into_matrix() * C64::new(scenario.sigma_j2, 0.0);
    for i in 0..n {
        m[(i, i)] += C64::new(scenario.sigma2, 0.0);
    }
    HermitianCovariance::new(m, CovarianceRole::Interference)
}

/// Ground-truth received covariance `R = beta * S(s) + Gamma` for a given
/// waveform and interference.
pub fn received_covariance(
    s: &Waveform,
    beta: f64,
    gamma: &HermitianCovariance,
) -> Result<HermitianCovariance> {
    if gamma.dim() != s.len() {
        return Err(Error::Dimension(format!(
            "received_covariance: interference {} vs waveform {}",
            gamma.dim(),
            s.len()
        )));
    }
    let clutter = clutter_matrix(s.entries())?;
    let m = clutter.into_matrix() * C64::new(beta, 0.0) + gamma.matrix();
    HermitianCovariance::new(m, CovarianceRole::Received)
}

/// Polyphase Golomb sequence `s_k = e^{j pi k (k-1) / N}`, `k = 1..N`: the
/// standard unimodular initializer with good autocorrelation.
pub fn golomb(n: usize) -> Result<Waveform> {
    if n == 0 {
        return Err(Error::Dimension("golomb needs n >= 1".into()));
    }
    let phases: Vec<f64> = (1..=n as u64)
        .map(|k| {
            // k(k-1) mod 2N keeps the argument small for large N.
            let q = (k * (k - 1)) % (2 * n as u64);
            PI * q as f64 / n as f64
        })
        .collect();
    Ok(Waveform::from_phases(&phases))
}

/// Integrated sidelobe level `2 * sum_{m=1}^{N-1} |r_m|^2` of the aperiodic
/// autocorrelation `r_m = sum_k s_{k+m} s_k^*`.
pub fn isl(s: &Waveform) -> f64 {
    let v = s.entries();
    let n = v.len();
    let mut total = 0.0;
    for m in 1..n {
        let mut r = C64::new(0.0, 0.0);
        for k in 0..n - m {
            r += v[k + m] * v[k].conj();
        }
        total += r.norm_sqr();
    }
    2.0 * total
}
