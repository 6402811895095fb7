//! Transmit-sequence optimization: fractional programming over unimodular
//! sequences, solved per step by phase-projection power iterations.
//!
//! For a fixed receive filter the MSE ratio is
//! `f(s) = (s^H chi s + mu) / (s^H W s)` with `chi = clutter_matrix(w)`,
//! `W = w w^H`, and `mu = w^H Gamma w / beta` a constant. Each fractional
//! step minimizes the surrogate `g(s) = s^H (chi - f(s*) W) s + mu`, which
//! over unimodular vectors is the maximization of `s^H T_tilde s` with
//! `T_tilde = lambda I - T` positive definite.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::clutter_matrix;
use crate::scenario::Tolerances;
use crate::types::{
    CovarianceRole, HermitianCovariance, NormalizedCovariance, ReceiveFilter, Waveform, C64,
};

/// Entries of `T_tilde s` below this modulus keep their previous phase (the
/// argument is undefined there and any choice preserves monotonicity).
const PHASE_KEEP_TOL: f64 = 1e-14;

/// Safety margin above the estimated maximum eigenvalue.
const LAMBDA_MARGIN: f64 = 0.01;

/// The shifted pair `T = chi - f(s*) W` and `T_tilde = lambda I - T` with
/// `lambda` strictly above the largest eigenvalue of `T`.
#[derive(Debug, Clone)]
pub struct ShiftedMatrix {
    t: DMatrix<C64>,
    t_tilde: DMatrix<C64>,
    lambda: f64,
}

impl ShiftedMatrix {
    /// Builds the pair from a Hermitian `T` and an explicit shift; fails if
    /// `lambda I - T` is not positive definite.
    pub fn from_parts(t: DMatrix<C64>, lambda: f64) -> Result<Self> {
        let n = t.nrows();
        if !t.is_square() || n == 0 {
            return Err(Error::Dimension("shifted matrix must be square".into()));
        }
        let mut t_tilde = -&t;
        for i in 0..n {
            t_tilde[(i, i)] += C64::new(lambda, 0.0);
        }
        if Cholesky::new(t_tilde.clone()).is_none() {
            return Err(Error::NotPositiveSemidefinite {
                role: "shifted",
                lambda_min: f64::NAN,
                lambda_max: lambda,
            });
        }
        Ok(Self { t, t_tilde, lambda })
    }

    pub fn t(&self) -> &DMatrix<C64> {
        &self.t
    }

    pub fn t_tilde(&self) -> &DMatrix<C64> {
        &self.t_tilde
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }
}

/// Interference-power constant `mu = w^H Diag(a) Gammabar Diag(a) w / beta`,
/// evaluated from the normalized interference matrix and its estimated scale.
pub fn mu_estimate(
    w: &ReceiveFilter,
    gamma_bar: &NormalizedCovariance,
    a: &DVector<f64>,
    beta: f64,
) -> Result<f64> {
    let n = w.len();
    if gamma_bar.dim() != n || a.len() != n {
        return Err(Error::Dimension(format!(
            "mu_estimate: filter {}, gamma {}, scale {}",
            n,
            gamma_bar.dim(),
            a.len()
        )));
    }
    for (index, &value) in a.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonpositiveScale { index, value });
        }
    }
    if !(beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    let scaled = DVector::from_fn(n, |i, _| w.entries()[i] * C64::new(a[i], 0.0));
    let quad = scaled.dotc(&(gamma_bar.matrix() * &scaled)).re;
    // An estimated Gammabar can be microscopically indefinite.
    Ok(quad.max(0.0) / beta)
}

/// Gershgorin upper bound on the largest eigenvalue of a Hermitian matrix.
fn gershgorin_upper(t: &DMatrix<C64>) -> f64 {
    let n = t.nrows();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| t[(i, j)].norm()).sum();
            t[(i, i)].re + off
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn gershgorin_lower(t: &DMatrix<C64>) -> f64 {
    let n = t.nrows();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| t[(i, j)].norm()).sum();
            t[(i, i)].re - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest-eigenvalue estimate by power iteration on the Gershgorin-shifted
/// (positive semidefinite) matrix. Returns `None` when the iteration does
/// not settle within the cap.
fn power_lambda_max(t: &DMatrix<C64>, iterations: usize, tol: f64) -> Option<f64> {
    let n = t.nrows();
    let lower = gershgorin_lower(t);
    let mut shifted = t.clone();
    for i in 0..n {
        shifted[(i, i)] -= C64::new(lower, 0.0);
    }
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.01 * i as f64, 0.0));
    v /= C64::new(v.norm(), 0.0);
    let mut rayleigh = 0.0f64;
    for _ in 0..iterations {
        let mut next = &shifted * &v;
        let norm = next.norm();
        if norm == 0.0 {
            // Shifted matrix is zero: every eigenvalue equals `lower`.
            return Some(lower);
        }
        next /= C64::new(norm, 0.0);
        let new_rayleigh = next.dotc(&(&shifted * &next)).re;
        let settled = (new_rayleigh - rayleigh).abs() <= tol * new_rayleigh.abs().max(1.0);
        v = next;
        rayleigh = new_rayleigh;
        if settled {
            return Some(rayleigh + lower);
        }
    }
    None
}

/// Forms `T = chi - f_star * W` and a shift `lambda` just above its largest
/// eigenvalue (power iteration, 50 iterations at 1e-10; Gershgorin bound as
/// the verified fallback), so that `T_tilde = lambda I - T` is positive
/// definite.
pub fn build_t(
    chi: &HermitianCovariance,
    w_outer: &HermitianCovariance,
    f_star: f64,
) -> Result<ShiftedMatrix> {
    let n = chi.dim();
    if w_outer.dim() != n {
        return Err(Error::Dimension(format!(
            "build_t: chi {} vs W {}",
            n,
            w_outer.dim()
        )));
    }
    if !(f_star >= 0.0) {
        return Err(Error::Config(format!(
            "f_star must be nonnegative, got {f_star}"
        )));
    }
    let t = chi.matrix() - w_outer.matrix() * C64::new(f_star, 0.0);
    let upper = gershgorin_upper(&t);
    let scale = t.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let margin_floor = 1e-12 * (1.0 + scale);
    let lambda_for = |estimate: f64| estimate + LAMBDA_MARGIN * estimate.abs() + margin_floor;
    let candidate = power_lambda_max(&t, 50, 1e-10).map(lambda_for);
    if let Some(lambda) = candidate {
        if let Ok(shifted) = ShiftedMatrix::from_parts(t.clone(), lambda) {
            return Ok(shifted);
        }
    }
    // Verified fallback: the Gershgorin bound dominates every eigenvalue.
    ShiftedMatrix::from_parts(t, lambda_for(upper))
}

/// One phase-projection step `s <- e^{j arg(T_tilde s)}`; the quadratic form
/// `s^H T_tilde s` never decreases for positive definite `T_tilde`.
pub fn power_step(shifted: &ShiftedMatrix, s: &Waveform) -> Waveform {
    let y = shifted.t_tilde() * s.entries();
    let entries = DVector::from_fn(s.len(), |i, _| {
        let m = y[i].norm();
        if m < PHASE_KEEP_TOL {
            s.entries()[i]
        } else {
            y[i] / C64::new(m, 0.0)
        }
    });
    Waveform::new(entries).expect("phase projection yields unit-modulus entries")
}

/// Caps and tolerances of the fractional-programming loop.
#[derive(Debug, Clone, Copy)]
pub struct SStepOptions {
    pub outer_tol: f64,
    pub outer_cap: usize,
    pub inner_tol: f64,
    pub inner_cap: usize,
}

impl Default for SStepOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-6,
            outer_cap: 100,
            inner_tol: 1e-8,
            inner_cap: 1000,
        }
    }
}

impl From<&Tolerances> for SStepOptions {
    fn from(t: &Tolerances) -> Self {
        Self {
            outer_tol: t.fractional_tol,
            outer_cap: t.fractional_cap,
            inner_tol: t.power_tol,
            inner_cap: t.power_cap,
        }
    }
}

/// One accepted fractional step, for convergence inspection.
#[derive(Debug, Clone, Copy)]
pub struct FractionalStep {
    /// Ratio objective `f(s)` after the step.
    pub objective: f64,
    /// Denominator `s^H W s` after the step.
    pub denominator: f64,
    /// Power iterations spent inside the step.
    pub inner_iterations: usize,
}

/// Output of the traced s-step: the waveform plus the per-step objective
/// history (index 0 is the starting point).
#[derive(Debug, Clone)]
pub struct SStepTrace {
    pub s: Waveform,
    pub steps: Vec<FractionalStep>,
}

struct Ratio<'a> {
    chi: &'a DMatrix<C64>,
    w: &'a DVector<C64>,
    mu: f64,
    denom_floor: f64,
}

impl Ratio<'_> {
    fn eval(&self, s: &Waveform) -> Result<(f64, f64)> {
        let sv = s.entries();
        let b = self.w.dotc(sv).norm_sqr();
        if b <= self.denom_floor {
            return Err(Error::DegenerateDenominator { value: b });
        }
        let a = sv.dotc(&(self.chi * sv)).re.max(0.0) + self.mu;
        Ok((a / b, b))
    }
}

/// Fractional-programming descent on the ratio objective for a fixed filter:
/// alternates surrogate construction and power iterations until the relative
/// objective decrease falls below `outer_tol`. The returned waveform
/// satisfies `f(s) <= f(s0)` up to round-off.
pub fn dinkelbach_s_step(
    w: &ReceiveFilter,
    s0: &Waveform,
    mu: f64,
    opts: &SStepOptions,
) -> Result<Waveform> {
    Ok(dinkelbach_s_step_traced(w, s0, mu, opts)?.s)
}

/// Traced variant exposing the accepted objective values per outer step.
pub fn dinkelbach_s_step_traced(
    w: &ReceiveFilter,
    s0: &Waveform,
    mu: f64,
    opts: &SStepOptions,
) -> Result<SStepTrace> {
    let n = s0.len();
    if w.len() != n {
        return Err(Error::Dimension(format!(
            "s-step: filter {} vs waveform {}",
            w.len(),
            n
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::Config(format!("mu must be nonnegative, got {mu}")));
    }
    let chi = clutter_matrix(w.entries())?;
    let w_outer = {
        let wv = w.entries();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        m.gerc(C64::new(1.0, 0.0), wv, wv, C64::new(1.0, 0.0));
        HermitianCovariance::new(m, CovarianceRole::FilterOuter)?
    };
    let ratio = Ratio {
        chi: chi.matrix(),
        w: w.entries(),
        mu,
        denom_floor: 1e-14 * w.entries().norm_sqr() * n as f64,
    };

    let mut s = s0.clone();
    let (mut f, b0) = ratio.eval(&s)?;
    let mut steps = vec![FractionalStep {
        objective: f,
        denominator: b0,
        inner_iterations: 0,
    }];

    for _ in 0..opts.outer_cap {
        let shifted = build_t(&chi, &w_outer, f)?;
        let mut quad = s.entries().dotc(&(shifted.t_tilde() * s.entries())).re;
        let mut inner_iterations = 0;
        for _ in 0..opts.inner_cap {
            let candidate = power_step(&shifted, &s);
            let candidate_quad = candidate
                .entries()
                .dotc(&(shifted.t_tilde() * candidate.entries()))
                .re;
            if candidate_quad < quad {
                // Round-off wobble; keep the monotone iterate.
                break;
            }
            inner_iterations += 1;
            let gain = candidate_quad - quad;
            s = candidate;
            quad = candidate_quad;
            if gain <= opts.inner_tol * quad.abs().max(1e-300) {
                break;
            }
        }
        let (f_new, b_new) = ratio.eval(&s)?;
        steps.push(FractionalStep {
            objective: f_new,
            denominator: b_new,
            inner_iterations,
        });
        let decrease = f - f_new;
        f = f_new;
        if decrease <= opts.outer_tol * f.abs().max(1e-300) {
            break;
        }
    }
    Ok(SStepTrace { s, steps })
}
