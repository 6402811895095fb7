//! One-bit receiver simulation and normalized-covariance recovery.
//!
//! A one-bit ADC keeps only the signs of the real and imaginary parts, so
//! second-order statistics survive only after normalization: the sign-data
//! covariance `R_upsilon` relates to the normalized covariance of the
//! underlying Gaussian process through the arcsine law
//! `Rbar = sin(pi/2 * R_upsilon)`, applied separately to real and imaginary
//! parts.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::error::{Error, Result};
use crate::types::{CovarianceRole, HermitianCovariance, NormalizedCovariance, C64};

/// Slack accepted on sign-covariance entries before clipping to [-1, 1];
/// raw estimates exceed the bound by O(1/sqrt(M)).
const CLIP_SLACK: f64 = 1e-6;

/// A batch of received snapshot vectors together with the seed that
/// produced it.
#[derive(Debug, Clone)]
pub struct SnapshotBatch {
    samples: Vec<DVector<C64>>,
    seed: u64,
}

impl SnapshotBatch {
    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    pub fn samples(&self) -> &[DVector<C64>] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws `m` independent circularly-symmetric complex Gaussian vectors with
/// covariance `r`, deterministically from `seed`. Factorization is Cholesky
/// when `r` is positive definite, otherwise an eigenvalue square root with
/// negative round-off eigenvalues clamped at zero.
pub fn draw_snapshots(r: &HermitianCovariance, m: usize, seed: u64) -> Result<SnapshotBatch> {
    if m == 0 {
        return Err(Error::Config("snapshot count must be >= 1".into()));
    }
    r.validate_psd()?;
    let n = r.dim();
    let factor = match Cholesky::new(r.matrix().clone()) {
        Some(chol) => chol.unpack(),
        None => {
            let eig = r.matrix().clone().symmetric_eigen();
            let mut f = eig.eigenvectors;
            for k in 0..n {
                let scale = C64::new(eig.eigenvalues[k].max(0.0).sqrt(), 0.0);
                for i in 0..n {
                    f[(i, k)] *= scale;
                }
            }
            f
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        let z = DVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        });
        samples.push(&factor * z);
    }
    Ok(SnapshotBatch { samples, seed })
}

/// Complex one-bit quantizer
/// `(sign(Re y) + j sign(Im y)) / sqrt(2)` with `sign(0) = +1`.
pub fn csign(y: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(
        y.len(),
        y.iter().map(|e| {
            let re = if e.re >= 0.0 { 1.0 } else { -1.0 };
            let im = if e.im >= 0.0 { 1.0 } else { -1.0 };
            C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        }),
    )
}

/// Empirical covariance of the one-bit data,
/// `(1/M) sum_m csign(y_m) csign(y_m)^H`, with the diagonal pinned to
/// exactly one (each quantized entry has unit modulus).
pub fn sign_covariance(batch: &SnapshotBatch) -> Result<HermitianCovariance> {
    let m = batch.count();
    if m == 0 {
        return Err(Error::Config("empty snapshot batch".into()));
    }
    let n = batch.dim();
    let mut acc = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let one = C64::new(1.0, 0.0);
    for y in batch.samples() {
        let v = csign(y);
        acc.gerc(one, &v, &v, one);
    }
    acc /= C64::new(m as f64, 0.0);
    for i in 0..n {
        acc[(i, i)] = C64::new(1.0, 0.0);
    }
    HermitianCovariance::new(acc, CovarianceRole::Sign)
}

/// Arcsine-law inversion: maps a sign-data covariance to the normalized
/// covariance of the underlying process via `sin(pi/2 x)` on real and
/// imaginary parts. Parts beyond `[-1 - 1e-6, 1 + 1e-6]` signal an
/// inconsistent estimate; within the slack they are clipped before the map.
/// The returned matrix has its diagonal pinned to one and carries no scale.
pub fn arcsine_recover(r_upsilon: &HermitianCovariance) -> Result<NormalizedCovariance> {
    let n = r_upsilon.dim();
    let src = r_upsilon.matrix();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let e = src[(i, j)];
            for part in [e.re, e.im] {
                if part.abs() > 1.0 + CLIP_SLACK {
                    return Err(Error::EstimationInconsistency { value: part });
                }
            }
            let re = (FRAC_PI_2 * e.re.clamp(-1.0, 1.0)).sin();
            let im = (FRAC_PI_2 * e.im.clamp(-1.0, 1.0)).sin();
            out[(i, j)] = C64::new(re, im);
        }
    }
    for i in 0..n {
        out[(i, i)] = C64::new(1.0, 0.0);
    }
    NormalizedCovariance::new(out, None)
}

/// Splits a covariance into its unit-diagonal correlation matrix and the
/// positive scale vector `d_k = sqrt(R_kk)`.
pub fn normalize(r: &HermitianCovariance) -> Result<NormalizedCovariance> {
    let n = r.dim();
    let src = r.matrix();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let value = src[(i, i)].re;
        if !(value > 0.0) {
            return Err(Error::NonpositiveDiagonal { index: i, value });
        }
        d[i] = value.sqrt();
    }
    let bar = DMatrix::from_fn(n, n, |i, j| src[(i, j)] / C64::new(d[i] * d[j], 0.0));
    NormalizedCovariance::new(bar, Some(d))
}

/// Rebuilds `Diag(d) Rbar Diag(d)` from a normalized covariance and a
/// positive scale. Both the congruence form and the Hadamard form
/// `(d d^H) ⊙ Rbar` are evaluated and must agree; disagreement signals a
/// conjugation bug upstream.
pub fn denormalize(
    rbar: &NormalizedCovariance,
    d: &DVector<f64>,
    role: CovarianceRole,
) -> Result<HermitianCovariance> {
    let n = rbar.dim();
    if d.len() != n {
        return Err(Error::Dimension(format!(
            "scale length {} vs dimension {}",
            d.len(),
            n
        )));
    }
    for (index, &value) in d.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonpositiveScale { index, value });
        }
    }
    let bar = rbar.matrix();
    let congruence = DMatrix::from_fn(n, n, |i, j| bar[(i, j)] * C64::new(d[i] * d[j], 0.0));
    let outer = DMatrix::from_fn(n, n, |i, j| C64::new(d[i] * d[j], 0.0));
    let hadamard = outer.component_mul(bar);
    let diff = (&congruence - &hadamard).norm();
    let scale = congruence.norm().max(f64::MIN_POSITIVE);
    if diff > 1e-12 * scale {
        return Err(Error::InternalConsistency(format!(
            "denormalize congruence vs Hadamard forms differ by {:.3e} (relative)",
            diff / scale
        )));
    }
    HermitianCovariance::new(hadamard, role)
}

/// Full one-bit measurement chain: draw snapshots from the true covariance,
/// quantize, estimate the sign covariance, and invert the arcsine law.
pub fn estimate_normalized(
    r_true: &HermitianCovariance,
    m: usize,
    seed: u64,
) -> Result<NormalizedCovariance> {
    let batch = draw_snapshots(r_true, m, seed)?;
    let sign_cov = sign_covariance(&batch)?;
    arcsine_recover(&sign_cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::received_covariance;
    use crate::model::{golomb, interference_covariance};
    use crate::scenario::ScenarioConfig;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_pd(rng: &mut StdRng, n: usize) -> HermitianCovariance {
        let b = DMatrix::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let m = &b * b.adjoint() + DMatrix::identity(n, n) * c(0.05, 0.0);
        HermitianCovariance::new(m, CovarianceRole::Received).unwrap()
    }

    #[test]
    fn csign_examples() {
        let y = DVector::from_vec(vec![c(3.0, -4.0), c(0.0, 0.0)]);
        let v = csign(&y);
        assert!((v[0] - c(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((v[1] - c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
        for e in v.iter() {
            assert!((e.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csign_idempotent_in_quadrant() {
        let mut rng = StdRng::seed_from_u64(1);
        let y = DVector::from_fn(16, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let once = csign(&y);
        let twice = csign(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_covariance_gives_zero_snapshots() {
        let r = HermitianCovariance::new(
            DMatrix::from_element(3, 3, c(0.0, 0.0)),
            CovarianceRole::Received,
        )
        .unwrap();
        let batch = draw_snapshots(&r, 5, 9).unwrap();
        for s in batch.samples() {
            assert_eq!(s.norm(), 0.0);
        }
    }

    #[test]
    fn snapshots_are_deterministic_given_seed() {
        let mut rng = StdRng::seed_from_u64(2);
        let r = random_pd(&mut rng, 4);
        let a = draw_snapshots(&r, 20, 77).unwrap();
        let b = draw_snapshots(&r, 20, 77).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c_ = draw_snapshots(&r, 20, 78).unwrap();
        assert_ne!(a.samples(), c_.samples());
    }

    #[test]
    fn sample_covariance_converges() {
        let n = 4;
        let r = HermitianCovariance::new(DMatrix::identity(n, n), CovarianceRole::Received)
            .unwrap();
        let m = 1_000_000;
        let batch = draw_snapshots(&r, m, 123).unwrap();
        let mut acc = DMatrix::from_element(n, n, c(0.0, 0.0));
        let one = c(1.0, 0.0);
        for y in batch.samples() {
            acc.gerc(one, y, y, one);
        }
        acc /= c(m as f64, 0.0);
        let err = (&acc - r.matrix())
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max);
        assert!(err <= 5e-3, "law-of-large-numbers deviation {err}");
    }

    #[test]
    fn sign_covariance_unit_diagonal_and_decorrelation() {
        let n = 4;
        let r = HermitianCovariance::new(DMatrix::identity(n, n), CovarianceRole::Received)
            .unwrap();
        let batch = draw_snapshots(&r, 1, 5).unwrap();
        let single = sign_covariance(&batch).unwrap();
        for i in 0..n {
            assert_eq!(single.matrix()[(i, i)], c(1.0, 0.0));
        }

        let batch = draw_snapshots(&r, 1_000_000, 6).unwrap();
        let big = sign_covariance(&batch).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(big.matrix()[(i, j)].norm() <= 5e-3);
                }
            }
        }
    }

    #[test]
    fn arcsine_identity_and_analytic_entry() {
        let r = HermitianCovariance::new(DMatrix::identity(3, 3), CovarianceRole::Sign).unwrap();
        let bar = arcsine_recover(&r).unwrap();
        assert!((bar.matrix() - DMatrix::<C64>::identity(3, 3)).norm() < 1e-15);

        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = c(0.5, 0.0);
        m[(1, 0)] = c(0.5, 0.0);
        let r = HermitianCovariance::new(m, CovarianceRole::Sign).unwrap();
        let bar = arcsine_recover(&r).unwrap();
        assert_relative_eq!(bar.matrix()[(0, 1)].re, FRAC_1_SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn arcsine_rejects_out_of_range() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = c(1.1, 0.0);
        m[(1, 0)] = c(1.1, 0.0);
        let r = HermitianCovariance::new(m, CovarianceRole::Sign).unwrap();
        assert!(matches!(
            arcsine_recover(&r),
            Err(Error::EstimationInconsistency { .. })
        ));
    }

    #[test]
    fn arcsine_inverts_elementwise_arcsin() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let r = random_pd(&mut rng, 6);
            let bar = normalize(&r).unwrap();
            let n = bar.dim();
            let fwd = DMatrix::from_fn(n, n, |i, j| {
                let e = bar.matrix()[(i, j)];
                c(e.re.asin() / FRAC_PI_2, e.im.asin() / FRAC_PI_2)
            });
            let sign_like = HermitianCovariance::new(fwd, CovarianceRole::Sign).unwrap();
            let back = arcsine_recover(&sign_like).unwrap();
            let err = (back.matrix() - bar.matrix()).norm() / bar.matrix().norm();
            assert!(err <= 1e-12, "round trip error {err}");
        }
    }

    #[test]
    fn end_to_end_recovery_matches_analytic_normalization() {
        let mut rng = StdRng::seed_from_u64(4);
        let r = random_pd(&mut rng, 4);
        let truth = normalize(&r).unwrap();
        let est = estimate_normalized(&r, 1_000_000, 99).unwrap();
        let err = (est.matrix() - truth.matrix())
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-2, "arcsine-law recovery error {err}");
    }

    #[test]
    fn normalize_examples() {
        let mut m = DMatrix::from_element(2, 2, c(2.0, 0.0));
        m[(0, 0)] = c(4.0, 0.0);
        m[(1, 1)] = c(4.0, 0.0);
        let r = HermitianCovariance::new(m, CovarianceRole::Received).unwrap();
        let bar = normalize(&r).unwrap();
        assert!((bar.matrix()[(0, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(bar.scale().unwrap(), &DVector::from_vec(vec![2.0, 2.0]));

        let r = HermitianCovariance::new(
            DMatrix::identity(3, 3) * c(7.3, 0.0),
            CovarianceRole::Received,
        )
        .unwrap();
        let bar = normalize(&r).unwrap();
        assert!((bar.matrix() - DMatrix::<C64>::identity(3, 3)).norm() < 1e-15);
        for &d in bar.scale().unwrap().iter() {
            assert_relative_eq!(d, 7.3f64.sqrt(), max_relative = 1e-15);
        }
    }

    #[test]
    fn normalize_rejects_nonpositive_diagonal() {
        let m = DMatrix::from_element(2, 2, c(0.0, 0.0));
        let r = HermitianCovariance::new(m, CovarianceRole::Received).unwrap();
        assert!(matches!(
            normalize(&r),
            Err(Error::NonpositiveDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn normalize_denormalize_round_trip() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let r = random_pd(&mut rng, 8);
            let bar = normalize(&r).unwrap();
            let d = bar.scale().unwrap().clone();
            let back = denormalize(&bar, &d, r.role()).unwrap();
            let rel = (back.matrix() - r.matrix()).norm() / r.matrix().norm();
            assert!(rel <= 1e-12, "round-trip relative error {rel}");
        }
    }

    #[test]
    fn denormalize_examples() {
        let bar = NormalizedCovariance::new(DMatrix::identity(2, 2), None).unwrap();
        let d = DVector::from_vec(vec![2.0, 3.0]);
        let r = denormalize(&bar, &d, CovarianceRole::Received).unwrap();
        assert!((r.matrix()[(0, 0)] - c(4.0, 0.0)).norm() < 1e-15);
        assert!((r.matrix()[(1, 1)] - c(9.0, 0.0)).norm() < 1e-15);
        assert_eq!(r.matrix()[(0, 1)], c(0.0, 0.0));

        let mut rng = StdRng::seed_from_u64(6);
        let src = random_pd(&mut rng, 4);
        let bar = normalize(&src).unwrap();
        let ones = DVector::from_element(4, 1.0);
        let same = denormalize(&bar, &ones, CovarianceRole::Received).unwrap();
        assert!((same.matrix() - bar.matrix()).norm() < 1e-15);
    }

    #[test]
    fn estimation_error_shrinks_with_more_snapshots() {
        // Paired trials: error at 4M snapshots below error at M in >= 95%.
        let n = 8;
        let sc = ScenarioConfig::spot(n);
        let gamma = interference_covariance(&sc).unwrap();
        let s = golomb(n).unwrap();
        let r = received_covariance(&s, sc.beta, &gamma).unwrap();
        let truth = normalize(&r).unwrap();
        let m = 10_000;
        let mut wins = 0;
        let trials = 100;
        for t in 0..trials {
            let small = estimate_normalized(&r, m, 1000 + t).unwrap();
            let large = estimate_normalized(&r, 4 * m, 5000 + t).unwrap();
            let err = |est: &NormalizedCovariance| {
                (est.matrix() - truth.matrix())
                    .iter()
                    .map(|e| e.norm())
                    .fold(0.0, f64::max)
            };
            if err(&large) < err(&small) {
                wins += 1;
            }
        }
        assert!(wins >= 95, "only {wins}/{trials} paired trials improved");
    }
}
