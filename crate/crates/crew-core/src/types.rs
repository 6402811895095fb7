//! Domain types: waveforms, receive filters, and the covariance wrappers
//! used throughout the design pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Unimodularity slack accepted at construction.
pub const UNIMODULAR_TOL: f64 = 1e-12;
/// Relative Hermitian-deviation slack (`max |M - M^H| <= tol * ||M||_F`).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative eigenvalue slack for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-8;

/// Constant-modulus transmit sequence of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    entries: DVector<C64>,
}

impl Waveform {
    /// Wraps a complex vector, verifying `|s_k| = 1` to within 1e-12.
    pub fn new(entries: DVector<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("waveform must have length >= 1".into()));
        }
        for (index, e) in entries.iter().enumerate() {
            let modulus = e.norm();
            if (modulus - 1.0).abs() > UNIMODULAR_TOL {
                return Err(Error::NotUnimodular { index, modulus });
            }
        }
        Ok(Self { entries })
    }

    /// Builds the unimodular vector `e^{j phase_k}`.
    pub fn from_phases(phases: &[f64]) -> Self {
        let entries = DVector::from_iterator(
            phases.len(),
            phases.iter().map(|&p| C64::new(p.cos(), p.sin())),
        );
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }
}

/// Mismatched-filter coefficient vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    entries: DVector<C64>,
}

impl ReceiveFilter {
    /// Wraps a coefficient vector; entries must be finite and `||w|| > 0`.
    pub fn new(entries: DVector<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("filter must have length >= 1".into()));
        }
        if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::Config("filter entries must be finite".into()));
        }
        if entries.norm() == 0.0 {
            return Err(Error::Config("filter norm must be positive".into()));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }
}

/// What a covariance matrix stands for in the signal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceRole {
    /// Interference-plus-clutter covariance at the receiver (R).
    Received,
    /// Signal-independent interference (noise + jamming) covariance (Gamma).
    Interference,
    /// Jamming-only Toeplitz covariance (Gamma_J).
    Jamming,
    /// Shift-accumulated clutter matrix of a sequence (S for the waveform,
    /// chi/beta for the filter).
    Clutter,
    /// Covariance of one-bit sign data (R_upsilon).
    Sign,
    /// Reconstructed average received covariance (Q).
    Expected,
    /// Rank-one outer product of the receive filter (w w^H).
    FilterOuter,
}

impl CovarianceRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceRole::Received => "received",
            CovarianceRole::Interference => "interference",
            CovarianceRole::Jamming => "jamming",
            CovarianceRole::Clutter => "clutter",
            CovarianceRole::Sign => "sign",
            CovarianceRole::Expected => "expected",
            CovarianceRole::FilterOuter => "filter-outer",
        }
    }
}

impl fmt::Display for CovarianceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense N x N Hermitian covariance. Construction verifies Hermitian
/// symmetry and stores the exactly Hermitized matrix; positive
/// semidefiniteness is validated where a contract requires it
/// (estimated matrices may be slightly indefinite).
#[derive(Debug, Clone)]
pub struct HermitianCovariance {
    matrix: DMatrix<C64>,
    role: CovarianceRole,
}

impl HermitianCovariance {
    pub fn new(matrix: DMatrix<C64>, role: CovarianceRole) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "covariance must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let fro = matrix.norm();
        let mut deviation = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in i..matrix.ncols() {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                deviation = deviation.max(d);
            }
        }
        let tolerance = HERMITIAN_TOL * fro.max(f64::MIN_POSITIVE);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        let hermitized = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self {
            matrix: hermitized,
            role,
        })
    }

    /// Eigenvalues of the (Hermitized) matrix, ascending.
    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev = self.matrix.clone().symmetric_eigen().eigenvalues;
        ev.as_mut_slice()
            .sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }

    /// Checks `lambda_min >= -PSD_TOL * lambda_max`.
    pub fn validate_psd(&self) -> Result<()> {
        let ev = self.eigenvalues();
        let lambda_min = ev[0];
        let lambda_max = ev[ev.len() - 1];
        if lambda_min < -PSD_TOL * lambda_max.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveSemidefinite {
                role: self.role.as_str(),
                lambda_min,
                lambda_max,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn role(&self) -> CovarianceRole {
        self.role
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }
}

/// Unit-diagonal Hermitian matrix with correlation-coefficient entries,
/// optionally carrying the positive scale vector that was divided out
/// (unknown when the matrix comes from one-bit data).
#[derive(Debug, Clone)]
pub struct NormalizedCovariance {
    matrix: DMatrix<C64>,
    scale: Option<DVector<f64>>,
}

impl NormalizedCovariance {
    /// Wraps a unit-diagonal Hermitian matrix. The diagonal is *set* to
    /// exactly one; entries must satisfy `|m_ij| <= 1 + 1e-10` and the
    /// Hermitian deviation bound.
    pub fn new(matrix: DMatrix<C64>, scale: Option<DVector<f64>>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "normalized covariance must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(d) = &scale {
            if d.len() != matrix.nrows() {
                return Err(Error::Dimension(format!(
                    "scale length {} does not match dimension {}",
                    d.len(),
                    matrix.nrows()
                )));
            }
            for (index, &value) in d.iter().enumerate() {
                if !(value > 0.0) {
                    return Err(Error::NonpositiveScale { index, value });
                }
            }
        }
        let fro = matrix.norm();
        let mut deviation = 0.0f64;
        let mut max_mag = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in i..matrix.ncols() {
                deviation = deviation.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
                max_mag = max_mag.max(matrix[(i, j)].norm());
            }
        }
        let tolerance = HERMITIAN_TOL * fro.max(f64::MIN_POSITIVE);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        if max_mag > 1.0 + 1e-10 {
            return Err(Error::CorrelationBound { value: max_mag });
        }
        let mut hermitized = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..hermitized.nrows() {
            hermitized[(i, i)] = C64::new(1.0, 0.0);
        }
        Ok(Self {
            matrix: hermitized,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Scale vector divided out during normalization, when known.
    pub fn scale(&self) -> Option<&DVector<f64>> {
        self.scale.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_rejects_non_unimodular() {
        let v = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.5, 0.0)]);
        assert!(matches!(
            Waveform::new(v),
            Err(Error::NotUnimodular { index: 1, .. })
        ));
    }

    #[test]
    fn waveform_accepts_phases() {
        let w = Waveform::from_phases(&[0.0, 1.3, -2.1]);
        assert_eq!(w.len(), 3);
        for e in w.entries().iter() {
            assert!((e.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn receive_filter_rejects_zero() {
        let v = DVector::from_element(3, C64::new(0.0, 0.0));
        assert!(ReceiveFilter::new(v).is_err());
    }

    #[test]
    fn hermitian_covariance_rejects_asymmetry() {
        let mut m = DMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, 1.0); // conjugate would be -i
        assert!(matches!(
            HermitianCovariance::new(m, CovarianceRole::Received),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn normalized_covariance_pins_diagonal() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = C64::new(1.0 + 1e-12, 0.0);
        let n = NormalizedCovariance::new(m, None).unwrap();
        assert_eq!(n.matrix()[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn normalized_covariance_rejects_overunit_entry() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(1.5, 0.0);
        m[(1, 0)] = C64::new(1.5, 0.0);
        assert!(matches!(
            NormalizedCovariance::new(m, None),
            Err(Error::CorrelationBound { .. })
        ));
    }
}
