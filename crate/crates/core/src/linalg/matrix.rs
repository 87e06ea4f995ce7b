use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{eigh, hermitize, max_abs, re_trace, CMat, Spectrum};
use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

fn check_finite(m: &CMat) -> Result<()> {
    let rows = m.nrows();
    match m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            row: k % rows,
            col: k / rows,
        }),
        None => Ok(()),
    }
}

/// Dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(CMat);

impl ComplexMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }
}

impl Deref for ComplexMatrix {
    type Target = CMat;

    fn deref(&self) -> &CMat {
        &self.0
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        Self(h.0)
    }
}

/// Square matrix equal to its conjugate transpose.
///
/// Construction accepts roundoff-level asymmetry and stores the exact
/// Hermitization `(M + M^†) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat, tol: &ToleranceConfig) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        check_finite(&m)?;
        let asymmetry = max_abs(&(&m - m.adjoint()));
        let limit = tol.herm_tol * max_abs(&m).max(1.0);
        if asymmetry > limit {
            return Err(Error::NonHermitian { asymmetry, limit });
        }
        Ok(Self(hermitize(&m)))
    }

    /// Hermitizes without checking the asymmetry. Intended for matrices that
    /// are Hermitian by construction up to roundoff.
    pub fn hermitize(m: &CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "hermitize requires a square matrix");
        Self(hermitize(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMat::identity(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMat::from_fn(n, n, |i, j| {
            if i == j {
                super::c(diag[i], 0.0)
            } else {
                super::c(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        re_trace(&self.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.scale(a))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &HermitianMatrix) -> Self {
        Self(&self.0 + other.0.scale(a))
    }
}

impl Deref for HermitianMatrix {
    type Target = CMat;

    fn deref(&self) -> &CMat {
        &self.0
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        super::matrix_serde::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = super::matrix_serde::deserialize(d)?;
        HermitianMatrix::new(m, &ToleranceConfig::default()).map_err(serde::de::Error::custom)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        super::matrix_serde::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = super::matrix_serde::deserialize(d)?;
        ComplexMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Trace-one positive semidefinite Hermitian matrix.
///
/// The spectrum is computed once at construction. Eigenvalues inside
/// `[-psd_tol, 0)` are reported as zero.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    spectrum: Spectrum,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > tol.trace_tol || !trace.is_finite() {
            return Err(Error::InvalidTrace {
                trace,
                tol: tol.trace_tol,
            });
        }
        let spectrum = eigh(&matrix, tol)?;
        let min = spectrum.min_eigenvalue();
        if min < -tol.psd_tol {
            return Err(Error::NegativeEigenvalue {
                value: min,
                tol: tol.psd_tol,
            });
        }
        Ok(Self {
            matrix,
            spectrum: spectrum.clamp_negative(),
        })
    }

    /// Pure state `|psi><psi|` from an unnormalized vector.
    pub fn pure(psi: &[super::C64], tol: &ToleranceConfig) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("state vector has zero norm".into()));
        }
        let v = v.unscale(n);
        Self::new(HermitianMatrix::hermitize(&(&v * v.adjoint())), tol)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let matrix = HermitianMatrix::identity(dim).scale(1.0 / dim as f64);
        let spectrum = Spectrum::diagonal(&vec![1.0 / dim as f64; dim], &ToleranceConfig::default());
        Self { matrix, spectrum }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

impl Deref for DensityMatrix {
    type Target = CMat;

    fn deref(&self) -> &CMat {
        &self.matrix
    }
}
