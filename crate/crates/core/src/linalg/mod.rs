//! Dense complex linear algebra: validated Hermitian and density matrices,
//! Hermitian eigendecomposition, PSD square roots, unitarily invariant norms
//! and the Mirsky singular-value bound.

mod json;
mod matrix;
mod norms;
mod spectrum;
mod svd;

pub use json::{decode_matrix, encode_matrix, matrix_serde, EncodedMatrix};
pub use matrix::{ComplexMatrix, DensityMatrix, HermitianMatrix};
pub use norms::{frobenius_norm, mirsky_gap, singular_values, spectral_norm, trace_norm, MirskyGap, NormKind};
pub use spectrum::{eigh, matrix_sqrt, sqrt_from_spectrum, Spectrum};
pub use svd::{svd, Svd};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix storage used throughout the crate.
pub type CMat = nalgebra::DMatrix<C64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `V^† M V`
pub(crate) fn to_basis(v: &CMat, m: &CMat) -> CMat {
    v.adjoint() * m * v
}

/// `V M V^†`
pub(crate) fn from_basis(v: &CMat, m: &CMat) -> CMat {
    v * m * v.adjoint()
}

/// Real part of the trace.
pub(crate) fn re_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}
