//! Seeded random matrices for property tests and synthetic verification
//! instances.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitize, CMat, ComplexMatrix, DensityMatrix, HermitianMatrix, C64};
use crate::tolerance::ToleranceConfig;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Ginibre matrix (independent standard normal real and imaginary parts).
pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::new(random_cmat(rng, rows, cols)).expect("gaussian entries are finite")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix::hermitize(&random_cmat(rng, n, n))
}

/// Traceless Hermitian matrix with unit Frobenius norm.
pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let h = random_hermitian(rng, n);
    let shift = h.trace() / n as f64;
    let t = h.axpy(-shift, &HermitianMatrix::identity(n));
    let norm = t.as_matrix().norm();
    t.scale(1.0 / norm)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phase fix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let qr = random_cmat(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `G G^†` with `G` of shape `n x rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let g = random_cmat(rng, n, rank);
    HermitianMatrix::hermitize(&(&g * g.adjoint()))
}

/// Random density matrix of the given rank.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> DensityMatrix {
    let p = random_psd(rng, n, rank);
    let p = p.scale(1.0 / p.trace());
    DensityMatrix::new(p, &ToleranceConfig::default()).expect("normalized Gram matrix is a state")
}

/// Density matrix `U diag(p) U^†` with the given eigenvalues.
pub fn density_with_spectrum<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> HermitianMatrix {
    let n = eigenvalues.len();
    let u = random_unitary(rng, n);
    let d = HermitianMatrix::from_diagonal(eigenvalues);
    HermitianMatrix::hermitize(&hermitize(&(&u * d.as_matrix() * u.adjoint())))
}
