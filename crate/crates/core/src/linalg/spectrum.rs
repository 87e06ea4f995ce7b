use nalgebra::linalg::SymmetricEigen;

use super::{c, from_basis, CMat, HermitianMatrix};
use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

const EIGEN_MAX_ITER: usize = 10_000;

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order and the numerical rank already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    rank: usize,
    zero_threshold: f64,
}

impl Spectrum {
    fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMat, tol: &ToleranceConfig) -> Self {
        let lambda_max = eigenvalues.first().copied().unwrap_or(0.0);
        let zero_threshold = tol.zero_threshold(lambda_max);
        let rank = eigenvalues.iter().filter(|&&l| l > zero_threshold).count();
        Self {
            eigenvalues,
            eigenvectors,
            rank,
            zero_threshold,
        }
    }

    /// Spectrum of a real diagonal matrix (eigenvectors are permuted unit vectors).
    pub fn diagonal(diag: &[f64], tol: &ToleranceConfig) -> Self {
        let n = diag.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
        let values = order.iter().map(|&k| diag[k]).collect();
        let vectors = CMat::from_fn(n, n, |i, j| if order[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) });
        Self::from_parts(values, vectors, tol)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Absolute threshold below which an eigenvalue counts as zero.
    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Replaces negative eigenvalues by zero.
    pub fn clamp_negative(mut self) -> Self {
        for l in &mut self.eigenvalues {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        self
    }

    /// Rebuilds `V diag(f(lambda)) V^†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let d = CMat::from_fn(n, n, |i, j| {
            if i == j {
                c(f(self.eigenvalues[i]), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        HermitianMatrix::hermitize(&from_basis(&self.eigenvectors, &d))
    }
}

/// Hermitian eigendecomposition.
///
/// Degenerate eigenvectors are whatever the underlying solver produces;
/// callers must be invariant to rotations inside degenerate eigenspaces.
pub fn eigh(m: &HermitianMatrix, tol: &ToleranceConfig) -> Result<Spectrum> {
    let n = m.dim();
    let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::SolverFailure(format!("no convergence for {n}x{n} matrix")))?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::SolverFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let spectrum = Spectrum::from_parts(values, vectors, tol);
    check_decomposition(m, &spectrum, tol)?;
    Ok(spectrum)
}

fn check_decomposition(m: &HermitianMatrix, s: &Spectrum, tol: &ToleranceConfig) -> Result<()> {
    let n = s.dim();
    let v = &s.eigenvectors;
    let recon = s.map(|l| l);
    let scale = m.as_matrix().norm().max(1.0);
    let recon_err = (recon.as_matrix() - m.as_matrix()).norm();
    if recon_err > tol.recon_tol * scale {
        return Err(Error::SolverFailure(format!("reconstruction error {recon_err:e}")));
    }
    let unitarity_err = (v.adjoint() * v - CMat::identity(n, n)).norm();
    if unitarity_err > tol.recon_tol * (n as f64).sqrt().max(1.0) {
        return Err(Error::SolverFailure(format!(
            "eigenvectors not orthonormal ({unitarity_err:e})"
        )));
    }
    Ok(())
}

/// Square root of a PSD matrix from its spectrum.
///
/// Eigenvalues at or below `sqrt_floor * max(lambda_max, 1)` are treated as
/// exact zeros; anything above is kept.
pub fn sqrt_from_spectrum(s: &Spectrum, tol: &ToleranceConfig) -> HermitianMatrix {
    let floor = tol.sqrt_floor * s.max_eigenvalue().max(1.0);
    s.map(|l| if l > floor { l.sqrt() } else { 0.0 })
}

/// PSD square root `V diag(sqrt(max(lambda, 0))) V^†`.
pub fn matrix_sqrt(m: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    let s = eigh(m, tol)?;
    let min = s.min_eigenvalue();
    if min < -tol.psd_tol {
        return Err(Error::NegativeEigenvalue {
            value: min,
            tol: tol.psd_tol,
        });
    }
    Ok(sqrt_from_spectrum(&s, tol))
}
