//! Directional derivatives of the matrix square root at a positive definite
//! point, and the truncated Taylor expansion of `sqrt(A + H)`.
//!
//! The first derivative `X = D sqrt(A)[H]` is the solution of the Sylvester
//! equation `sqrt(A) X + X sqrt(A) = H`, which equals the integral
//! `int_0^inf exp(-s sqrt(A)) H exp(-s sqrt(A)) ds`. In the eigenbasis of `A`
//! it reads `X_ij = H_ij / (sqrt(a_i) + sqrt(a_j))`.
//!
//! Higher orders follow the recursion
//!
//! ```text
//! D^n[H] = -D[ sum_{p+q=n-2} n!/((p+1)!(q+1)!) D^{p+1}[H] D^{q+1}[H] ]
//! ```

use crate::error::{Error, Result};
use crate::linalg::{eigh, from_basis, to_basis, CMat, HermitianMatrix, Spectrum};
use crate::tolerance::ToleranceConfig;

/// A strictly positive definite base point `A` with its spectrum cached.
#[derive(Debug, Clone)]
pub struct SqrtDerivativeContext {
    a: HermitianMatrix,
    spectrum: Spectrum,
    sqrt_eigs: Vec<f64>,
}

impl SqrtDerivativeContext {
    pub fn new(a: HermitianMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let spectrum = eigh(&a, tol)?;
        let min_eig = spectrum.min_eigenvalue();
        let required = tol.pd_tol * spectrum.max_eigenvalue().max(1.0);
        if min_eig <= required {
            return Err(Error::NotPositiveDefinite { min_eig, tol: required });
        }
        let sqrt_eigs = spectrum.eigenvalues().iter().map(|l| l.sqrt()).collect();
        Ok(Self { a, spectrum, sqrt_eigs })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn base(&self) -> &HermitianMatrix {
        &self.a
    }

    pub fn min_eig(&self) -> f64 {
        self.spectrum.min_eigenvalue()
    }

    pub fn sqrt_base(&self) -> HermitianMatrix {
        self.spectrum.map(f64::sqrt)
    }

    fn check_dim(&self, h: &HermitianMatrix) -> Result<()> {
        if h.dim() != self.dim() {
            return Err(Error::ShapeMismatch {
                left: (self.dim(), self.dim()),
                right: (h.dim(), h.dim()),
            });
        }
        Ok(())
    }

    /// Solves `sqrt(A) X + X sqrt(A) = M` for a general square `M`.
    fn solve_sylvester(&self, m: &CMat) -> CMat {
        let v = self.spectrum.eigenvectors();
        let mut t = to_basis(v, m);
        for j in 0..t.ncols() {
            for i in 0..t.nrows() {
                t[(i, j)] /= self.sqrt_eigs[i] + self.sqrt_eigs[j];
            }
        }
        from_basis(v, &t)
    }

    /// First-order derivative `D sqrt(A)[H]`.
    pub fn frechet_sqrt(&self, h: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(h)?;
        Ok(HermitianMatrix::hermitize(&self.solve_sylvester(h)))
    }

    /// Unsymmetrized derivatives of orders `1..=n`; lower orders are reused
    /// by the recursion.
    fn raw_derivatives(&self, h: &CMat, n: usize) -> Vec<CMat> {
        let d = self.dim();
        let mut ds: Vec<CMat> = Vec::with_capacity(n);
        ds.push(self.solve_sylvester(h));
        for order in 2..=n {
            let mut acc = CMat::zeros(d, d);
            for p in 0..=order - 2 {
                let q = order - 2 - p;
                let w = factorial(order) / (factorial(p + 1) * factorial(q + 1));
                acc += (&ds[p] * &ds[q]).scale(w);
            }
            ds.push(-self.solve_sylvester(&acc));
        }
        ds
    }

    /// Derivatives `D^k sqrt(A)[H]` for `k = 1..=n`, each computed once.
    pub fn derivatives_up_to(&self, h: &HermitianMatrix, n: usize) -> Result<Vec<HermitianMatrix>> {
        if n == 0 {
            return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
        }
        self.check_dim(h)?;
        Ok(self
            .raw_derivatives(h, n)
            .iter()
            .map(HermitianMatrix::hermitize)
            .collect())
    }

    /// Derivative of order `n >= 1`.
    pub fn frechet_sqrt_order_n(&self, h: &HermitianMatrix, n: usize) -> Result<HermitianMatrix> {
        let mut all = self.derivatives_up_to(h, n)?;
        Ok(all.pop().expect("n >= 1"))
    }

    /// `sqrt(A) + sum_{k=1..n} D^k sqrt(A)[H] / k!`, requiring `A + H` positive definite.
    pub fn taylor_sqrt(&self, h: &HermitianMatrix, n: usize, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
        self.check_dim(h)?;
        let shifted = eigh(&self.a.add(h), tol)?;
        let required = tol.pd_tol * shifted.max_eigenvalue().max(1.0);
        if shifted.min_eigenvalue() <= required {
            return Err(Error::NotPositiveDefinite {
                min_eig: shifted.min_eigenvalue(),
                tol: required,
            });
        }
        let mut out = self.sqrt_base();
        if n == 0 {
            return Ok(out);
        }
        for (k, d) in self.derivatives_up_to(h, n)?.iter().enumerate() {
            out = out.axpy(1.0 / factorial(k + 1), d);
        }
        Ok(out)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
