//! Numerical tolerances shared by every routine in the crate.
//!
//! A single [`ToleranceConfig`] is passed explicitly to each operation; there
//! is no global state, so tests can tighten or loosen individual thresholds.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative Hermiticity tolerance, scaled by `max(1, max |M_ij|)`.
    pub herm_tol: f64,
    /// Relative reconstruction / unitarity tolerance of an eigendecomposition.
    pub recon_tol: f64,
    /// Numerical-zero threshold for eigenvalues, relative to `max(lambda_max, 1)`.
    pub rank_tol: f64,
    /// Window of negative eigenvalues clamped to zero.
    pub psd_tol: f64,
    /// Eigenvalues below `sqrt_floor * max(lambda_max, 1)` are treated as exact
    /// zeros when taking square roots (eigensolver noise level).
    pub sqrt_floor: f64,
    /// Allowed deviation of a density matrix trace from 1.
    pub trace_tol: f64,
    /// Strict positivity margin for the square-root derivative context.
    pub pd_tol: f64,
    /// Step for first-derivative central differences.
    pub fd_step: f64,
    /// Step for second-derivative stencils.
    pub fd_step2: f64,
    /// Tolerance on jet blocks (R22 = 0, T22 >= 0).
    pub jet_psd_tol: f64,
    /// Fidelity may exceed [0, 1] by this much before clamping.
    pub fid_tol: f64,
    pub mirsky_tol: f64,
    /// Lower bound accepted for the rank-change correction.
    pub corr_tol: f64,
    /// Lower bound accepted for a metric estimate before clamping.
    pub metric_tol: f64,
    /// Largest condition number of the QFI matrix that is still inverted.
    pub cond_max: f64,
    pub qfi_psd_tol: f64,
    /// Smallest step accepted by the metric estimators.
    pub min_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            herm_tol: 1e-10,
            recon_tol: 1e-10,
            rank_tol: 1e-12,
            psd_tol: 1e-10,
            sqrt_floor: 1e-14,
            trace_tol: 1e-8,
            pd_tol: 1e-10,
            fd_step: 1e-5,
            fd_step2: 1e-4,
            jet_psd_tol: 1e-8,
            fid_tol: 1e-8,
            mirsky_tol: 1e-10,
            corr_tol: 1e-8,
            metric_tol: 1e-8,
            cond_max: 1e12,
            qfi_psd_tol: 1e-10,
            min_step: 1e-7,
        }
    }
}

impl ToleranceConfig {
    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }

    /// Absolute zero threshold for a spectrum whose largest eigenvalue is `lambda_max`.
    pub fn zero_threshold(&self, lambda_max: f64) -> f64 {
        self.rank_tol * lambda_max.max(1.0)
    }
}
