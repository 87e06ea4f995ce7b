//! Quantum Fisher information and Bures-metric numerics for parametrized
//! density matrices.
//!
//! The crate computes the QFI matrix of a state family, the Uhlmann fidelity
//! and Bures distance, forward (`g`) and centered (`h`) finite-difference
//! Bures metrics, and the rank-change correction that separates `4g` from the
//! QFI. The [`verify`] module certifies `F = 4h`, the forward-metric
//! correction formula and the supporting matrix-analytic expansions by
//! measured convergence order.

pub mod correction;
pub mod error;
pub mod json;
pub mod linalg;
pub mod metrics;
pub mod random;
pub mod report;
pub mod sqrt_calculus;
pub mod state;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{eigh, matrix_sqrt, CMat, ComplexMatrix, DensityMatrix, HermitianMatrix, NormKind, Spectrum, C64};
pub use metrics::{MetricEstimate, MetricOptions, QfiMatrix, Scheme};
pub use state::{DirectionalJet, ParameterPoint, StateFamily};
pub use tolerance::ToleranceConfig;
