//! Parametrized density-matrix families `x -> rho_x` and their first and
//! second derivatives.

mod builtin;
mod generate;
mod polynomial;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin, BlochLinear, Constant, PaperExample, QubitRotation, BUILTIN_NAMES};
pub use generate::{random_full_rank_polynomial, random_rank_deficient_polynomial};
pub use polynomial::{load_model, resolve_model, ModelSpec, PolynomialFamily, PolynomialSpec};

use crate::error::{Error, Result};
use crate::linalg::{CMat, DensityMatrix, HermitianMatrix};
use crate::tolerance::ToleranceConfig;

/// A point in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite parameter in {x:?}")));
        }
        Ok(Self(x))
    }

    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `x + t * y`
    pub fn offset(&self, t: f64, y: &[f64]) -> Self {
        Self(self.0.iter().zip(y).map(|(a, b)| a + t * b).collect())
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(x: Vec<f64>) -> Self {
        Self(x)
    }
}

/// Open parameter domain of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Unbounded,
    /// The open cube `max_i |x_i| < radius`.
    Box {
        radius: f64,
    },
}

impl Domain {
    /// Chebyshev distance from `x` to the boundary; negative outside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match *self {
            Domain::Unbounded => f64::INFINITY,
            Domain::Box { radius } => radius - x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }
}

/// A family of density matrices indexed by `P` real parameters.
///
/// Implementors supply the raw matrix; validation against the density-matrix
/// invariants happens in [`evaluate`]. Analytic derivatives are optional and
/// fall back to central finite differences.
pub trait StateFamily: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn param_count(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Unbounded
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat;

    fn analytic_derivative(&self, _x: &[f64], _i: usize) -> Option<CMat> {
        None
    }

    fn analytic_second_derivative(&self, _x: &[f64], _i: usize, _j: usize) -> Option<CMat> {
        None
    }
}

fn check_arity(f: &dyn StateFamily, x: &ParameterPoint) -> Result<()> {
    if x.len() != f.param_count() {
        return Err(Error::InvalidArgument(format!(
            "{} expects {} parameters, got {}",
            f.name(),
            f.param_count(),
            x.len()
        )));
    }
    Ok(())
}

/// Fails with `BoundaryPoint` unless every point within Chebyshev distance
/// `reach` of `x` lies strictly inside the domain.
pub fn require_interior(f: &dyn StateFamily, x: &ParameterPoint, reach: f64) -> Result<()> {
    let distance = f.domain().boundary_distance(x.as_slice());
    if distance <= reach {
        return Err(Error::BoundaryPoint {
            x: x.as_slice().to_vec(),
            distance,
            required: reach,
        });
    }
    Ok(())
}

fn inf_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Validated state at `x`.
pub fn evaluate(f: &dyn StateFamily, x: &ParameterPoint, tol: &ToleranceConfig) -> Result<DensityMatrix> {
    check_arity(f, x)?;
    let violation = |reason: String| Error::DomainViolation {
        x: x.as_slice().to_vec(),
        reason,
    };
    if f.domain().boundary_distance(x.as_slice()) <= 0.0 {
        return Err(violation(format!("outside the domain of {}", f.name())));
    }
    let raw = f.raw_matrix(x.as_slice());
    if raw.nrows() != f.dim() || raw.ncols() != f.dim() {
        return Err(violation(format!("evaluator returned a {:?} matrix", raw.shape())));
    }
    let h = HermitianMatrix::new(raw, tol).map_err(|e| violation(e.to_string()))?;
    DensityMatrix::new(h, tol).map_err(|e| violation(e.to_string()))
}

fn stencil(f: &dyn StateFamily, x: &ParameterPoint, shifts: &[(usize, f64)], tol: &ToleranceConfig) -> Result<CMat> {
    let mut p = x.as_slice().to_vec();
    for &(i, d) in shifts {
        p[i] += d;
    }
    Ok(evaluate(f, &ParameterPoint(p), tol)?.matrix().as_matrix().clone())
}

/// First partial derivative `d rho / d x_i`.
pub fn derivative(f: &dyn StateFamily, x: &ParameterPoint, i: usize, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    check_arity(f, x)?;
    check_index(f, i)?;
    if let Some(d) = f.analytic_derivative(x.as_slice(), i) {
        require_interior(f, x, 0.0)?;
        return Ok(HermitianMatrix::hermitize(&d));
    }
    let h = tol.fd_step;
    require_interior(f, x, h)?;
    let plus = stencil(f, x, &[(i, h)], tol)?;
    let minus = stencil(f, x, &[(i, -h)], tol)?;
    Ok(HermitianMatrix::hermitize(&(plus - minus).unscale(2.0 * h)))
}

/// Second partial derivative `d^2 rho / d x_i d x_j`.
pub fn second_derivative(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    i: usize,
    j: usize,
    tol: &ToleranceConfig,
) -> Result<HermitianMatrix> {
    check_arity(f, x)?;
    check_index(f, i)?;
    check_index(f, j)?;
    if let Some(d) = f.analytic_second_derivative(x.as_slice(), i, j) {
        require_interior(f, x, 0.0)?;
        return Ok(HermitianMatrix::hermitize(&d));
    }
    let h = tol.fd_step2;
    require_interior(f, x, h)?;
    let m = if i == j {
        let plus = stencil(f, x, &[(i, h)], tol)?;
        let mid = stencil(f, x, &[], tol)?;
        let minus = stencil(f, x, &[(i, -h)], tol)?;
        (plus - mid.scale(2.0) + minus).unscale(h * h)
    } else {
        let pp = stencil(f, x, &[(i, h), (j, h)], tol)?;
        let pm = stencil(f, x, &[(i, h), (j, -h)], tol)?;
        let mp = stencil(f, x, &[(i, -h), (j, h)], tol)?;
        let mm = stencil(f, x, &[(i, -h), (j, -h)], tol)?;
        (pp - pm - mp + mm).unscale(4.0 * h * h)
    };
    Ok(HermitianMatrix::hermitize(&m))
}

fn check_index(f: &dyn StateFamily, i: usize) -> Result<()> {
    if i >= f.param_count() {
        return Err(Error::InvalidArgument(format!(
            "parameter index {i} out of range for {} parameters",
            f.param_count()
        )));
    }
    Ok(())
}

/// Second-order Taylor data of `rho(x + eps * y) = base + eps R + eps^2 S + o(eps^2)`.
#[derive(Debug, Clone)]
pub struct DirectionalJet {
    pub base: DensityMatrix,
    /// First directional derivative `sum_i y_i d_i rho`.
    pub r: HermitianMatrix,
    /// Half the second directional derivative `1/2 sum_ij y_i y_j d_i d_j rho`.
    pub s: HermitianMatrix,
}

pub fn directional_jet(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    tol: &ToleranceConfig,
) -> Result<DirectionalJet> {
    check_arity(f, x)?;
    if y.len() != f.param_count() {
        return Err(Error::InvalidArgument(format!(
            "direction has {} components, expected {}",
            y.len(),
            f.param_count()
        )));
    }
    if inf_norm(y) == 0.0 || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("direction must be finite and nonzero".into()));
    }
    let base = evaluate(f, x, tol)?;
    let d = f.dim();
    let mut r = HermitianMatrix::zeros(d);
    let mut s = HermitianMatrix::zeros(d);
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        r = r.axpy(yi, &derivative(f, x, i, tol)?);
        for (j, &yj) in y.iter().enumerate() {
            if yj == 0.0 {
                continue;
            }
            s = s.axpy(0.5 * yi * yj, &second_derivative(f, x, i, j, tol)?);
        }
    }
    Ok(DirectionalJet { base, r, s })
}

/// Wraps a family and hides its analytic derivatives, forcing finite differences.
pub struct FiniteDifferenceOnly<F>(pub F);

impl<F: StateFamily> StateFamily for FiniteDifferenceOnly<F> {
    fn name(&self) -> String {
        format!("{} (finite differences)", self.0.name())
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn param_count(&self) -> usize {
        self.0.param_count()
    }

    fn domain(&self) -> Domain {
        self.0.domain()
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat {
        self.0.raw_matrix(x)
    }
}
