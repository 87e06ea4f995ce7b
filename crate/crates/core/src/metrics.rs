//! Quantum Fisher information, fidelity, Bures distance and the forward and
//! centered finite-difference Bures metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, singular_values, sqrt_from_spectrum, svd, to_basis, CMat, DensityMatrix, HermitianMatrix};
use crate::state::{derivative, evaluate, require_interior, ParameterPoint, StateFamily};
use crate::tolerance::ToleranceConfig;

/// Uhlmann fidelity `Tr sqrt(sqrt(r1) r2 sqrt(r1))`, computed as the trace norm
/// of `sqrt(r1) sqrt(r2)` and clamped to `[0, 1]`.
pub fn fidelity(r1: &DensityMatrix, r2: &DensityMatrix, tol: &ToleranceConfig) -> Result<f64> {
    check_dims(r1.dim(), r2.dim())?;
    let a = sqrt_from_spectrum(r1.spectrum(), tol);
    let b = sqrt_from_spectrum(r2.spectrum(), tol);
    let f: f64 = singular_values(&(a.as_matrix() * b.as_matrix())).iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `Tr sqrt(sqrt(a) b sqrt(a))` for unnormalized PSD matrices.
pub fn fidelity_psd(a: &HermitianMatrix, b: &HermitianMatrix, tol: &ToleranceConfig) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let ra = psd_sqrt(a, tol)?;
    let rb = psd_sqrt(b, tol)?;
    Ok(singular_values(&(ra.as_matrix() * rb.as_matrix())).iter().sum())
}

fn psd_sqrt(m: &HermitianMatrix, tol: &ToleranceConfig) -> Result<HermitianMatrix> {
    let s = eigh(m, tol)?;
    if s.min_eigenvalue() < -tol.psd_tol {
        return Err(Error::NegativeEigenvalue {
            value: s.min_eigenvalue(),
            tol: tol.psd_tol,
        });
    }
    Ok(sqrt_from_spectrum(&s.clamp_negative(), tol))
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            left: (a, a),
            right: (b, b),
        });
    }
    Ok(())
}

/// Squared Bures distance `2 (1 - F_B)`.
///
/// Evaluated as `|sqrt(r1) - sqrt(r2) U|_F^2` with the Procrustes-optimal
/// unitary `U`, which equals `Tr r1 + Tr r2 - 2 F_B` but keeps relative
/// accuracy when the two states are close.
pub fn bures_distance_squared(r1: &DensityMatrix, r2: &DensityMatrix, tol: &ToleranceConfig) -> Result<f64> {
    check_dims(r1.dim(), r2.dim())?;
    let a = sqrt_from_spectrum(r1.spectrum(), tol);
    let b = sqrt_from_spectrum(r2.spectrum(), tol);
    let factors = svd(&(a.as_matrix() * b.as_matrix()));
    let u = factors.v * factors.u.adjoint();
    let d2 = (a.as_matrix() - b.as_matrix() * u).norm_squared();
    if d2 < -tol.fid_tol {
        return Err(Error::SolverFailure(format!("negative squared distance {d2:e}")));
    }
    Ok(d2.max(0.0))
}

/// Bures distance `sqrt(2 (1 - F_B))`.
pub fn bures_distance(r1: &DensityMatrix, r2: &DensityMatrix, tol: &ToleranceConfig) -> Result<f64> {
    Ok(bures_distance_squared(r1, r2, tol)?.sqrt())
}

/// Real symmetric QFI matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QfiMatrix {
    #[serde(with = "real_matrix_serde")]
    entries: DMatrix<f64>,
}

impl QfiMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite QFI entry".into()));
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        Ok(Self { entries: sym })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `y^T F y`
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| y[i] * self.entries[(i, j)] * y[j]).sum::<f64>())
            .sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.min()
    }
}

pub mod real_matrix_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

/// QFI entries from a spectral decomposition and derivative matrices:
/// `F^{ij} = 2 sum_{l_k + l_l > zero} Re[<k|D_i|l><l|D_j|k>] / (l_k + l_l)`.
///
/// Any orthonormal eigenbasis gives the same result; degenerate eigenspaces
/// may be rotated freely.
pub fn qfi_in_basis(
    eigenvalues: &[f64],
    basis: &CMat,
    derivs: &[HermitianMatrix],
    zero_threshold: f64,
) -> DMatrix<f64> {
    let n = eigenvalues.len();
    let rotated: Vec<CMat> = derivs.iter().map(|d| to_basis(basis, d.as_matrix())).collect();
    let p = derivs.len();
    let mut f = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    let s = eigenvalues[k] + eigenvalues[l];
                    if s > zero_threshold {
                        acc += (rotated[i][(k, l)] * rotated[j][(l, k)]).re / s;
                    }
                }
            }
            f[(i, j)] = 2.0 * acc;
            f[(j, i)] = 2.0 * acc;
        }
    }
    f
}

/// QFI along a single derivative `R`: `2 sum |R_kl|^2 / (l_k + l_l)` in the eigenbasis of `base`.
pub fn qfi_from_derivative(base: &DensityMatrix, r: &HermitianMatrix) -> f64 {
    let s = base.spectrum();
    qfi_in_basis(
        s.eigenvalues(),
        s.eigenvectors(),
        std::slice::from_ref(r),
        s.zero_threshold(),
    )[(0, 0)]
}

pub fn qfi_matrix(f: &dyn StateFamily, x: &ParameterPoint, tol: &ToleranceConfig) -> Result<QfiMatrix> {
    let rho = evaluate(f, x, tol)?;
    let derivs = (0..f.param_count())
        .map(|i| derivative(f, x, i, tol))
        .collect::<Result<Vec<_>>>()?;
    let s = rho.spectrum();
    QfiMatrix::new(qfi_in_basis(
        s.eigenvalues(),
        s.eigenvectors(),
        &derivs,
        s.zero_threshold(),
    ))
}

/// `sum_ij F^{ij} y_i y_j`
pub fn qfi_directional(f: &dyn StateFamily, x: &ParameterPoint, y: &[f64], tol: &ToleranceConfig) -> Result<f64> {
    check_direction(f, y)?;
    Ok(qfi_matrix(f, x, tol)?.quadratic_form(y))
}

fn check_direction(f: &dyn StateFamily, y: &[f64]) -> Result<()> {
    if y.len() != f.param_count() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "direction must have {} finite components",
            f.param_count()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `d_B^2(rho(x), rho(x + eps y)) / eps^2`
    Forward,
    /// `d_B^2(rho(x - eps y / 2), rho(x + eps y / 2)) / eps^2`
    Central,
}

/// Step and extrapolation settings for the metric estimators.
///
/// Richardson extrapolation applies to the centered scheme only; the forward
/// scheme is always reported at the plain step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub eps: f64,
    pub richardson: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub step: f64,
    pub richardson_used: bool,
    pub scheme: Scheme,
}

fn check_step(eps: f64, tol: &ToleranceConfig) -> Result<()> {
    if !eps.is_finite() || eps < tol.min_step {
        return Err(Error::StepTooSmall {
            step: eps,
            floor: tol.min_step,
        });
    }
    Ok(())
}

fn inf_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn central_raw(f: &dyn StateFamily, x: &ParameterPoint, y: &[f64], eps: f64, tol: &ToleranceConfig) -> Result<f64> {
    let lo = evaluate(f, &x.offset(-0.5 * eps, y), tol)?;
    let hi = evaluate(f, &x.offset(0.5 * eps, y), tol)?;
    Ok(bures_distance_squared(&lo, &hi, tol)? / (eps * eps))
}

/// Centered Bures metric `h` along `y`.
pub fn bures_metric_central(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    opts: MetricOptions,
    tol: &ToleranceConfig,
) -> Result<MetricEstimate> {
    check_direction(f, y)?;
    check_step(opts.eps, tol)?;
    require_interior(f, x, 0.5 * opts.eps * inf_norm(y))?;
    let coarse = central_raw(f, x, y, opts.eps, tol)?;
    let value = if opts.richardson {
        let fine = central_raw(f, x, y, 0.5 * opts.eps, tol)?;
        (4.0 * fine - coarse) / 3.0
    } else {
        coarse
    };
    finish(value, opts.eps, opts.richardson, Scheme::Central, tol)
}

/// Forward Bures metric `g` along `y`.
pub fn bures_metric_forward(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    eps: f64,
    tol: &ToleranceConfig,
) -> Result<MetricEstimate> {
    check_direction(f, y)?;
    check_step(eps, tol)?;
    require_interior(f, x, eps * inf_norm(y))?;
    let base = evaluate(f, x, tol)?;
    let moved = evaluate(f, &x.offset(eps, y), tol)?;
    let value = bures_distance_squared(&base, &moved, tol)? / (eps * eps);
    finish(value, eps, false, Scheme::Forward, tol)
}

fn finish(
    value: f64,
    step: f64,
    richardson_used: bool,
    scheme: Scheme,
    tol: &ToleranceConfig,
) -> Result<MetricEstimate> {
    if value < -tol.metric_tol {
        return Err(Error::SolverFailure(format!("negative metric estimate {value:e}")));
    }
    Ok(MetricEstimate {
        value: value.max(0.0),
        step,
        richardson_used,
        scheme,
    })
}

/// Directional estimate under either scheme with shared options.
pub fn bures_metric(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    scheme: Scheme,
    opts: MetricOptions,
    tol: &ToleranceConfig,
) -> Result<MetricEstimate> {
    match scheme {
        Scheme::Central => bures_metric_central(f, x, y, opts, tol),
        Scheme::Forward => bures_metric_forward(f, x, y, opts.eps, tol),
    }
}

/// Polarizes a quadratic form `q` into a symmetric `P x P` matrix:
/// diagonal `q(e_i)`, off-diagonal `[q(e_i + e_j) - q(e_i - e_j)] / 4`.
pub fn polarize<Q>(p: usize, q: Q) -> Result<DMatrix<f64>>
where
    Q: Fn(&[f64]) -> Result<f64> + Sync,
{
    let unit = |i: usize| -> Vec<f64> { (0..p).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                q(&unit(i))
            } else {
                let plus: Vec<f64> = (0..p).map(|k| unit(i)[k] + unit(j)[k]).collect();
                let minus: Vec<f64> = (0..p).map(|k| unit(i)[k] - unit(j)[k]).collect();
                Ok((q(&plus)? - q(&minus)?) / 4.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut m = DMatrix::zeros(p, p);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

/// Metric matrix `g^{ij}` or `h^{ij}` by polarization of directional estimates.
pub fn metric_matrix(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    scheme: Scheme,
    opts: MetricOptions,
    tol: &ToleranceConfig,
) -> Result<DMatrix<f64>> {
    polarize(f.param_count(), |y| Ok(bures_metric(f, x, y, scheme, opts, tol)?.value))
}

/// Cramér-Rao bound for `n_expr` repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub n_expr: u64,
    pub bound: CrbBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CrbBound {
    /// `1 / (n F)` for a single parameter.
    Scalar { bound: f64 },
    /// `F^{-1} / n`
    Matrix {
        #[serde(with = "real_matrix_serde")]
        bound: DMatrix<f64>,
    },
    /// The QFI is singular; no finite bound along the listed directions.
    Unbounded { null_space: Vec<Vec<f64>> },
}

pub fn crb(qfi: &QfiMatrix, n_expr: u64, tol: &ToleranceConfig) -> Result<CrbReport> {
    if n_expr == 0 {
        return Err(Error::InvalidArgument("n_expr must be at least 1".into()));
    }
    let n = n_expr as f64;
    let f = qfi.as_matrix();
    let bound = if qfi.dim() == 1 {
        if f[(0, 0)] > tol.qfi_psd_tol {
            CrbBound::Scalar {
                bound: 1.0 / (n * f[(0, 0)]),
            }
        } else {
            CrbBound::Unbounded {
                null_space: vec![vec![1.0]],
            }
        }
    } else {
        let eig = SymmetricEigen::new(f.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if max > tol.qfi_psd_tol && min > 0.0 && max / min < tol.cond_max {
            let inv = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / (n * l)))
                * eig.eigenvectors.transpose();
            CrbBound::Matrix {
                bound: (&inv + inv.transpose()) * 0.5,
            }
        } else {
            let cut = (max / tol.cond_max).max(tol.qfi_psd_tol);
            let null_space = (0..qfi.dim())
                .filter(|&k| eig.eigenvalues[k] <= cut)
                .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
                .collect();
            CrbBound::Unbounded { null_space }
        }
    };
    Ok(CrbReport { n_expr, bound })
}
