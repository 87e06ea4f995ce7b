//! Per-point aggregation of the QFI, both Bures metrics and the rank-change
//! correction, as emitted by the command-line front end.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::kernel_hessian_correction;
use crate::error::{Error, Result};
use crate::metrics::{crb, metric_matrix, polarize, qfi_matrix, real_matrix_serde, CrbReport, MetricOptions, Scheme};
use crate::state::{evaluate, ParameterPoint, StateFamily};
use crate::tolerance::ToleranceConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Number of experiments assumed by the reported Cramér-Rao bound.
pub const DEFAULT_N_EXPR: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema: u32,
    pub model: String,
    pub x: Vec<f64>,
    pub eps: f64,
    pub richardson: bool,
    pub rank_tol: f64,
    /// QFI matrix `F`.
    #[serde(with = "real_matrix_serde")]
    pub fisher: DMatrix<f64>,
    #[serde(with = "real_matrix_serde")]
    pub four_g: DMatrix<f64>,
    #[serde(with = "real_matrix_serde")]
    pub four_h: DMatrix<f64>,
    /// Polarized rank-change correction.
    #[serde(with = "real_matrix_serde")]
    pub correction: DMatrix<f64>,
    /// `4g - F - correction`
    #[serde(with = "real_matrix_serde")]
    pub eq5_residual: DMatrix<f64>,
    /// `4h - F`
    #[serde(with = "real_matrix_serde")]
    pub thm1_residual: DMatrix<f64>,
    /// Spectrum of `rho(x)`, descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub crb: CrbReport,
}

pub fn metric_report(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    opts: MetricOptions,
    tol: &ToleranceConfig,
) -> Result<MetricReport> {
    let rho = evaluate(f, x, tol)?;
    let qfi = qfi_matrix(f, x, tol)?;
    let fisher = qfi.as_matrix().clone();
    let four_g = metric_matrix(f, x, Scheme::Forward, opts, tol)? * 4.0;
    let four_h = metric_matrix(f, x, Scheme::Central, opts, tol)? * 4.0;
    let correction = polarize(f.param_count(), |y| Ok(kernel_hessian_correction(f, x, y, tol)?.value))?;
    let eq5_residual = &four_g - &fisher - &correction;
    let thm1_residual = &four_h - &fisher;
    let spectrum = rho.spectrum();
    Ok(MetricReport {
        schema: SCHEMA_VERSION,
        model: f.name(),
        x: x.as_slice().to_vec(),
        eps: opts.eps,
        richardson: opts.richardson,
        rank_tol: tol.rank_tol,
        fisher,
        four_g,
        four_h,
        correction,
        eq5_residual,
        thm1_residual,
        eigenvalues: spectrum.eigenvalues().to_vec(),
        rank: spectrum.rank(),
        crb: crb(&qfi, DEFAULT_N_EXPR, tol)?,
    })
}

/// One grid point of a one-parameter sweep; every value is the diagonal
/// entry along the swept axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub fisher: f64,
    pub four_g: f64,
    pub four_h: f64,
    pub correction: f64,
    pub eq5_residual: f64,
    pub thm1_residual: f64,
}

pub const SWEEP_HEADER: [&str; 7] = [
    "x",
    "fisher",
    "four_g",
    "four_h",
    "correction",
    "eq5_residual",
    "thm1_residual",
];

impl SweepRow {
    pub fn fields(&self) -> [f64; 7] {
        [
            self.x,
            self.fisher,
            self.four_g,
            self.four_h,
            self.correction,
            self.eq5_residual,
            self.thm1_residual,
        ]
    }
}

/// Grid and base point of a sweep along one parameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    /// Values of the parameters that are held fixed; the swept entry is ignored.
    pub base: Vec<f64>,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "need lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / n
                }
            })
            .collect())
    }
}

/// Evaluates every grid point in parallel; rows come back in grid order.
/// Any failure aborts the sweep and names the offending grid point.
pub fn sweep(
    f: &dyn StateFamily,
    spec: &SweepSpec,
    opts: MetricOptions,
    tol: &ToleranceConfig,
) -> Result<Vec<SweepRow>> {
    let p = f.param_count();
    if spec.axis >= p {
        return Err(Error::InvalidArgument(format!(
            "axis {} out of range for {p} parameters",
            spec.axis
        )));
    }
    if spec.base.len() != p {
        return Err(Error::InvalidArgument(format!(
            "base point needs {p} entries, got {}",
            spec.base.len()
        )));
    }
    let grid = spec.grid()?;
    grid.par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut x = spec.base.clone();
            x[spec.axis] = t;
            let x = ParameterPoint::new(x)?;
            let r = metric_report(f, &x, opts, tol).map_err(|e| at_grid_point(k, t, e))?;
            let a = spec.axis;
            Ok(SweepRow {
                x: t,
                fisher: r.fisher[(a, a)],
                four_g: r.four_g[(a, a)],
                four_h: r.four_h[(a, a)],
                correction: r.correction[(a, a)],
                eq5_residual: r.eq5_residual[(a, a)],
                thm1_residual: r.thm1_residual[(a, a)],
            })
        })
        .collect()
}

fn at_grid_point(k: usize, t: f64, e: Error) -> Error {
    match e {
        Error::DomainViolation { x, reason } => Error::DomainViolation {
            x,
            reason: format!("grid point {k} (x = {t}): {reason}"),
        },
        Error::BoundaryPoint { .. } | Error::StepTooSmall { .. } => {
            Error::InvalidArgument(format!("grid point {k} (x = {t}): {e}"))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::CrbBound;
    use crate::state::{builtin, Constant};
    use approx::assert_abs_diff_eq;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn paper_example_at_origin() {
        let f = builtin("paper-example").unwrap();
        let r = metric_report(&*f, &ParameterPoint::scalar(0.0), MetricOptions::default(), &tol()).unwrap();
        assert_eq!(r.fisher[(0, 0)], 0.0);
        assert_abs_diff_eq!(r.four_g[(0, 0)], 4.0, epsilon = 1e-3);
        assert!(r.four_h[(0, 0)] <= 1e-6);
        assert_abs_diff_eq!(r.correction[(0, 0)], 4.0, epsilon = 1e-6);
        assert_eq!(r.rank, 1);
        assert!(matches!(r.crb.bound, CrbBound::Unbounded { .. }));
    }

    #[test]
    fn paper_example_full_rank() {
        // commuting family: F = sum (d lambda)^2 / lambda
        let f = builtin("paper-example").unwrap();
        let r = metric_report(&*f, &ParameterPoint::scalar(0.5), MetricOptions::default(), &tol()).unwrap();
        let exact = 4.0 + 4.0 / 3.0;
        assert_abs_diff_eq!(r.fisher[(0, 0)], exact, epsilon = 1e-8);
        assert_abs_diff_eq!(r.four_h[(0, 0)], exact, epsilon = 1e-4 * exact);
        assert_abs_diff_eq!(r.four_g[(0, 0)], exact, epsilon = 1e-3 * exact);
        assert_abs_diff_eq!(r.correction[(0, 0)], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_model_is_zero() {
        let r = metric_report(
            &Constant::new(3),
            &ParameterPoint::scalar(0.2),
            MetricOptions::default(),
            &tol(),
        )
        .unwrap();
        for m in [&r.fisher, &r.four_g, &r.four_h, &r.correction] {
            assert_eq!(m.abs().max(), 0.0);
        }
        assert!(matches!(r.crb.bound, CrbBound::Unbounded { .. }));
    }

    #[test]
    fn sweep_rows_in_grid_order() {
        let f = builtin("bloch-linear").unwrap();
        let spec = SweepSpec {
            axis: 0,
            lo: -0.9,
            hi: 0.9,
            steps: 7,
            base: vec![0.0],
        };
        let rows = sweep(&*f, &spec, MetricOptions::default(), &tol()).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].x, -0.9);
        assert_eq!(rows[6].x, 0.9);
        for r in &rows {
            assert_abs_diff_eq!(r.fisher, 1.0 / (1.0 - r.x * r.x), epsilon = 1e-6);
        }
    }

    #[test]
    fn sweep_rejects_bad_specs() {
        let f = builtin("bloch-linear").unwrap();
        let bad = SweepSpec {
            axis: 0,
            lo: 0.5,
            hi: 0.1,
            steps: 3,
            base: vec![0.0],
        };
        assert!(sweep(&*f, &bad, MetricOptions::default(), &tol()).is_err());
        let one = SweepSpec {
            steps: 1,
            ..SweepSpec {
                axis: 0,
                lo: 0.0,
                hi: 0.1,
                steps: 3,
                base: vec![0.0],
            }
        };
        assert!(sweep(&*f, &one, MetricOptions::default(), &tol()).is_err());
        let out = SweepSpec {
            axis: 0,
            lo: -2.0,
            hi: 0.0,
            steps: 3,
            base: vec![0.0],
        };
        assert!(sweep(&*f, &out, MetricOptions::default(), &tol()).is_err());
    }
}
