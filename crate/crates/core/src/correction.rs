//! Support/kernel block decomposition of a directional jet and the
//! rank-change correction `4g - F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, to_basis, CMat, HermitianMatrix};
use crate::metrics::{bures_metric_forward, qfi_directional};
use crate::state::{directional_jet, DirectionalJet, ParameterPoint, StateFamily};
use crate::tolerance::ToleranceConfig;

/// Blocks of `R` and `S` in an eigenbasis of the base state ordered as
/// (support, kernel).
#[derive(Debug, Clone)]
pub struct SupportDecomposition {
    lambda_plus: Vec<f64>,
    basis: CMat,
    r: CMat,
    s: CMat,
    t22: CMat,
    zero_threshold: f64,
}

fn block(m: &CMat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CMat {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

impl SupportDecomposition {
    /// Decomposes a jet in the eigenbasis of its base state; the rank comes
    /// from the state's spectrum.
    pub fn decompose(jet: &DirectionalJet, tol: &ToleranceConfig) -> Result<Self> {
        let s = jet.base.spectrum();
        let lambda_plus = s.eigenvalues()[..s.rank()].to_vec();
        Self::in_basis(
            lambda_plus,
            s.eigenvectors().clone(),
            &jet.r,
            &jet.s,
            s.zero_threshold(),
            tol,
        )
    }

    /// Decomposes `R`, `S` given an orthonormal `basis` whose first
    /// `lambda_plus.len()` columns span the support, with those eigenvalues.
    pub fn in_basis(
        lambda_plus: Vec<f64>,
        basis: CMat,
        r: &HermitianMatrix,
        s: &HermitianMatrix,
        zero_threshold: f64,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let d = basis.nrows();
        let rank = lambda_plus.len();
        if r.dim() != d || s.dim() != d || basis.ncols() != d {
            return Err(Error::ShapeMismatch {
                left: basis.shape(),
                right: (r.dim(), s.dim()),
            });
        }
        if let Some(l) = lambda_plus.iter().find(|&&l| l <= 0.0) {
            return Err(Error::JetInconsistent(format!(
                "support eigenvalue {l:e} is not positive"
            )));
        }
        let rt = to_basis(&basis, r.as_matrix());
        let st = to_basis(&basis, s.as_matrix());
        let (sup, ker) = (0..rank, rank..d);

        let r22 = block(&rt, ker.clone(), ker.clone());
        let r22_norm = r22.norm();
        if r22_norm > tol.jet_psd_tol {
            return Err(Error::JetInconsistent(format!(
                "kernel block of R has norm {r22_norm:e} > {:e}",
                tol.jet_psd_tol
            )));
        }
        let inv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            rank,
            lambda_plus.iter().map(|l| c(1.0 / l, 0.0)),
        ));
        let r12 = block(&rt, sup.clone(), ker.clone());
        let t22 = block(&st, ker.clone(), ker.clone()) - r12.adjoint() * &inv * &r12;
        let t22 = crate::linalg::hermitize(&t22);
        if d > rank {
            let min = eigh(&HermitianMatrix::hermitize(&t22), tol)?.min_eigenvalue();
            if min < -tol.jet_psd_tol {
                return Err(Error::JetInconsistent(format!(
                    "S22 - R21 L^-1 R12 has eigenvalue {min:e} < -{:e}",
                    tol.jet_psd_tol
                )));
            }
        }
        Ok(Self {
            lambda_plus,
            basis,
            r: rt,
            s: st,
            t22,
            zero_threshold,
        })
    }

    pub fn rank(&self) -> usize {
        self.lambda_plus.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.basis.nrows() - self.rank()
    }

    pub fn lambda_plus(&self) -> &[f64] {
        &self.lambda_plus
    }

    /// Columns: support eigenvectors, then kernel eigenvectors.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    fn split(&self, m: &CMat, top: bool, left: bool) -> CMat {
        let (r, d) = (self.rank(), self.basis.nrows());
        let rows = if top { 0..r } else { r..d };
        let cols = if left { 0..r } else { r..d };
        block(m, rows, cols)
    }

    pub fn r11(&self) -> CMat {
        self.split(&self.r, true, true)
    }

    pub fn r12(&self) -> CMat {
        self.split(&self.r, true, false)
    }

    pub fn r21(&self) -> CMat {
        self.split(&self.r, false, true)
    }

    pub fn r22(&self) -> CMat {
        self.split(&self.r, false, false)
    }

    pub fn s11(&self) -> CMat {
        self.split(&self.s, true, true)
    }

    pub fn s12(&self) -> CMat {
        self.split(&self.s, true, false)
    }

    pub fn s21(&self) -> CMat {
        self.split(&self.s, false, true)
    }

    pub fn s22(&self) -> CMat {
        self.split(&self.s, false, false)
    }

    /// `S22 - R21 L+^-1 R12`
    pub fn t22(&self) -> &CMat {
        &self.t22
    }

    /// `G12 = -i L+^-1 R12`
    pub fn g12(&self) -> CMat {
        let mut g = self.r12();
        for (i, l) in self.lambda_plus.iter().enumerate() {
            let mut row = g.row_mut(i);
            row *= c(0.0, -1.0 / l);
        }
        g
    }

    /// `G21 = i R21 L+^-1`
    pub fn g21(&self) -> CMat {
        let mut g = self.r21();
        for (j, l) in self.lambda_plus.iter().enumerate() {
            let mut col = g.column_mut(j);
            col *= c(0.0, 1.0 / l);
        }
        g
    }

    /// Hermitian generator with off-diagonal blocks `G12`, `G21`, in the
    /// decomposition basis.
    pub fn generator(&self) -> HermitianMatrix {
        let (r, d) = (self.rank(), self.basis.nrows());
        let mut g = CMat::zeros(d, d);
        g.view_mut((0, r), (r, d - r)).copy_from(&self.g12());
        g.view_mut((r, 0), (d - r, r)).copy_from(&self.g21());
        HermitianMatrix::hermitize(&g)
    }

    /// `4 Tr T22`, zero when the kernel is empty.
    pub fn correction(&self) -> f64 {
        4.0 * self.t22.diagonal().iter().map(|z| z.re).sum::<f64>()
    }
}

/// Rank-change correction along a direction, with the rank split that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCorrection {
    pub value: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    /// Eigenvalues at or below this count as kernel.
    pub zero_threshold: f64,
}

/// `2 sum_{k in kernel} y^T (Hess lambda_k) y`, evaluated as `4 Tr T22`.
pub fn kernel_hessian_correction(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    tol: &ToleranceConfig,
) -> Result<KernelCorrection> {
    let jet = directional_jet(f, x, y, tol)?;
    let dec = SupportDecomposition::decompose(&jet, tol)?;
    let value = dec.correction();
    if value < -tol.corr_tol {
        return Err(Error::JetInconsistent(format!("negative correction {value:e}")));
    }
    Ok(KernelCorrection {
        value: value.max(0.0),
        rank: dec.rank(),
        kernel_dim: dec.kernel_dim(),
        zero_threshold: dec.zero_threshold(),
    })
}

/// `|4 g - F - correction|` at step `eps`.
pub fn eq5_residual(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    eps: f64,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let g = bures_metric_forward(f, x, y, eps, tol)?.value;
    let fisher = qfi_directional(f, x, y, tol)?;
    let corr = kernel_hessian_correction(f, x, y, tol)?.value;
    Ok((4.0 * g - fisher - corr).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;
    use crate::random::{random_hermitian, random_unitary};
    use crate::state::{
        builtin, evaluate, random_full_rank_polynomial, random_rank_deficient_polynomial, Constant, PaperExample,
        BUILTIN_NAMES,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn sigma_x() -> HermitianMatrix {
        HermitianMatrix::hermitize(&CMat::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
    }

    #[test]
    fn paper_example_blocks() {
        let jet = directional_jet(&PaperExample, &ParameterPoint::scalar(0.0), &[1.0], &tol()).unwrap();
        let dec = SupportDecomposition::decompose(&jet, &tol()).unwrap();
        assert_eq!(dec.lambda_plus(), &[1.0]);
        assert_eq!(dec.r11().norm() + dec.r12().norm() + dec.r22().norm(), 0.0);
        assert_eq!(dec.t22()[(0, 0)], c(1.0, 0.0));
        assert_eq!(dec.s22()[(0, 0)], c(1.0, 0.0));
        assert_eq!(dec.correction(), 4.0);
    }

    #[test]
    fn full_rank_has_empty_kernel() {
        let jet = directional_jet(&crate::state::BlochLinear, &ParameterPoint::scalar(0.2), &[1.0], &tol()).unwrap();
        let dec = SupportDecomposition::decompose(&jet, &tol()).unwrap();
        assert_eq!(dec.kernel_dim(), 0);
        assert_eq!(dec.t22().nrows(), 0);
        assert_eq!(dec.correction(), 0.0);
    }

    #[test]
    fn rank_one_closed_form_has_zero_t22() {
        let base = DensityMatrix::new(HermitianMatrix::from_diagonal(&[1.0, 0.0]), &tol()).unwrap();
        let jet = DirectionalJet {
            base,
            r: sigma_x(),
            s: HermitianMatrix::from_diagonal(&[0.0, 1.0]),
        };
        let dec = SupportDecomposition::decompose(&jet, &tol()).unwrap();
        assert_abs_diff_eq!(dec.t22()[(0, 0)].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.correction(), 0.0, epsilon = 1e-14);
        let g = dec.generator();
        assert!((g.as_matrix() - g.adjoint()).norm() == 0.0);
        assert_eq!(dec.g12()[(0, 0)], c(0.0, -1.0));
    }

    #[test]
    fn inconsistent_jets_are_rejected() {
        let base = DensityMatrix::new(HermitianMatrix::from_diagonal(&[1.0, 0.0]), &tol()).unwrap();
        let bad_r = DirectionalJet {
            base: base.clone(),
            r: HermitianMatrix::from_diagonal(&[-1e-3, 1e-3]),
            s: HermitianMatrix::zeros(2),
        };
        let err = SupportDecomposition::decompose(&bad_r, &tol()).unwrap_err();
        assert_eq!(err.kind(), "JetInconsistent");
        let bad_t = DirectionalJet {
            base,
            r: sigma_x(),
            s: HermitianMatrix::zeros(2),
        };
        let err = SupportDecomposition::decompose(&bad_t, &tol()).unwrap_err();
        assert_eq!(err.kind(), "JetInconsistent");
    }

    #[test]
    fn correction_examples() {
        let t = tol();
        let p0 = ParameterPoint::scalar(0.0);
        let paper = kernel_hessian_correction(&PaperExample, &p0, &[1.0], &t).unwrap();
        assert_eq!(paper.value, 4.0);
        assert_eq!(paper.kernel_dim, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let full = random_full_rank_polynomial(&mut rng, 3, 2);
        let p = ParameterPoint::new(vec![0.1, 0.4]).unwrap();
        assert_eq!(
            kernel_hessian_correction(&full, &p, &[1.0, -0.5], &t).unwrap().value,
            0.0
        );
    }

    #[test]
    fn eq5_residual_examples() {
        let t = tol();
        let p0 = ParameterPoint::scalar(0.0);
        assert!(eq5_residual(&PaperExample, &p0, &[1.0], 1e-4, &t).unwrap() <= 1e-3);
        assert_eq!(eq5_residual(&Constant::new(2), &p0, &[1.0], 1e-4, &t).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let f = random_full_rank_polynomial(&mut rng, 3, 2);
            let p = ParameterPoint::new(vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).unwrap();
            let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            assert!(eq5_residual(&f, &p, &y, 1e-5, &t).unwrap() <= 1e-4);
        }
    }

    fn kernel_sum(f: &dyn StateFamily, x: &ParameterPoint, kernel: usize, tol: &ToleranceConfig) -> f64 {
        let rho = evaluate(f, x, tol).unwrap();
        let e = rho.spectrum().eigenvalues();
        e[e.len() - kernel..].iter().sum()
    }

    #[test]
    fn correction_matches_eigenvalue_hessian_oracle() {
        // second difference of the summed kernel eigenvalues along y
        let t = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (dim, rank, params) in [(2, 1, 1), (3, 2, 1), (3, 1, 2), (4, 2, 2)] {
            let f = random_rank_deficient_polynomial(&mut rng, dim, rank, params);
            let p0 = ParameterPoint::new(vec![0.0; params]).unwrap();
            for _ in 0..3 {
                let y: Vec<f64> = (0..params).map(|_| rng.random_range(-1.0..1.0)).collect();
                let corr = kernel_hessian_correction(&f, &p0, &y, &t).unwrap();
                assert_eq!(corr.kernel_dim, dim - rank);
                let h = 1e-3;
                let k = dim - rank;
                let second = (kernel_sum(&f, &p0.offset(h, &y), k, &t) + kernel_sum(&f, &p0.offset(-h, &y), k, &t)
                    - 2.0 * kernel_sum(&f, &p0, k, &t))
                    / (h * h);
                assert!(
                    (corr.value - 2.0 * second).abs() <= 1e-4,
                    "{} vs {}",
                    corr.value,
                    2.0 * second
                );
            }
        }
    }

    #[test]
    fn correction_is_invariant_under_kernel_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = tol();
        let d = 5;
        let rank = 2;
        let lambda = vec![0.6, 0.4];
        let mut r = random_hermitian(&mut rng, d).into_inner();
        r.view_mut((rank, rank), (d - rank, d - rank)).fill(c(0.0, 0.0));
        let mut s = random_hermitian(&mut rng, d).into_inner();
        let mut kernel = s.view_mut((rank, rank), (d - rank, d - rank));
        kernel += CMat::identity(d - rank, d - rank).scale(50.0);
        let r = HermitianMatrix::hermitize(&r);
        let s = HermitianMatrix::hermitize(&s);
        let basis = CMat::identity(d, d);
        let reference = SupportDecomposition::in_basis(lambda.clone(), basis.clone(), &r, &s, 1e-12, &t).unwrap();
        for _ in 0..10 {
            let mut rot = CMat::identity(d, d);
            rot.view_mut((rank, rank), (d - rank, d - rank))
                .copy_from(&random_unitary(&mut rng, d - rank));
            let dec = SupportDecomposition::in_basis(lambda.clone(), &basis * rot, &r, &s, 1e-12, &t).unwrap();
            assert!((dec.correction() - reference.correction()).abs() <= 1e-10);
        }
    }

    #[test]
    fn builtin_residuals_shrink_with_step() {
        let t = tol();
        for name in BUILTIN_NAMES {
            let f = builtin(name).unwrap();
            let p = ParameterPoint::scalar(0.3);
            let coarse = eq5_residual(&*f, &p, &[1.0], 4e-4, &t).unwrap();
            let fine = eq5_residual(&*f, &p, &[1.0], 2e-4, &t).unwrap();
            assert!(
                fine <= 0.75 * coarse || coarse < 1e-12,
                "{name}: {coarse:e} -> {fine:e}"
            );
        }
    }
}
