use rayon::prelude::*;

use super::{ConvergenceTrace, PointDetail, VerificationReport};
use crate::correction::{kernel_hessian_correction, SupportDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{eigh, matrix_sqrt, CMat, HermitianMatrix};
use crate::metrics::{bures_metric_central, bures_metric_forward, fidelity_psd, qfi_directional, MetricOptions};
use crate::state::{ParameterPoint, StateFamily};
use crate::tolerance::ToleranceConfig;

pub const THEOREM1_LADDER: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
pub const EQ5_LADDER: [f64; 4] = [2e-4, 1e-4, 5e-5, 2.5e-5];
pub const THEOREM2_LADDER: [f64; 4] = [0.01, 0.005, 0.0025, 0.00125];
pub const LEMMA3_LADDER: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

pub const THEOREM1_SLOPE: f64 = 1.5;
/// Extrapolated `|4h - F| <= THEOREM1_GAP_TOL * max(1, F)`.
pub const THEOREM1_GAP_TOL: f64 = 1e-4;
/// Required per-halving shrink factor of the forward residual.
pub const EQ5_RATIO: f64 = 0.75;
/// Finest-step forward residual `<= EQ5_FINAL_TOL * max(1, F)`.
pub const EQ5_FINAL_TOL: f64 = 1e-3;
/// Slope required of residuals that are `o(1)` after normalization.
pub const LITTLE_O_SLOPE: f64 = 0.7;
/// Residuals below `ROUNDOFF_FLOOR * max(1, scale)` are excluded from fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
/// Multiple of `u / eps^2` (unit roundoff `u`) below which a metric
/// difference quotient is treated as noise.
pub const QUOTIENT_NOISE: f64 = 16.0;

/// Roundoff floor for residuals of `d_B^2 / eps^2` quotients. An O(u)
/// absolute error in `d_B^2`, for instance from the square root of an
/// eigenvalue of size `eps^2`, becomes `u / eps^2` after division.
pub fn quotient_floor(eps: f64, scale: f64) -> f64 {
    scale * ROUNDOFF_FLOOR.max(QUOTIENT_NOISE * f64::EPSILON / (eps * eps))
}

type Sample = (ParameterPoint, Vec<f64>);

fn label_of(f: &dyn StateFamily, x: &ParameterPoint) -> String {
    format!("{} at {:?}", f.name(), x.as_slice())
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "ladder needs at least 3 steps, got {}",
            ladder.len()
        )));
    }
    Ok(())
}

/// `|4h(eps) - F|` down the ladder with slope `>= THEOREM1_SLOPE`, and the
/// Richardson value from the two finest steps within `THEOREM1_GAP_TOL * max(1, F)`.
pub fn theorem1_check(
    f: &dyn StateFamily,
    samples: &[Sample],
    ladder: &[f64],
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_ladder(ladder)?;
    let details = samples
        .par_iter()
        .map(|(x, y)| theorem1_point(f, x, y, ladder, tol).unwrap_or_else(|e| PointDetail::failed(label_of(f, x), &e)))
        .collect();
    Ok(VerificationReport::assemble(
        "theorem1",
        &[
            ("slope_min", THEOREM1_SLOPE),
            ("gap_tol_rel", THEOREM1_GAP_TOL),
            ("roundoff_floor_rel", ROUNDOFF_FLOOR),
            ("quotient_noise", QUOTIENT_NOISE),
        ],
        details,
    ))
}

fn theorem1_point(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    ladder: &[f64],
    tol: &ToleranceConfig,
) -> Result<PointDetail> {
    let fisher = qfi_directional(f, x, y, tol)?;
    let scale = fisher.max(1.0);
    let raw = ladder
        .iter()
        .map(|&eps| Ok(bures_metric_central(f, x, y, MetricOptions { eps, richardson: false }, tol)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let residuals = raw.iter().map(|h| (4.0 * h - fisher).abs()).collect();
    let floors = ladder.iter().map(|&e| quotient_floor(e, scale)).collect();
    let trace = ConvergenceTrace::with_floors(ladder.to_vec(), residuals, floors)?;
    let n = raw.len();
    let extrapolated = (4.0 * raw[n - 1] - raw[n - 2]) / 3.0;
    let gap = (4.0 * extrapolated - fisher).abs();

    let mut d = PointDetail::new(label_of(f, x));
    d.x = x.as_slice().to_vec();
    d.y = y.to_vec();
    d.pass = gap <= THEOREM1_GAP_TOL * scale && trace.slope_at_least(THEOREM1_SLOPE);
    d.values.insert("fisher".into(), fisher);
    d.values.insert("four_h_extrapolated".into(), 4.0 * extrapolated);
    d.values.insert("gap".into(), gap);
    d.trace = Some(trace);
    Ok(d)
}

/// How the forward residual must decrease down the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayRule {
    /// Every halving with both residuals above the floor shrinks by `EQ5_RATIO`.
    PerHalving,
    /// The finest residual is below the coarsest, unless either is under its floor.
    Net,
}

impl DecayRule {
    fn holds(self, t: &ConvergenceTrace) -> bool {
        let n = t.steps.len();
        match self {
            DecayRule::PerHalving => (1..n).all(|i| {
                !(t.above_floor(i - 1) && t.above_floor(i)) || t.residuals[i] <= EQ5_RATIO * t.residuals[i - 1]
            }),
            DecayRule::Net => !(t.above_floor(0) && t.above_floor(n - 1)) || t.residuals[n - 1] < t.residuals[0],
        }
    }
}

/// `|4g(eps) - F - correction|` decreases down the ladder under `rule` and
/// ends below `EQ5_FINAL_TOL * max(1, F)`.
pub fn eq5_check(
    f: &dyn StateFamily,
    samples: &[Sample],
    ladder: &[f64],
    rule: DecayRule,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_ladder(ladder)?;
    let details = samples
        .par_iter()
        .map(|(x, y)| eq5_point(f, x, y, ladder, rule, tol).unwrap_or_else(|e| PointDetail::failed(label_of(f, x), &e)))
        .collect();
    let ratio = match rule {
        DecayRule::PerHalving => EQ5_RATIO,
        DecayRule::Net => 1.0,
    };
    Ok(VerificationReport::assemble(
        "eq5",
        &[
            ("ratio_max", ratio),
            ("final_tol_rel", EQ5_FINAL_TOL),
            ("roundoff_floor_rel", ROUNDOFF_FLOOR),
            ("quotient_noise", QUOTIENT_NOISE),
        ],
        details,
    ))
}

fn eq5_point(
    f: &dyn StateFamily,
    x: &ParameterPoint,
    y: &[f64],
    ladder: &[f64],
    rule: DecayRule,
    tol: &ToleranceConfig,
) -> Result<PointDetail> {
    let fisher = qfi_directional(f, x, y, tol)?;
    let corr = kernel_hessian_correction(f, x, y, tol)?;
    let scale = fisher.max(1.0);
    let residuals = ladder
        .iter()
        .map(|&eps| Ok((4.0 * bures_metric_forward(f, x, y, eps, tol)?.value - fisher - corr.value).abs()))
        .collect::<Result<Vec<f64>>>()?;
    // roundoff scales with the quotient itself, which approaches F + correction
    let quotient_scale = scale.max(fisher + corr.value);
    let floors = ladder.iter().map(|&e| quotient_floor(e, quotient_scale)).collect();
    let trace = ConvergenceTrace::with_floors(ladder.to_vec(), residuals, floors)?;
    let shrinks = rule.holds(&trace);

    let mut d = PointDetail::new(label_of(f, x));
    d.x = x.as_slice().to_vec();
    d.y = y.to_vec();
    d.pass = shrinks && trace.last_residual() <= EQ5_FINAL_TOL * scale;
    d.values.insert("fisher".into(), fisher);
    d.values.insert("correction".into(), corr.value);
    d.values.insert("kernel_dim".into(), corr.kernel_dim as f64);
    d.values.insert("rank_threshold".into(), corr.zero_threshold);
    d.trace = Some(trace);
    Ok(d)
}

fn psd_ok(m: &HermitianMatrix, tol: &ToleranceConfig) -> Result<bool> {
    Ok(eigh(m, tol)?.min_eigenvalue() >= -tol.psd_tol)
}

/// Compares `Tr sqrt(sqrt(rho(e)) rho(-e) sqrt(rho(e)))` for
/// `rho(e) = L + e R + e^2 S` with
/// `Tr L + e^2 Tr S - e^2 sum_{l_k + l_l > 0} |R_kl|^2 / (l_k + l_l)`.
///
/// `lambda` is the diagonal of `L`. The ladder is truncated where `rho(+-e)`
/// stops being PSD; at least three steps must remain.
pub fn theorem2_check(
    lambda: &[f64],
    r: &HermitianMatrix,
    s: &HermitianMatrix,
    ladder: &[f64],
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_ladder(ladder)?;
    let d = lambda.len();
    if r.dim() != d || s.dim() != d {
        return Err(Error::InvalidJet(format!("R, S must be {d}x{d}")));
    }
    if lambda.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidJet(format!("diagonal {lambda:?} is not PSD")));
    }
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let zero = tol.zero_threshold(lmax);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&k| lambda[k] <= zero);
    let rank = order.iter().filter(|&&k| lambda[k] > zero).count();
    let basis = CMat::from_fn(d, d, |i, j| if order[j] == i { 1.0.into() } else { 0.0.into() });
    let lambda_plus = order[..rank].iter().map(|&k| lambda[k]).collect();
    SupportDecomposition::in_basis(lambda_plus, basis, r, s, zero, tol)
        .map_err(|e| Error::InvalidJet(e.to_string()))?;

    let base = HermitianMatrix::from_diagonal(lambda);
    let mut sum = 0.0;
    for k in 0..d {
        for l in 0..d {
            let den = lambda[k] + lambda[l];
            if den > zero {
                sum += r[(k, l)].norm_sqr() / den;
            }
        }
    }

    let mut steps = Vec::new();
    let mut residuals = Vec::new();
    let mut raw = Vec::new();
    let mut asymmetry: f64 = 0.0;
    for &eps in ladder {
        let plus = base.axpy(eps, r).axpy(eps * eps, s);
        let minus = base.axpy(-eps, r).axpy(eps * eps, s);
        if !psd_ok(&plus, tol)? || !psd_ok(&minus, tol)? {
            continue;
        }
        let lhs = fidelity_psd(&plus, &minus, tol)?;
        let swapped = fidelity_psd(&minus, &plus, tol)?;
        asymmetry = asymmetry.max((lhs - swapped).abs());
        let rhs = base.trace() + eps * eps * s.trace() - eps * eps * sum;
        steps.push(eps);
        raw.push((lhs - rhs).abs());
        residuals.push((lhs - rhs).abs() / (eps * eps));
    }
    if steps.len() < 3 {
        return Err(Error::NotPsdOnLadder(format!(
            "only {} ladder steps keep rho(+-eps) PSD",
            steps.len()
        )));
    }
    // the floor applies to the raw residual, before division by eps^2
    let floors = steps.iter().map(|e| ROUNDOFF_FLOOR / (e * e)).collect();
    let trace = ConvergenceTrace::with_floors(steps, residuals, floors)?;
    let mut detail = PointDetail::new(format!("d={d}, rank={rank}"));
    detail.pass = trace.slope_at_least(LITTLE_O_SLOPE) && asymmetry <= 1e-10;
    detail
        .values
        .insert("max_abs_residual".into(), raw.iter().copied().fold(0.0, f64::max));
    detail.values.insert("swap_asymmetry".into(), asymmetry);
    detail
        .values
        .insert("ladder_steps_used".into(), trace.steps.len() as f64);
    detail.trace = Some(trace);
    Ok(VerificationReport::assemble(
        "theorem2",
        &[
            ("slope_min", LITTLE_O_SLOPE),
            ("swap_tol", 1e-10),
            ("roundoff_floor", ROUNDOFF_FLOOR),
        ],
        vec![detail],
    ))
}

/// Perturbations added to `M(delta)`: `delta^(1+e) N11`, `delta^(1+e) N12`,
/// `delta^(2+e) N22` on the respective blocks.
#[derive(Debug, Clone)]
pub struct Lemma3Noise {
    pub n11: HermitianMatrix,
    pub n12: CMat,
    pub n22: HermitianMatrix,
    pub exponent: f64,
}

fn trace_sqrt(m: &HermitianMatrix, tol: &ToleranceConfig) -> Result<f64> {
    Ok(matrix_sqrt(m, tol)?.trace())
}

/// Compares `Tr sqrt(M(delta))` for `M = [[A, delta B], [delta B^†, delta^2 C]]`
/// (plus optional noise) with `Tr sqrt(A) + delta Tr sqrt(C - B^† A^-1 B)`;
/// the residual divided by `delta` must decay with slope `>= LITTLE_O_SLOPE`.
pub fn lemma3_check(
    a: &HermitianMatrix,
    b: &CMat,
    c: &HermitianMatrix,
    ladder: &[f64],
    noise: Option<&Lemma3Noise>,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_ladder(ladder)?;
    let (n1, n2) = (a.dim(), c.dim());
    if b.shape() != (n1, n2) {
        return Err(Error::PreconditionFail(format!(
            "B must be {n1}x{n2}, got {:?}",
            b.shape()
        )));
    }
    let spec_a = eigh(a, tol)?;
    if spec_a.min_eigenvalue() <= tol.pd_tol * spec_a.max_eigenvalue().max(1.0) {
        return Err(Error::PreconditionFail(format!(
            "A is not positive definite (min eigenvalue {:e})",
            spec_a.min_eigenvalue()
        )));
    }
    let a_inv = spec_a.map(|l| 1.0 / l);
    let w = HermitianMatrix::hermitize(&(c.as_matrix() - b.adjoint() * a_inv.as_matrix() * b));
    let w_min = eigh(&w, tol)?.min_eigenvalue();
    if w_min < -tol.psd_tol {
        return Err(Error::PreconditionFail(format!(
            "C - B^† A^-1 B has eigenvalue {w_min:e}"
        )));
    }
    if let Some(nz) = noise {
        if nz.n11.dim() != n1 || nz.n22.dim() != n2 || nz.n12.shape() != (n1, n2) {
            return Err(Error::PreconditionFail(
                "noise blocks do not match the block sizes".into(),
            ));
        }
    }
    let tr_sqrt_a = trace_sqrt(a, tol)?;
    let tr_sqrt_w = trace_sqrt(&w, tol)?;
    let n = n1 + n2;

    let mut residuals = Vec::new();
    let mut raw = Vec::new();
    for &delta in ladder {
        let mut m = CMat::zeros(n, n);
        let mut b_block = b.scale(delta);
        let mut a_block = a.as_matrix().clone();
        let mut c_block = c.as_matrix().scale(delta * delta);
        if let Some(nz) = noise {
            let s1 = delta.powf(1.0 + nz.exponent);
            a_block += nz.n11.as_matrix().scale(s1);
            b_block += nz.n12.scale(s1);
            c_block += nz.n22.as_matrix().scale(delta.powf(2.0 + nz.exponent));
        }
        m.view_mut((0, 0), (n1, n1)).copy_from(&a_block);
        m.view_mut((0, n1), (n1, n2)).copy_from(&b_block);
        m.view_mut((n1, 0), (n2, n1)).copy_from(&b_block.adjoint());
        m.view_mut((n1, n1), (n2, n2)).copy_from(&c_block);
        let m = HermitianMatrix::hermitize(&m);
        let min = eigh(&m, tol)?.min_eigenvalue();
        if min < -tol.psd_tol {
            return Err(Error::PreconditionFail(format!("M({delta}) has eigenvalue {min:e}")));
        }
        let residual = (trace_sqrt(&m, tol)? - tr_sqrt_a - delta * tr_sqrt_w).abs();
        raw.push(residual);
        residuals.push(residual / delta);
    }
    let floors = ladder.iter().map(|d| ROUNDOFF_FLOOR / d).collect();
    let trace = ConvergenceTrace::with_floors(ladder.to_vec(), residuals, floors)?;
    let mut detail = PointDetail::new(format!("blocks {n1}+{n2}"));
    detail.pass = trace.slope_at_least(LITTLE_O_SLOPE);
    detail
        .values
        .insert("max_abs_residual".into(), raw.iter().copied().fold(0.0, f64::max));
    detail.values.insert("trace_sqrt_a".into(), tr_sqrt_a);
    detail.values.insert("trace_sqrt_schur".into(), tr_sqrt_w);
    detail.trace = Some(trace);
    Ok(VerificationReport::assemble(
        "lemma3",
        &[("slope_min", LITTLE_O_SLOPE), ("roundoff_floor", ROUNDOFF_FLOOR)],
        vec![detail],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::state::{Constant, PaperExample};
    use approx::assert_abs_diff_eq;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn h(rows: usize, re: &[f64]) -> HermitianMatrix {
        let e: Vec<_> = re.iter().map(|&v| c(v, 0.0)).collect();
        HermitianMatrix::hermitize(&CMat::from_row_slice(rows, rows, &e))
    }

    #[test]
    fn theorem1_paper_example_at_origin() {
        let samples = vec![(ParameterPoint::scalar(0.0), vec![1.0])];
        let rep = theorem1_check(&PaperExample, &samples, &THEOREM1_LADDER, &tol()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.details[0].values["fisher"], 0.0);
        assert!(rep.details[0].values["four_h_extrapolated"] <= 1e-12);
    }

    #[test]
    fn theorem1_constant_family() {
        let samples = vec![(ParameterPoint::scalar(0.3), vec![1.0])];
        let rep = theorem1_check(&Constant::new(3), &samples, &THEOREM1_LADDER, &tol()).unwrap();
        assert!(rep.pass);
        assert!(rep.details[0]
            .trace
            .as_ref()
            .unwrap()
            .residuals
            .iter()
            .all(|&r| r == 0.0));
    }

    #[test]
    fn eq5_paper_example_at_origin() {
        let samples = vec![(ParameterPoint::scalar(0.0), vec![1.0])];
        let rep = eq5_check(&PaperExample, &samples, &EQ5_LADDER, DecayRule::PerHalving, &tol()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.details[0].values["correction"], 4.0);
    }

    #[test]
    fn theorem2_closed_form() {
        let r = h(2, &[0.0, 1.0, 1.0, 0.0]);
        let s = h(2, &[0.0, 0.0, 0.0, 1.0]);
        let rep = theorem2_check(&[1.0, 0.0], &r, &s, &THEOREM2_LADDER, &tol()).unwrap();
        assert!(rep.pass);
        assert!(rep.details[0].values["max_abs_residual"] <= 1e-12);
        // both sides equal 1 - eps^2
        let eps = 0.02;
        let plus = h(2, &[1.0, eps, eps, eps * eps]);
        let minus = h(2, &[1.0, -eps, -eps, eps * eps]);
        assert_abs_diff_eq!(
            fidelity_psd(&plus, &minus, &tol()).unwrap(),
            1.0 - eps * eps,
            epsilon = 1e-14
        );
    }

    #[test]
    fn theorem2_trivial_jet() {
        let z = HermitianMatrix::zeros(3);
        let rep = theorem2_check(&[0.5, 0.3, 0.0], &z, &z, &THEOREM2_LADDER, &tol()).unwrap();
        assert!(rep.pass);
        assert!(rep.details[0].values["max_abs_residual"] <= 1e-14);
    }

    #[test]
    fn theorem2_rejects_invalid_jets() {
        let r = h(2, &[0.0, 0.0, 0.0, 1.0]);
        let err = theorem2_check(&[1.0, 0.0], &r, &HermitianMatrix::zeros(2), &THEOREM2_LADDER, &tol()).unwrap_err();
        assert_eq!(err.kind(), "InvalidJet");
        let r = h(2, &[0.0, 1.0, 1.0, 0.0]);
        let err = theorem2_check(&[1.0, 0.0], &r, &HermitianMatrix::zeros(2), &THEOREM2_LADDER, &tol()).unwrap_err();
        assert_eq!(err.kind(), "InvalidJet");
        let err = theorem2_check(
            &[1.0, -0.1],
            &HermitianMatrix::zeros(2),
            &HermitianMatrix::zeros(2),
            &THEOREM2_LADDER,
            &tol(),
        )
        .unwrap_err();
        assert_eq!(err.kind(), "InvalidJet");
    }

    #[test]
    fn theorem2_truncates_non_psd_ladder() {
        // full-rank base with a large first-order term goes negative at big eps
        let r = h(2, &[10.0, 0.0, 0.0, -10.0]);
        let z = HermitianMatrix::zeros(2);
        let rep = theorem2_check(&[0.2, 0.8], &r, &z, &[0.08, 0.04, 0.02, 0.01, 0.005], &tol()).unwrap();
        assert_eq!(rep.details[0].trace.as_ref().unwrap().steps, vec![0.02, 0.01, 0.005]);
        let err = theorem2_check(&[0.2, 0.8], &r, &z, &[0.08, 0.04, 0.02], &tol()).unwrap_err();
        assert_eq!(err.kind(), "NotPsdOnLadder");
    }

    #[test]
    fn lemma3_scalar_blocks() {
        let one = h(1, &[1.0]);
        let b = CMat::from_element(1, 1, c(1.0, 0.0));
        let rep = lemma3_check(&one, &b, &h(1, &[2.0]), &LEMMA3_LADDER, None, &tol()).unwrap();
        assert!(rep.pass);
        let trace = rep.details[0].trace.as_ref().unwrap();
        for (&delta, &r) in trace.steps.iter().zip(&trace.residuals) {
            // sqrt(1 + 2 delta + 2 delta^2) = 1 + delta + delta^2 / 2 + O(delta^3)
            let exact = ((1.0 + 2.0 * delta + 2.0 * delta * delta).sqrt() - 1.0 - delta) / delta;
            assert_abs_diff_eq!(r * delta, exact * delta, epsilon = 1e-13);
            assert!(r <= 2.0 * delta);
        }
    }

    #[test]
    fn lemma3_block_diagonal_is_exact() {
        let a = h(2, &[2.0, 0.5, 0.5, 1.0]);
        let cc = h(2, &[1.0, 0.2, 0.2, 0.7]);
        let rep = lemma3_check(&a, &CMat::zeros(2, 2), &cc, &LEMMA3_LADDER, None, &tol()).unwrap();
        assert!(rep.pass);
        assert!(rep.details[0].values["max_abs_residual"] <= 1e-12);
    }

    #[test]
    fn lemma3_preconditions() {
        let b = CMat::from_element(1, 1, c(1.0, 0.0));
        let err = lemma3_check(&h(1, &[0.0]), &b, &h(1, &[2.0]), &LEMMA3_LADDER, None, &tol()).unwrap_err();
        assert_eq!(err.kind(), "PreconditionFail");
        let err = lemma3_check(&h(1, &[1.0]), &b, &h(1, &[0.5]), &LEMMA3_LADDER, None, &tol()).unwrap_err();
        assert_eq!(err.kind(), "PreconditionFail");
    }
}
