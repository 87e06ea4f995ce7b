use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::checks::Lemma3Noise;
use crate::error::{Error, Result};
use crate::linalg::{eigh, singular_values, CMat, HermitianMatrix};
use crate::random::{density_with_spectrum, random_cmat, random_hermitian};
use crate::state::{
    builtin, evaluate, random_full_rank_polynomial, random_rank_deficient_polynomial, Domain, ParameterPoint,
    StateFamily, BUILTIN_NAMES,
};
use crate::tolerance::ToleranceConfig;

/// Random sample points whose smallest eigenvalue `l` is positive but below
/// `NEAR_SINGULAR_CUTOFF * kappa` are rejected, where `kappa` is half the
/// largest axis second derivative of `l`. For `l ~ kappa t^2` such points
/// lie within `0.1` (in parameter distance) of a rank change without being
/// on it, where finite-difference estimates converge only for much smaller
/// steps. Exact rank-deficient points are kept.
pub const NEAR_SINGULAR_CUTOFF: f64 = 1e-2;

const CURVATURE_STEP: f64 = 1e-3;
const MAX_ATTEMPTS: usize = 20_000;
const MIN_FAMILY_RADIUS: f64 = 0.3;
const UNBOUNDED_SAMPLING_RADIUS: f64 = 2.0;
const DOMAIN_FRACTION: f64 = 0.8;

/// A family with its (point, direction) samples.
pub struct FamilyCase {
    pub family: Box<dyn StateFamily>,
    pub samples: Vec<(ParameterPoint, Vec<f64>)>,
}

impl std::fmt::Debug for FamilyCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyCase")
            .field("family", &self.family.name())
            .field("samples", &self.samples.len())
            .finish()
    }
}

fn sampling_radius(f: &dyn StateFamily) -> f64 {
    match f.domain() {
        Domain::Box { radius } => DOMAIN_FRACTION * radius,
        Domain::Unbounded => UNBOUNDED_SAMPLING_RADIUS,
    }
}

fn acceptable(f: &dyn StateFamily, x: &ParameterPoint, tol: &ToleranceConfig) -> Result<bool> {
    let rho = evaluate(f, x, tol)?;
    let s = rho.spectrum();
    let min = s.min_eigenvalue();
    if min <= s.zero_threshold() {
        return Ok(true);
    }
    if min < NEAR_SINGULAR_CUTOFF {
        return Ok(false);
    }
    let h = CURVATURE_STEP;
    if f.domain().boundary_distance(x.as_slice()) <= h {
        return Ok(false);
    }
    let mut kappa: f64 = 0.0;
    for i in 0..f.param_count() {
        let mut e = vec![0.0; f.param_count()];
        e[i] = 1.0;
        let plus = evaluate(f, &x.offset(h, &e), tol)?.spectrum().min_eigenvalue();
        let minus = evaluate(f, &x.offset(-h, &e), tol)?.spectrum().min_eigenvalue();
        kappa = kappa.max(0.5 * (plus - 2.0 * min + minus).abs() / (h * h));
    }
    Ok(min >= NEAR_SINGULAR_CUTOFF * kappa)
}

/// `anchors` (kept when valid) followed by uniform draws from the sampling
/// box until `count` points are collected.
pub fn sample_points<R: Rng + ?Sized>(
    f: &dyn StateFamily,
    rng: &mut R,
    count: usize,
    anchors: &[ParameterPoint],
    tol: &ToleranceConfig,
) -> Result<Vec<ParameterPoint>> {
    let mut points = Vec::with_capacity(count);
    let mut last_err = None;
    for a in anchors.iter().take(count) {
        match acceptable(f, a, tol) {
            Ok(true) => points.push(a.clone()),
            Ok(false) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let r = sampling_radius(f);
    let mut attempts = 0;
    while points.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(last_err.unwrap_or_else(|| {
                Error::PreconditionFail(format!(
                    "found only {} admissible points for {} after {MAX_ATTEMPTS} draws",
                    points.len(),
                    f.name()
                ))
            }));
        }
        let x = ParameterPoint::from(
            (0..f.param_count())
                .map(|_| rng.random_range(-r..r))
                .collect::<Vec<_>>(),
        );
        match acceptable(f, &x, tol) {
            Ok(true) => points.push(x),
            Ok(false) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Ok(points)
}

/// Gaussian directions normalized to unit length.
pub fn sample_directions<R: Rng + ?Sized>(rng: &mut R, params: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..params).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-3 {
                break v.into_iter().map(|a| a / n).collect();
            }
        })
        .collect()
}

fn build_case<R: Rng + ?Sized>(
    family: Box<dyn StateFamily>,
    rng: &mut R,
    points: usize,
    directions: usize,
    anchors: &[ParameterPoint],
    tol: &ToleranceConfig,
) -> Result<FamilyCase> {
    let pts = sample_points(&*family, rng, points, anchors, tol)?;
    let mut samples = Vec::with_capacity(points * directions);
    for x in pts {
        for y in sample_directions(rng, family.param_count(), directions) {
            samples.push((x.clone(), y));
        }
    }
    Ok(FamilyCase { family, samples })
}

/// (dim, rank at the origin, params); rank == dim means full rank everywhere.
const RANDOM_FAMILIES: [(usize, usize, usize); 10] = [
    (2, 2, 1),
    (3, 3, 2),
    (4, 4, 1),
    (4, 4, 2),
    (3, 3, 1),
    (2, 2, 2),
    (2, 1, 1),
    (3, 2, 2),
    (3, 1, 1),
    (4, 2, 2),
];

/// The built-in families plus ten seeded random polynomial families, each
/// with `points` sample points and `directions` directions per point.
///
/// The `paper-example` family and the rank-deficient polynomials always include
/// their rank-changing point at the origin.
pub fn suite_population(seed: u64, points: usize, directions: usize, tol: &ToleranceConfig) -> Result<Vec<FamilyCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for name in BUILTIN_NAMES {
        let f = builtin(name).expect("registered name");
        let anchors = if name == "paper-example" {
            vec![ParameterPoint::scalar(0.0)]
        } else {
            Vec::new()
        };
        cases.push(build_case(f, &mut rng, points, directions, &anchors, tol)?);
    }
    for (dim, rank, params) in RANDOM_FAMILIES {
        let (family, anchors): (Box<dyn StateFamily>, Vec<ParameterPoint>) = if rank == dim {
            (Box::new(random_full_rank_polynomial(&mut rng, dim, params)), Vec::new())
        } else {
            // a tiny valid box leaves no room outside the near-singular band
            let f = loop {
                let f = random_rank_deficient_polynomial(&mut rng, dim, rank, params);
                if f.domain_radius().unwrap_or(f64::INFINITY) >= MIN_FAMILY_RADIUS {
                    break f;
                }
            };
            (Box::new(f), vec![ParameterPoint::from(vec![0.0; params])])
        };
        cases.push(build_case(family, &mut rng, points, directions, &anchors, tol)?);
    }
    Ok(cases)
}

/// Samples for a single user-supplied family.
pub fn family_case(
    family: Box<dyn StateFamily>,
    seed: u64,
    points: usize,
    directions: usize,
    tol: &ToleranceConfig,
) -> Result<FamilyCase> {
    let origin = ParameterPoint::from(vec![0.0; family.param_count()]);
    // surface invalid models directly rather than as a sampling failure
    if family.domain().boundary_distance(origin.as_slice()) > 0.0 {
        evaluate(&*family, &origin, tol)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_case(family, &mut rng, points, directions, &[origin], tol)
}

/// Diagonal `L` with a kernel and `R`, `S` satisfying the kernel hypotheses.
#[derive(Debug, Clone)]
pub struct Theorem2Instance {
    pub lambda: Vec<f64>,
    pub r: HermitianMatrix,
    pub s: HermitianMatrix,
}

/// Support eigenvalues in `[0.2, 1]`; `R` has a zero kernel block and `S`
/// carries `beta` times the kernel projector with `beta` large enough that
/// `S22 - R21 L^-1 R12` is positive definite. Basis positions are shuffled.
pub fn random_theorem2_instance<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Theorem2Instance {
    assert!(rank >= 1 && rank <= dim);
    let k = dim - rank;
    let mut lambda: Vec<f64> = (0..rank).map(|_| rng.random_range(0.2..1.0)).collect();
    lambda.extend(std::iter::repeat_n(0.0, k));

    let mut r = random_hermitian(rng, dim).scale(0.5).into_inner();
    r.view_mut((rank, rank), (k, k)).fill(0.0.into());
    let mut s = random_hermitian(rng, dim).scale(0.5).into_inner();
    if k > 0 {
        let r12 = r.view((0, 0), (rank, dim)).columns(rank, k).into_owned();
        let inv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            rank,
            lambda[..rank].iter().map(|l| (1.0 / l).into()),
        ));
        let schur = r12.adjoint() * inv * &r12;
        let s22 = s.view((rank, rank), (k, k)).into_owned();
        let beta = singular_values(&schur)[0] + singular_values(&s22)[0] + 0.5;
        let mut block = s.view_mut((rank, rank), (k, k));
        block += CMat::identity(k, k).scale(beta);
    }

    let mut perm: Vec<usize> = (0..dim).collect();
    perm.shuffle(rng);
    let p = CMat::from_fn(dim, dim, |i, j| if perm[j] == i { 1.0.into() } else { 0.0.into() });
    let conj = |m: &CMat| HermitianMatrix::hermitize(&(&p * m * p.adjoint()));
    let mut shuffled = vec![0.0; dim];
    for (j, &i) in perm.iter().enumerate() {
        shuffled[i] = lambda[j];
    }
    Theorem2Instance {
        lambda: shuffled,
        r: conj(&r),
        s: conj(&s),
    }
}

/// Blocks `A`, `B`, `C` with `A` and `C - B^† A^-1 B` positive definite,
/// plus optional perturbations.
#[derive(Debug, Clone)]
pub struct Lemma3Instance {
    pub a: HermitianMatrix,
    pub b: CMat,
    pub c: HermitianMatrix,
    pub noise: Option<Lemma3Noise>,
}

pub fn random_lemma3_instance<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize, with_noise: bool) -> Lemma3Instance {
    let a_eigs: Vec<f64> = (0..n1).map(|_| rng.random_range(0.5..1.5)).collect();
    let a = density_with_spectrum(rng, &a_eigs);
    let b = random_cmat(rng, n1, n2).scale(0.5);
    let w_eigs: Vec<f64> = (0..n2).map(|_| rng.random_range(0.3..1.0)).collect();
    let w = density_with_spectrum(rng, &w_eigs);
    let a_inv = eigh(&a, &ToleranceConfig::default())
        .expect("well-conditioned block")
        .map(|l| 1.0 / l);
    let c = HermitianMatrix::hermitize(&(w.as_matrix() + b.adjoint() * a_inv.as_matrix() * &b));
    let noise = with_noise.then(|| Lemma3Noise {
        n11: random_hermitian(rng, n1).scale(0.1),
        n12: random_cmat(rng, n1, n2).scale(0.1),
        n22: random_hermitian(rng, n2).scale(0.1),
        exponent: 1.0,
    });
    Lemma3Instance { a, b, c, noise }
}
