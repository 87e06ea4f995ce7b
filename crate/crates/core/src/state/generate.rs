use rand::Rng;

use super::PolynomialFamily;
use crate::linalg::{eigh, CMat, HermitianMatrix};
use crate::random::{density_with_spectrum, random_cmat, random_traceless, random_unitary};
use crate::tolerance::ToleranceConfig;

fn spectrum_in<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn min_eig(m: &CMat) -> f64 {
    eigh(&HermitianMatrix::hermitize(m), &ToleranceConfig::default())
        .map(|s| s.min_eigenvalue())
        .unwrap_or(f64::NEG_INFINITY)
}

fn pairs(params: usize) -> Vec<(usize, usize)> {
    (0..params).flat_map(|i| (i..params).map(move |j| (i, j))).collect()
}

/// Polynomial family that is full rank on the open unit box.
///
/// The constant term has smallest eigenvalue `mu`; the remaining traceless
/// coefficients have spectral norms summing to at most `0.8 mu`, so every
/// eigenvalue stays above `0.2 mu` for `|x_i| < 1`.
pub fn random_full_rank_polynomial<R: Rng + ?Sized>(rng: &mut R, dim: usize, params: usize) -> PolynomialFamily {
    assert!(dim >= 2 && params >= 1);
    let eigs = spectrum_in(rng, dim, 1.0, 2.0);
    let mu = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let c0 = density_with_spectrum(rng, &eigs).into_inner();

    let quad_pairs = pairs(params);
    let weights: Vec<f64> = (0..params + quad_pairs.len())
        .map(|_| rng.random_range(0.2..1.0))
        .collect();
    let scale = 0.8 * mu / weights.iter().sum::<f64>();
    let mut w = weights.into_iter().map(|v| v * scale);

    let linear = (0..params)
        .map(|_| random_traceless(rng, dim).scale(w.next().unwrap()).into_inner())
        .collect();
    let quadratic = quad_pairs
        .into_iter()
        .map(|(i, j)| (i, j, random_traceless(rng, dim).scale(w.next().unwrap()).into_inner()))
        .collect();
    PolynomialFamily::new(c0, linear, quadratic, Some(1.0)).expect("generated coefficients are Hermitian")
}

/// Lower bound on the curvature of the kernel eigenvalues at the
/// rank-changing point.
const KERNEL_CURVATURE: f64 = 0.5;

/// Polynomial family whose rank drops from `dim` to `rank` at `x = 0`.
///
/// In a block basis (support, kernel) the constant term is `diag(sigma, 0)`,
/// the linear terms have no kernel-kernel block, and the diagonal quadratic
/// terms put `beta * I` on the kernel block with `beta` large enough that the
/// state stays PSD near the origin along every direction. The open box on
/// which the family is valid is found by sampling.
pub fn random_rank_deficient_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    params: usize,
) -> PolynomialFamily {
    assert!(rank >= 1 && rank < dim && params >= 1);
    let k = dim - rank;
    let sigma_eigs = spectrum_in(rng, rank, 1.0, 3.0);
    let sigma_min = sigma_eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma = density_with_spectrum(rng, &sigma_eigs).into_inner();

    let embed = |support: &CMat, off: &CMat, kernel: &CMat| -> CMat {
        let mut m = CMat::zeros(dim, dim);
        m.view_mut((0, 0), (rank, rank)).copy_from(support);
        m.view_mut((0, rank), (rank, k)).copy_from(off);
        m.view_mut((rank, 0), (k, rank)).copy_from(&off.adjoint());
        m.view_mut((rank, rank), (k, k)).copy_from(kernel);
        m
    };
    let zero_kernel = CMat::zeros(k, k);
    let off_scale = 0.25 / ((rank * k) as f64).sqrt();

    let mut beta_needed = 0.0;
    let mut linear = Vec::with_capacity(params);
    for _ in 0..params {
        let support = if rank > 1 {
            random_traceless(rng, rank).scale(0.3 * sigma_min).into_inner()
        } else {
            CMat::zeros(1, 1)
        };
        let off = random_cmat(rng, rank, k).scale(off_scale);
        let b = crate::linalg::singular_values(&off)[0];
        beta_needed += b * b;
        linear.push(embed(&support, &off, &zero_kernel));
    }
    let beta = beta_needed / sigma_min + KERNEL_CURVATURE;

    let mut quadratic = Vec::new();
    for (i, j) in pairs(params) {
        let support_noise = if rank > 1 {
            random_traceless(rng, rank).scale(0.1 * sigma_min).into_inner()
        } else {
            CMat::zeros(1, 1)
        };
        let off = random_cmat(rng, rank, k).scale(0.1 * off_scale);
        let m = if i == j {
            let shift = CMat::identity(rank, rank).scale(beta * k as f64 / rank as f64);
            embed(&(support_noise - shift), &off, &CMat::identity(k, k).scale(beta))
        } else {
            embed(&support_noise, &off, &zero_kernel)
        };
        quadratic.push((i, j, m));
    }

    let c0 = embed(&sigma, &CMat::zeros(rank, k), &zero_kernel);
    let u = random_unitary(rng, dim);
    let rotate = |m: &CMat| crate::linalg::hermitize(&(&u * m * u.adjoint()));
    let c0 = rotate(&c0);
    let linear: Vec<CMat> = linear.iter().map(rotate).collect();
    let quadratic: Vec<(usize, usize, CMat)> = quadratic.iter().map(|(i, j, m)| (*i, *j, rotate(m))).collect();

    let family = PolynomialFamily::new(c0, linear, quadratic, None).expect("generated coefficients are Hermitian");
    let radius = valid_radius(rng, &family, params);
    family.with_domain_radius(Some(radius))
}

/// Largest radius from a geometric ladder for which sampled points of a box
/// 25% wider all give PSD matrices.
fn valid_radius<R: Rng + ?Sized>(rng: &mut R, f: &PolynomialFamily, params: usize) -> f64 {
    use super::StateFamily;
    let mut radius = 1.0;
    'ladder: for _ in 0..60 {
        let probe = 1.25 * radius;
        let corners = (0..1usize << params).map(|mask| {
            (0..params)
                .map(|b| if mask >> b & 1 == 1 { probe } else { -probe })
                .collect::<Vec<_>>()
        });
        let random = (0..400).map(|_| (0..params).map(|_| rng.random_range(-probe..probe)).collect::<Vec<_>>());
        for x in corners.chain(random) {
            if min_eig(&f.raw_matrix(&x)) < -1e-13 {
                radius *= 0.8;
                continue 'ladder;
            }
        }
        return radius;
    }
    radius
}
