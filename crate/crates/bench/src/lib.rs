//! Fixtures shared by the criterion benches.

use qfib_core::random::density_with_spectrum;
use qfib_core::state::PolynomialFamily;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded full-rank polynomial family of the given size.
pub fn polynomial_fixture(dim: usize, params: usize) -> PolynomialFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB3AC);
    qfib_core::state::random_full_rank_polynomial(&mut rng, dim, params)
}

/// Seeded density matrix with a spread spectrum.
pub fn density_fixture(dim: usize) -> qfib_core::HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);
    let raw: Vec<f64> = (1..=dim).map(|k| k as f64).collect();
    let total: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
    density_with_spectrum(&mut rng, &p)
}
