use serde::{Deserialize, Serialize};

use super::{CMat, ComplexMatrix};
use crate::error::{Error, Result};

/// Unitarily invariant norms exposed for the Mirsky bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Sum of singular values (Schatten-1).
    Trace,
    Frobenius,
    /// Largest singular value.
    Spectral,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Trace, NormKind::Frobenius, NormKind::Spectral];

    /// The norm as a function of a vector of singular values.
    pub fn of_singular_values(self, s: &[f64]) -> f64 {
        match self {
            NormKind::Trace => s.iter().map(|x| x.abs()).sum(),
            NormKind::Frobenius => s.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Spectral => s.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s = super::svd(m).singular_values;
    s.truncate(m.nrows().min(m.ncols()));
    s
}

pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).iter().sum()
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.as_matrix().norm()
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Both sides of the Mirsky inequality `|M1 - M2| >= |diag(alpha - beta)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirskyGap {
    pub lhs: f64,
    pub rhs: f64,
}

impl MirskyGap {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs >= self.rhs - tol
    }
}

pub fn mirsky_gap(m1: &ComplexMatrix, m2: &ComplexMatrix, norm: NormKind) -> Result<MirskyGap> {
    if m1.shape() != m2.shape() {
        return Err(Error::ShapeMismatch {
            left: m1.shape(),
            right: m2.shape(),
        });
    }
    let diff = m1.as_matrix() - m2.as_matrix();
    let lhs = norm.of_singular_values(&singular_values(&diff));
    let alpha = singular_values(m1);
    let beta = singular_values(m2);
    let gaps: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
    let rhs = norm.of_singular_values(&gaps);
    Ok(MirskyGap { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random::{random_complex, random_unitary};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cm(rows: usize, cols: usize, re: &[f64]) -> ComplexMatrix {
        let entries: Vec<_> = re.iter().map(|&x| c(x, 0.0)).collect();
        ComplexMatrix::new(CMat::from_row_slice(rows, cols, &entries)).unwrap()
    }

    #[test]
    fn diagonal_norms() {
        let m = cm(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        assert_abs_diff_eq!(trace_norm(&m), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(frobenius_norm(&m), 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(spectral_norm(&m), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_matrix_norms() {
        let z = cm(3, 3, &[0.0; 9]);
        assert_eq!(trace_norm(&z), 0.0);
        assert_eq!(frobenius_norm(&z), 0.0);
        assert_eq!(spectral_norm(&z), 0.0);
    }

    #[test]
    fn nilpotent_trace_norm() {
        assert_abs_diff_eq!(trace_norm(&cm(2, 2, &[0.0, 1.0, 0.0, 0.0])), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mirsky_identical_is_zero() {
        let m = cm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let g = mirsky_gap(&m, &m, NormKind::Frobenius).unwrap();
        assert_eq!(g.lhs, 0.0);
        assert_abs_diff_eq!(g.rhs, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mirsky_diagonal_pair_is_tight() {
        let g = mirsky_gap(
            &cm(2, 2, &[3.0, 0.0, 0.0, 1.0]),
            &cm(2, 2, &[2.0, 0.0, 0.0, 2.0]),
            NormKind::Frobenius,
        )
        .unwrap();
        assert_abs_diff_eq!(g.lhs, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.rhs, 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn mirsky_shape_mismatch() {
        let err = mirsky_gap(&cm(1, 2, &[1.0, 2.0]), &cm(2, 1, &[1.0, 2.0]), NormKind::Trace).unwrap_err();
        assert_eq!(err.kind(), "ShapeMismatch");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_norm_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_complex(&mut rng, n, n);
            let u = random_unitary(&mut rng, n);
            let w = random_unitary(&mut rng, n);
            let rotated = ComplexMatrix::new(&u * m.as_matrix() * &w).unwrap();
            prop_assert!((trace_norm(&rotated) - trace_norm(&m)).abs() <= 1e-10);
        }

        #[test]
        fn mirsky_holds_on_random_4x4(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_complex(&mut rng, 4, 4);
            let b = random_complex(&mut rng, 4, 4);
            for norm in NormKind::ALL {
                prop_assert!(mirsky_gap(&a, &b, norm).unwrap().holds(1e-10));
            }
        }
    }
}
