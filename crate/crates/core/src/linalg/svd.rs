//! One-sided Jacobi SVD.
//!
//! nalgebra's complex SVD occasionally returns factors whose product is off
//! by ~1e-5 for nearly rank-deficient products of square roots, which is
//! fatal for difference quotients of the Bures distance. One-sided Jacobi is
//! slower but accurate to a few ulps for the small matrices used here.

use nalgebra::DMatrix;

use super::{CMat, C64};

const MAX_SWEEPS: usize = 80;

/// Full SVD `M = U diag(s) V^†` with unitary `U` (m x m) and `V` (n x n) and
/// singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = CMat::identity(cols, cols);
    let tol = f64::EPSILON * rows as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // remove the phase of gamma, then a real Jacobi rotation
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let smax = norms.iter().copied().fold(0.0, f64::max);
    let mut u = CMat::zeros(rows, rows);
    let mut filled = 0;
    for &j in &order {
        if norms[j] > smax * f64::EPSILON * rows as f64 && norms[j] > 0.0 {
            u.set_column(filled, &a.column(j).unscale(norms[j]));
            filled += 1;
        }
    }
    let rank = filled;
    complete_orthonormal(&mut u, rank);
    let singular_values = order.iter().map(|&j| norms[j]).collect();
    let v = DMatrix::from_fn(cols, cols, |i, k| v[(i, order[k])]);
    Svd { u, singular_values, v }
}

/// Columns `p`, `q` become `c x_p - s e^{-i phi} x_q` and `s x_p + c e^{-i phi} x_q`.
fn rotate(m: &mut CMat, p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let conj = phase.conj();
    for i in 0..m.nrows() {
        let xp = m[(i, p)];
        let xq = m[(i, q)] * conj;
        m[(i, p)] = xp * c - xq * s;
        m[(i, q)] = xp * s + xq * c;
    }
}

/// Fills columns `k..` with an orthonormal basis of the complement of the
/// first `k` (assumed orthonormal) columns.
fn complete_orthonormal(u: &mut CMat, k: usize) {
    let n = u.nrows();
    for filled in k..n {
        // project every standard basis vector and keep the largest remainder
        let best = (0..n)
            .map(|e| {
                let mut x = CMat::zeros(n, 1);
                x[(e, 0)] = C64::new(1.0, 0.0);
                // two passes of Gram-Schmidt for stability
                for _ in 0..2 {
                    for j in 0..filled {
                        let proj = u.column(j).dotc(&x.column(0));
                        let col = u.column(j).into_owned();
                        x.column_mut(0).axpy(-proj, &col, C64::new(1.0, 0.0));
                    }
                }
                x
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("n > 0");
        let norm = best.norm();
        u.set_column(filled, &best.column(0).unscale(norm));
    }
}
