use super::{Domain, StateFamily};
use crate::linalg::{c, CMat};

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["paper-example", "qubit-rotation", "bloch-linear", "constant"];

pub fn builtin(name: &str) -> Option<Box<dyn StateFamily>> {
    match name {
        "paper-example" => Some(Box::new(PaperExample)),
        "qubit-rotation" => Some(Box::new(QubitRotation)),
        "bloch-linear" => Some(Box::new(BlochLinear)),
        "constant" => Some(Box::new(Constant::new(2))),
        _ => None,
    }
}

fn diag2(a: f64, b: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(b, 0.0)])
}

/// `rho_x = x^2 |0><0| + (1 - x^2) |1><1|` on `|x| < 1`; rank drops at `x = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PaperExample;

impl StateFamily for PaperExample {
    fn name(&self) -> String {
        "paper-example".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        Domain::Box { radius: 1.0 }
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat {
        let s = x[0] * x[0];
        diag2(s, 1.0 - s)
    }

    fn analytic_derivative(&self, x: &[f64], _i: usize) -> Option<CMat> {
        Some(diag2(2.0 * x[0], -2.0 * x[0]))
    }

    fn analytic_second_derivative(&self, _x: &[f64], _i: usize, _j: usize) -> Option<CMat> {
        Some(diag2(2.0, -2.0))
    }
}

/// `|+><+|` rotated about the z axis by angle `theta`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QubitRotation;

impl QubitRotation {
    /// `(1/2) [[a, b e^{-i theta}], [b e^{i theta}, a]]` with `b` scaled by `phase_factor`.
    fn matrix(theta: f64, diag: f64, phase_factor: crate::linalg::C64) -> CMat {
        let off = c(0.0, -theta).exp() * phase_factor * 0.5;
        CMat::from_row_slice(2, 2, &[c(0.5 * diag, 0.0), off, off.conj(), c(0.5 * diag, 0.0)])
    }
}

impl StateFamily for QubitRotation {
    fn name(&self) -> String {
        "qubit-rotation".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        1
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat {
        Self::matrix(x[0], 1.0, c(1.0, 0.0))
    }

    fn analytic_derivative(&self, x: &[f64], _i: usize) -> Option<CMat> {
        Some(Self::matrix(x[0], 0.0, c(0.0, -1.0)))
    }

    fn analytic_second_derivative(&self, x: &[f64], _i: usize, _j: usize) -> Option<CMat> {
        Some(Self::matrix(x[0], 0.0, c(-1.0, 0.0)))
    }
}

/// `rho_x = (I + x sigma_z) / 2` on `|x| < 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlochLinear;

impl StateFamily for BlochLinear {
    fn name(&self) -> String {
        "bloch-linear".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        Domain::Box { radius: 1.0 }
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat {
        diag2(0.5 * (1.0 + x[0]), 0.5 * (1.0 - x[0]))
    }

    fn analytic_derivative(&self, _x: &[f64], _i: usize) -> Option<CMat> {
        Some(diag2(0.5, -0.5))
    }

    fn analytic_second_derivative(&self, _x: &[f64], _i: usize, _j: usize) -> Option<CMat> {
        Some(CMat::zeros(2, 2))
    }
}

/// The maximally mixed state `I / d`, independent of its single parameter.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    dim: usize,
}

impl Constant {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }
}

impl StateFamily for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        1
    }

    fn raw_matrix(&self, _x: &[f64]) -> CMat {
        CMat::identity(self.dim, self.dim).unscale(self.dim as f64)
    }

    fn analytic_derivative(&self, _x: &[f64], _i: usize) -> Option<CMat> {
        Some(CMat::zeros(self.dim, self.dim))
    }

    fn analytic_second_derivative(&self, _x: &[f64], _i: usize, _j: usize) -> Option<CMat> {
        Some(CMat::zeros(self.dim, self.dim))
    }
}
