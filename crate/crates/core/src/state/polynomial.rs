use serde::{Deserialize, Serialize};

use super::{builtin, Domain, StateFamily};
use crate::error::{Error, Result};
use crate::linalg::{decode_matrix, encode_matrix, max_abs, CMat, EncodedMatrix};

/// `rho(x) = C0 + sum_i C_i x_i + sum_{i <= j} C_ij x_i x_j`.
///
/// Coefficients must be Hermitian; positivity and unit trace are checked
/// lazily at each evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFamily {
    dim: usize,
    c0: CMat,
    linear: Vec<CMat>,
    quadratic: Vec<(usize, usize, CMat)>,
    domain_radius: Option<f64>,
}

const COEFF_HERM_TOL: f64 = 1e-10;

impl PolynomialFamily {
    pub fn new(
        c0: CMat,
        linear: Vec<CMat>,
        quadratic: Vec<(usize, usize, CMat)>,
        domain_radius: Option<f64>,
    ) -> Result<Self> {
        let dim = c0.nrows();
        let params = linear.len();
        if params == 0 {
            return Err(Error::InvalidModel(
                "polynomial family needs at least one parameter".into(),
            ));
        }
        let check = |name: String, m: &CMat| -> Result<()> {
            if m.shape() != (dim, dim) {
                return Err(Error::InvalidModel(format!(
                    "{name} has shape {:?}, expected ({dim}, {dim})",
                    m.shape()
                )));
            }
            let asym = max_abs(&(m - m.adjoint()));
            if asym > COEFF_HERM_TOL * max_abs(m).max(1.0) {
                return Err(Error::InvalidModel(format!(
                    "{name} is not Hermitian (asymmetry {asym:e})"
                )));
            }
            Ok(())
        };
        if dim == 0 {
            return Err(Error::InvalidModel("c0 is empty".into()));
        }
        check("c0".into(), &c0)?;
        for (i, m) in linear.iter().enumerate() {
            check(format!("linear[{i}]"), m)?;
        }
        for (k, (i, j, m)) in quadratic.iter().enumerate() {
            if i > j || *j >= params {
                return Err(Error::InvalidModel(format!(
                    "quadratic[{k}] has index pair ({i}, {j}); need i <= j < {params}"
                )));
            }
            check(format!("quadratic[{k}]"), m)?;
        }
        if let Some(r) = domain_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidModel(format!("domain_radius must be positive, got {r}")));
            }
        }
        Ok(Self {
            dim,
            c0,
            linear,
            quadratic,
            domain_radius,
        })
    }

    pub fn c0(&self) -> &CMat {
        &self.c0
    }

    pub fn linear(&self) -> &[CMat] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, CMat)] {
        &self.quadratic
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.domain_radius
    }

    pub fn with_domain_radius(mut self, radius: Option<f64>) -> Self {
        self.domain_radius = radius;
        self
    }

    pub fn to_spec(&self) -> PolynomialSpec {
        PolynomialSpec {
            dim: self.dim,
            params: self.linear.len(),
            c0: encode_matrix(&self.c0),
            linear: self.linear.iter().map(encode_matrix).collect(),
            quadratic: self
                .quadratic
                .iter()
                .map(|(i, j, m)| (*i, *j, encode_matrix(m)))
                .collect(),
            domain_radius: self.domain_radius,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelSpec::Polynomial(self.to_spec())).expect("model serializes")
    }
}

impl StateFamily for PolynomialFamily {
    fn name(&self) -> String {
        format!("polynomial(d={}, P={})", self.dim, self.linear.len())
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn param_count(&self) -> usize {
        self.linear.len()
    }

    fn domain(&self) -> Domain {
        match self.domain_radius {
            Some(radius) => Domain::Box { radius },
            None => Domain::Unbounded,
        }
    }

    fn raw_matrix(&self, x: &[f64]) -> CMat {
        let mut m = self.c0.clone();
        for (c, xi) in self.linear.iter().zip(x) {
            m += c.scale(*xi);
        }
        for (i, j, c) in &self.quadratic {
            m += c.scale(x[*i] * x[*j]);
        }
        m
    }

    fn analytic_derivative(&self, x: &[f64], i: usize) -> Option<CMat> {
        let mut m = self.linear[i].clone();
        for (a, b, c) in &self.quadratic {
            if *a == i {
                m += c.scale(x[*b]);
            }
            if *b == i {
                m += c.scale(x[*a]);
            }
        }
        Some(m)
    }

    fn analytic_second_derivative(&self, _x: &[f64], i: usize, j: usize) -> Option<CMat> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let mut m = CMat::zeros(self.dim, self.dim);
        for (a, b, c) in &self.quadratic {
            if *a == lo && *b == hi {
                // d^2 (x_a x_a) = 2
                m += if lo == hi { c.scale(2.0) } else { c.clone() };
            }
        }
        Some(m)
    }
}

/// Serialized polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub dim: usize,
    pub params: usize,
    pub c0: EncodedMatrix,
    pub linear: Vec<EncodedMatrix>,
    #[serde(default)]
    pub quadratic: Vec<(usize, usize, EncodedMatrix)>,
    /// Half-width of the open parameter box; absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
}

impl PolynomialSpec {
    pub fn build(&self) -> Result<PolynomialFamily> {
        if self.linear.len() != self.params {
            return Err(Error::InvalidModel(format!(
                "params = {} but {} linear coefficients given",
                self.params,
                self.linear.len()
            )));
        }
        let c0 = decode_matrix(&self.c0)?;
        if c0.shape() != (self.dim, self.dim) {
            return Err(Error::InvalidModel(format!(
                "dim = {} but c0 has shape {:?}",
                self.dim,
                c0.shape()
            )));
        }
        let linear = self.linear.iter().map(decode_matrix).collect::<Result<Vec<_>>>()?;
        let quadratic = self
            .quadratic
            .iter()
            .map(|(i, j, m)| Ok((*i, *j, decode_matrix(m)?)))
            .collect::<Result<Vec<_>>>()?;
        PolynomialFamily::new(c0, linear, quadratic, self.domain_radius)
    }
}

/// Top-level model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Polynomial(PolynomialSpec),
    Builtin { name: String },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn StateFamily>> {
        match self {
            ModelSpec::Polynomial(p) => Ok(Box::new(p.build()?)),
            ModelSpec::Builtin { name } => {
                builtin(name).ok_or_else(|| Error::InvalidModel(format!("unknown built-in family {name:?}")))
            }
        }
    }
}

/// Parses a model document.
pub fn load_model(json: &str) -> Result<Box<dyn StateFamily>> {
    let spec: ModelSpec = serde_json::from_str(json).map_err(|e| Error::InvalidModel(e.to_string()))?;
    spec.build()
}

/// Resolves `builtin:NAME` or a path to a model document.
pub fn resolve_model(reference: &str) -> Result<Box<dyn StateFamily>> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        return ModelSpec::Builtin { name: name.to_string() }.build();
    }
    let text =
        std::fs::read_to_string(reference).map_err(|e| Error::InvalidModel(format!("cannot read {reference}: {e}")))?;
    load_model(&text)
}
