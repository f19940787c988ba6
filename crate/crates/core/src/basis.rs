//! Polynomial bases: orthonormal scalar bases on the reference triangle,
//! Legendre bases on edges and the vector spaces used for discrete weak
//! gradients.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::quadrature::reference_monomial_integral;

/// Exponents `(p, q)` of `x^p y^q` with total degree `<= degree`, ordered by
/// total degree, then by increasing `q`.
pub fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for d in 0..=degree as u32 {
        for q in 0..=d {
            out.push((d - q, q));
        }
    }
    out
}

pub fn scalar_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

#[inline]
fn powi(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

/// Orthonormal basis of `P_j` on the reference triangle, built by Cholesky
/// orthogonalization of the monomials against their exact Gram matrix.
#[derive(Debug, Clone)]
pub struct ScalarBasis {
    degree: usize,
    exponents: Vec<(u32, u32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coefficients: DMatrix<f64>,
}

impl ScalarBasis {
    pub fn new(degree: usize) -> Self {
        let exponents = monomial_exponents(degree);
        let n = exponents.len();
        let gram = DMatrix::from_fn(n, n, |i, k| {
            let (pi, qi) = exponents[i];
            let (pk, qk) = exponents[k];
            reference_monomial_integral(pi + pk, qi + qk)
        });
        let chol = gram
            .cholesky()
            .expect("monomial Gram matrix is positive definite");
        let l = chol.l();
        let coefficients = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor is invertible");
        ScalarBasis {
            degree,
            exponents,
            coefficients,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    /// Orthonormalization transform (rows = basis functions, columns = monomials).
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Values of all basis functions at reference point `xi`.
    pub fn eval_into(&self, xi: [f64; 2], out: &mut [f64]) {
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(p, q)| powi(xi[0], p) * powi(xi[1], q))
            .collect();
        for (i, o) in out.iter_mut().enumerate().take(self.dim()) {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.coefficients[(i, k)] * mono[k];
            }
            *o = s;
        }
    }

    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(xi, &mut out);
        out
    }
}

/// Legendre polynomials on `[0, 1]` scaled to unit `L^2(0,1)` norm:
/// `sqrt(2k+1) P_k(2t - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeBasis {
    degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let x = 2.0 * t - 1.0;
        let mut p0 = 1.0;
        let mut p1 = x;
        out[0] = 1.0;
        if self.degree >= 1 {
            out[1] = 3f64.sqrt() * x;
        }
        for k in 2..=self.degree {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            out[k] = (2.0 * kf + 1.0).sqrt() * p2;
            p0 = p1;
            p1 = p2;
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Sign of basis function `k` under the reversal `t -> 1 - t`.
    pub fn reversal_sign(k: usize) -> f64 {
        if k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Gradient space family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `[P_{j+1}]^2` with edge degree `j+1`.
    Full,
    /// Raviart-Thomas `RT_j = [P_j]^2 + x * homogeneous P_j` with edge degree `j`.
    Rt,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Full => "full",
            Family::Rt => "rt",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Family::Full),
            "rt" => Ok(Family::Rt),
            other => Err(format!("unknown family '{other}' (expected full or rt)")),
        }
    }
}

/// `coef * x^p y^q`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub p: u32,
    pub q: u32,
}

/// Two-component polynomial field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorPolynomial {
    pub x: Vec<Term>,
    pub y: Vec<Term>,
}

fn eval_terms(terms: &[Term], s: [f64; 2]) -> f64 {
    terms
        .iter()
        .map(|t| t.coef * powi(s[0], t.p) * powi(s[1], t.q))
        .sum()
}

impl VectorPolynomial {
    pub fn eval(&self, s: [f64; 2]) -> [f64; 2] {
        [eval_terms(&self.x, s), eval_terms(&self.y, s)]
    }

    pub fn divergence(&self, s: [f64; 2]) -> f64 {
        let dx: f64 = self
            .x
            .iter()
            .filter(|t| t.p > 0)
            .map(|t| t.coef * t.p as f64 * powi(s[0], t.p - 1) * powi(s[1], t.q))
            .sum();
        let dy: f64 = self
            .y
            .iter()
            .filter(|t| t.q > 0)
            .map(|t| t.coef * t.q as f64 * powi(s[0], t.p) * powi(s[1], t.q - 1))
            .sum();
        dx + dy
    }

    pub fn degree(&self) -> u32 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|t| t.p + t.q)
            .max()
            .unwrap_or(0)
    }
}

/// Monomial spanning set of the gradient space `V(T, r)` in whatever
/// coordinates the caller evaluates it in.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorBasis {
    family: Family,
    j: usize,
    members: Vec<VectorPolynomial>,
}

impl VectorBasis {
    pub fn new(family: Family, j: usize) -> Self {
        let mono = |p, q| Term { coef: 1.0, p, q };
        let mut members = Vec::new();
        let full_degree = match family {
            Family::Full => j + 1,
            Family::Rt => j,
        };
        for &(p, q) in &monomial_exponents(full_degree) {
            members.push(VectorPolynomial {
                x: vec![mono(p, q)],
                y: vec![],
            });
            members.push(VectorPolynomial {
                x: vec![],
                y: vec![mono(p, q)],
            });
        }
        if family == Family::Rt {
            for q in 0..=j as u32 {
                let p = j as u32 - q;
                members.push(VectorPolynomial {
                    x: vec![mono(p + 1, q)],
                    y: vec![mono(p, q + 1)],
                });
            }
        }
        VectorBasis { family, j, members }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    /// Polynomial degree of the largest member (`j + 1` for both families).
    pub fn max_degree(&self) -> usize {
        self.j + 1
    }

    pub fn members(&self) -> &[VectorPolynomial] {
        &self.members
    }

    pub fn eval_into(&self, s: [f64; 2], out: &mut [[f64; 2]]) {
        for (o, m) in out.iter_mut().zip(&self.members) {
            *o = m.eval(s);
        }
    }

    pub fn eval(&self, s: [f64; 2]) -> Vec<[f64; 2]> {
        self.members.iter().map(|m| m.eval(s)).collect()
    }

    pub fn divergence(&self, s: [f64; 2]) -> Vec<f64> {
        self.members.iter().map(|m| m.divergence(s)).collect()
    }

    pub fn normal_trace(&self, s: [f64; 2], n: [f64; 2]) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| {
                let v = m.eval(s);
                v[0] * n[0] + v[1] * n[1]
            })
            .collect()
    }
}
