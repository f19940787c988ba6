//! Quadrature on the reference triangle `(0,0),(1,0),(0,1)` and on the unit
//! segment `[0,1]`.
//!
//! Triangle rules of exactness >= 2 are collapsed tensor Gauss-Legendre rules
//! (Duffy map `x = u, y = v (1 - u)`); with `n` points per direction they
//! integrate total degree `2n - 2` exactly. All weights are positive and all
//! points strictly interior.

use crate::error::{Result, WgError};

/// Highest exactness supported by [`triangle_rule`].
pub const MAX_TRIANGLE_EXACTNESS: usize = 40;
/// Highest exactness supported by [`edge_rule`].
pub const MAX_EDGE_EXACTNESS: usize = 127;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    /// Reference coordinates `(xi, eta)`.
    pub points: Vec<[f64; 2]>,
    /// Weights summing to 1/2, the reference area.
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of point `i`.
    pub fn barycentric(&self, i: usize) -> [f64; 3] {
        let [x, y] = self.points[i];
        [1.0 - x - y, x, y]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights summing to 1.
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `exactness`.
pub fn edge_rule(exactness: usize) -> Result<EdgeRule> {
    if exactness > MAX_EDGE_EXACTNESS {
        return Err(WgError::UnsupportedQuadrature {
            requested: exactness,
            maximum: MAX_EDGE_EXACTNESS,
        });
    }
    let n = exactness / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(EdgeRule {
        points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        exactness: 2 * n - 1,
    })
}

/// Rule on the reference triangle exact for total degree `exactness`.
pub fn triangle_rule(exactness: usize) -> Result<TriangleRule> {
    if exactness > MAX_TRIANGLE_EXACTNESS {
        return Err(WgError::UnsupportedQuadrature {
            requested: exactness,
            maximum: MAX_TRIANGLE_EXACTNESS,
        });
    }
    if exactness <= 1 {
        return Ok(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            exactness: 1,
        });
    }
    // the collapse adds a factor (1 - u), so the u-direction sees degree k + 1
    let n = (exactness + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xu, wu) in x.iter().zip(&w) {
        let u = 0.5 * (xu + 1.0);
        for (xv, wv) in x.iter().zip(&w) {
            let v = 0.5 * (xv + 1.0);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        exactness: 2 * n - 2,
    })
}

/// Exact integral of `x^p y^q` over the reference triangle: `p! q! / (p+q+2)!`.
pub fn reference_monomial_integral(p: u32, q: u32) -> f64 {
    // p!q!/(p+q+2)! as a running product keeps everything well scaled.
    let mut value = 1.0;
    for k in 1..=q {
        value *= k as f64 / (p + k) as f64;
    }
    value / ((p + q + 1) as f64 * (p + q + 2) as f64)
}
