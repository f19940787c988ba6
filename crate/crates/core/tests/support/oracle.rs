//! Brute-force reference computations that share no numerics with the
//! library: their own Gauss rules (Golub-Welsch), raw monomial bases in
//! physical coordinates, and dense solves.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type P = [f64; 2];

/// Gauss-Legendre on `[0, 1]` from the eigen-decomposition of the Jacobi matrix.
pub fn gauss01(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = 2.0 * eig.eigenvectors[(0, i)].powi(2);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Points and weights on a physical triangle by the Duffy collapse.
pub fn triangle_points(p: [P; 3], n: usize) -> Vec<(P, f64)> {
    let g = gauss01(n);
    let det = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])).abs();
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let (a, b) = (u, v * (1.0 - u));
            let x = [
                p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
                p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
            ];
            out.push((x, wu * wv * (1.0 - u) * det));
        }
    }
    out
}

/// Legendre polynomial `P_k` on `[-1, 1]` by the three-term recurrence.
pub fn legendre(k: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return 1.0;
    }
    for m in 1..k {
        let p2 = ((2 * m + 1) as f64 * x * p1 - m as f64 * p0) / (m + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `L^2(0,1)`-orthonormal Legendre function.
pub fn edge_basis(k: usize, t: f64) -> f64 {
    ((2 * k + 1) as f64).sqrt() * legendre(k, 2.0 * t - 1.0)
}

/// Raw vector monomial `(coef_x * m, coef_y * m)` pieces in physical
/// coordinates centred at `c`: each member is a list of `(component, a, b, scale)`.
#[derive(Clone, Debug)]
pub struct Member(pub Vec<(usize, i32, i32, f64)>);

impl Member {
    pub fn eval(&self, x: P, c: P) -> P {
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        let mut v = [0.0; 2];
        for &(comp, a, b, s) in &self.0 {
            v[comp] += s * dx.powi(a) * dy.powi(b);
        }
        v
    }

    pub fn div(&self, x: P, c: P) -> f64 {
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        let mut d = 0.0;
        for &(comp, a, b, s) in &self.0 {
            if comp == 0 && a > 0 {
                d += s * a as f64 * dx.powi(a - 1) * dy.powi(b);
            }
            if comp == 1 && b > 0 {
                d += s * b as f64 * dx.powi(a) * dy.powi(b - 1);
            }
        }
        d
    }
}

/// Unorthonormalized gradient space: `[P_{j+1}]^2` (full) or
/// `[P_j]^2 + x P_j^hom` (rt).
pub fn gradient_space(j: usize, rt: bool) -> Vec<Member> {
    let deg = if rt { j } else { j + 1 } as i32;
    let mut out = Vec::new();
    for comp in 0..2 {
        for d in 0..=deg {
            for b in 0..=d {
                out.push(Member(vec![(comp, d - b, b, 1.0)]));
            }
        }
    }
    if rt {
        let d = j as i32;
        for b in 0..=d {
            let a = d - b;
            out.push(Member(vec![(0, a + 1, b, 1.0), (1, a, b + 1, 1.0)]));
        }
    }
    out
}

/// Description of the local degrees of freedom.
pub struct LocalDofs<'a> {
    pub corners: [P; 3],
    pub orientations: [i8; 3],
    pub interior_dim: usize,
    pub edge_dim: usize,
    /// Interior basis values at a physical point.
    pub interior: &'a dyn Fn(P) -> Vec<f64>,
}

/// Solve the defining variational problem of the weak gradient for every
/// unit local DOF vector; returns, per column, the coefficient vector in the
/// raw basis together with the basis.
pub fn weak_gradient_columns(dofs: &LocalDofs, j: usize, rt: bool, n: usize) -> (Vec<Member>, P, DMatrix<f64>) {
    let p = dofs.corners;
    let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    let basis = gradient_space(j, rt);
    let nv = basis.len();
    let quad = triangle_points(p, n);
    let mut m = DMatrix::<f64>::zeros(nv, nv);
    for &(x, w) in &quad {
        let vals: Vec<P> = basis.iter().map(|q| q.eval(x, c)).collect();
        for a in 0..nv {
            for b in 0..nv {
                m[(a, b)] += w * (vals[a][0] * vals[b][0] + vals[a][1] * vals[b][1]);
            }
        }
    }
    let nloc = dofs.interior_dim + 3 * dofs.edge_dim;
    let mut rhs = DMatrix::<f64>::zeros(nv, nloc);
    for &(x, w) in &quad {
        let phi = (dofs.interior)(x);
        for (a, q) in basis.iter().enumerate() {
            let d = q.div(x, c);
            for i in 0..dofs.interior_dim {
                rhs[(a, i)] -= w * phi[i] * d;
            }
        }
    }
    let g = gauss01(n);
    for k in 0..3 {
        let (a, b) = (p[k], p[(k + 1) % 3]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        // global direction runs a -> b for positive orientation
        let (s, e) = if dofs.orientations[k] > 0 { (a, b) } else { (b, a) };
        for &(t, w) in &g {
            let x = [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])];
            for (row, q) in basis.iter().enumerate() {
                let v = q.eval(x, c);
                let qn = v[0] * normal[0] + v[1] * normal[1];
                for l in 0..dofs.edge_dim {
                    rhs[(row, dofs.interior_dim + k * dofs.edge_dim + l)] += w * len * edge_basis(l, t) * qn;
                }
            }
        }
    }
    let coeffs = m.lu().solve(&rhs).expect("mass matrix invertible");
    (basis, c, coeffs)
}

/// Evaluate a raw-basis field.
pub fn eval_field(basis: &[Member], c: P, coeffs: &DVector<f64>, x: P) -> P {
    let mut v = [0.0; 2];
    for (q, a) in basis.iter().zip(coeffs.iter()) {
        let e = q.eval(x, c);
        v[0] += a * e[0];
        v[1] += a * e[1];
    }
    v
}

/// Relative Frobenius distance between the library's local weak-gradient
/// matrix and the oracle's, both expressed in the library's orthonormal
/// gradient basis. Also returns the Gram defect of that basis under the
/// oracle quadrature.
pub fn weak_gradient_defect(corners: [P; 3], orientations: [i8; 3], space: wg_core::WgSpace) -> (f64, f64) {
    use wg_core::weak::{LocalWeakGradient, ReferenceElement};
    let re = ReferenceElement::new(space, 3).expect("reference element");
    let g = LocalWeakGradient::build(0, corners, orientations, &re).expect("local operator");
    let map = *g.map();
    let interior = |x: P| {
        let mut out = vec![0.0; space.interior_dofs()];
        re.interior_values(&map, map.reference(x), &mut out);
        out
    };
    let dofs = LocalDofs {
        corners,
        orientations,
        interior_dim: space.interior_dofs(),
        edge_dim: space.edge_dofs(),
        interior: &interior,
    };
    let rt = space.family() == wg_core::Family::Rt;
    let n = 16;
    let (basis, c, raw) = weak_gradient_columns(&dofs, space.j(), rt, n);
    let vs = g.vector_space();
    let nv = vs.dim();
    let nloc = space.local_dofs();
    let mut projected = DMatrix::<f64>::zeros(nv, nloc);
    let mut gram = DMatrix::<f64>::zeros(nv, nv);
    for (x, w) in triangle_points(corners, n) {
        let psi = vs.eval(map.reference(x));
        for col in 0..nloc {
            let f = eval_field(&basis, c, &raw.column(col).into_owned(), x);
            for m in 0..nv {
                projected[(m, col)] += w * (psi[m][0] * f[0] + psi[m][1] * f[1]);
            }
        }
        for a in 0..nv {
            for b in 0..nv {
                gram[(a, b)] += w * (psi[a][0] * psi[b][0] + psi[a][1] * psi[b][1]);
            }
        }
    }
    let lib = g.matrix();
    let defect = (lib - &projected).norm() / lib.norm();
    let gram_defect = (gram - DMatrix::<f64>::identity(nv, nv)).amax();
    (defect, gram_defect)
}
