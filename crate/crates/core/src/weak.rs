//! Weak functions, local `L^2` projections and the discrete weak gradient.
//!
//! On a triangle `T` the discrete weak gradient of `v = {v_0, v_b}` is the
//! unique `w` in the gradient space `V(T)` with
//!
//! ```text
//! (w, q)_T = -(v_0, div q)_T + <v_b, q . n>_{dT}    for all q in V(T).
//! ```
//!
//! `V(T)` is spanned by vector monomials in the scaled local coordinates
//! `s = (x - x_c) / h_T` and orthonormalized in `L^2(T)` through a Cholesky
//! factor of its mass matrix, so the local map `G_T` is just the right-hand
//! side matrix expressed in that basis. Everything about `G_T` depends on
//! the triangle only through its Jacobian, which lets congruent-by-translation
//! elements share one computation.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{EdgeBasis, ScalarBasis, VectorBasis};
use crate::dofs::{build_dof_map, DofMap};
use crate::error::{Result, WgError};
use crate::expr::EvalError;
use crate::field::ScalarField;
use crate::mesh::{Mesh, Point};
use crate::par;
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, TriangleRule};
use crate::space::WgSpace;

/// Condition number of the gradient-space mass matrix above which an
/// element is rejected as degenerate.
pub const MAX_MASS_CONDITION: f64 = 1e12;

/// Relative singular value below which a direction counts as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

const REF_CORNERS: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Affine map from the reference triangle: `x = origin + J xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMap {
    pub origin: Point,
    /// `jac[r][c]`, columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// Diameter computed from the Jacobian alone.
    pub h: f64,
}

impl ElementMap {
    pub fn new(corners: [Point; 3]) -> Self {
        let [p0, p1, p2] = corners;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        Self::from_jacobian(p0, jac)
    }

    pub fn from_jacobian(origin: Point, jac: [[f64; 2]; 2]) -> Self {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let e0 = jac[0][0].hypot(jac[1][0]);
        let e2 = jac[0][1].hypot(jac[1][1]);
        let e1 = (jac[0][1] - jac[0][0]).hypot(jac[1][1] - jac[1][0]);
        ElementMap {
            origin,
            jac,
            det,
            h: e0.max(e1).max(e2),
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    #[inline]
    pub fn apply_jac(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.jac[0][0] * v[0] + self.jac[0][1] * v[1],
            self.jac[1][0] * v[0] + self.jac[1][1] * v[1],
        ]
    }

    #[inline]
    pub fn physical(&self, xi: Point) -> Point {
        let d = self.apply_jac(xi);
        [self.origin[0] + d[0], self.origin[1] + d[1]]
    }

    /// Scaled coordinates relative to the centroid.
    #[inline]
    pub fn local(&self, xi: Point) -> [f64; 2] {
        let d = self.apply_jac([xi[0] - 1.0 / 3.0, xi[1] - 1.0 / 3.0]);
        [d[0] / self.h, d[1] / self.h]
    }

    /// Inverse of [`ElementMap::physical`].
    pub fn reference(&self, x: Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            (self.jac[1][1] * d[0] - self.jac[0][1] * d[1]) / self.det,
            (-self.jac[1][0] * d[0] + self.jac[0][0] * d[1]) / self.det,
        ]
    }

    /// Physical edge vector and outward unit normal of local edge `k`.
    pub fn edge(&self, k: usize) -> ([f64; 2], f64, [f64; 2]) {
        let a = REF_CORNERS[k];
        let b = REF_CORNERS[(k + 1) % 3];
        let d = self.apply_jac([b[0] - a[0], b[1] - a[1]]);
        let len = d[0].hypot(d[1]);
        (d, len, [d[1] / len, -d[0] / len])
    }

    /// Bit pattern of the Jacobian; equal keys give identical local operators.
    fn key(&self) -> [u64; 4] {
        [
            self.jac[0][0].to_bits(),
            self.jac[0][1].to_bits(),
            self.jac[1][0].to_bits(),
            self.jac[1][1].to_bits(),
        ]
    }
}

/// Reference point on local edge `k` at parameter `t` (local direction).
#[inline]
pub fn reference_edge_point(k: usize, t: f64) -> Point {
    let a = REF_CORNERS[k];
    let b = REF_CORNERS[(k + 1) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Bases and rules shared by every element of a discretization.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub space: WgSpace,
    pub scalar: ScalarBasis,
    pub edge: EdgeBasis,
    pub vector: Arc<VectorBasis>,
    pub tri_rule: TriangleRule,
    pub edge_rule: EdgeRule,
}

impl ReferenceElement {
    pub fn new(space: WgSpace, quad_boost: usize) -> Result<Self> {
        let exactness = space.quadrature_exactness(quad_boost);
        Ok(ReferenceElement {
            space,
            scalar: ScalarBasis::new(space.j()),
            edge: EdgeBasis::new(space.edge_degree()),
            vector: Arc::new(space.vector_basis()),
            tri_rule: triangle_rule(exactness)?,
            edge_rule: edge_rule(exactness)?,
        })
    }

    /// Physical interior basis values: orthonormal on `T`.
    #[inline]
    pub fn interior_values(&self, map: &ElementMap, xi: Point, out: &mut [f64]) {
        self.scalar.eval_into(xi, out);
        let s = 1.0 / map.det.abs().sqrt();
        for v in out.iter_mut() {
            *v *= s;
        }
    }
}

/// Orthonormal basis of the gradient space on one element.
#[derive(Debug, Clone)]
pub struct LocalVectorSpace {
    basis: Arc<VectorBasis>,
    map: ElementMap,
    /// Rows = orthonormal functions, columns = monomial members.
    transform: DMatrix<f64>,
    mass_condition: f64,
}

impl LocalVectorSpace {
    pub fn new(basis: Arc<VectorBasis>, map: &ElementMap, rule: &TriangleRule) -> std::result::Result<Self, f64> {
        let n = basis.dim();
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut vals = vec![[0.0; 2]; n];
        let jw = map.det.abs();
        for (xi, w) in rule.iter() {
            basis.eval_into(map.local(xi), &mut vals);
            let w = w * jw;
            for a in 0..n {
                for b in 0..=a {
                    mass[(a, b)] += w * (vals[a][0] * vals[b][0] + vals[a][1] * vals[b][1]);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                mass[(b, a)] = mass[(a, b)];
            }
        }
        let eig = mass.clone().symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(0.0, f64::max);
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(cond <= MAX_MASS_CONDITION) {
            return Err(cond);
        }
        let chol = mass.cholesky().ok_or(f64::INFINITY)?;
        let transform = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(f64::INFINITY)?;
        Ok(LocalVectorSpace {
            basis,
            map: *map,
            transform,
            mass_condition: cond,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn mass_condition(&self) -> f64 {
        self.mass_condition
    }

    /// Orthonormal basis values at reference point `xi`.
    pub fn eval(&self, xi: Point) -> Vec<[f64; 2]> {
        let mono = self.basis.eval(self.map.local(xi));
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut v = [0.0; 2];
                for k in 0..=i {
                    let c = self.transform[(i, k)];
                    v[0] += c * mono[k][0];
                    v[1] += c * mono[k][1];
                }
                v
            })
            .collect()
    }

    /// Physical divergence of each orthonormal basis function.
    pub fn divergence(&self, xi: Point) -> Vec<f64> {
        let mono = self.basis.divergence(self.map.local(xi));
        let n = self.dim();
        (0..n)
            .map(|i| (0..=i).map(|k| self.transform[(i, k)] * mono[k]).sum::<f64>() / self.map.h)
            .collect()
    }

    /// Evaluate `sum_m coeffs[m] psi_m` at `xi`.
    pub fn combine(&self, coeffs: &[f64], xi: Point) -> [f64; 2] {
        let vals = self.eval(xi);
        let mut out = [0.0; 2];
        for (c, v) in coeffs.iter().zip(&vals) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }
}

/// Per-triangle matrix taking local weak DOFs (interior block, then local
/// edges 0, 1, 2 in global edge direction) to the coefficients of the
/// discrete weak gradient in the orthonormal gradient basis.
#[derive(Debug, Clone)]
pub struct LocalWeakGradient {
    pub triangle: usize,
    space: WgSpace,
    map: ElementMap,
    vspace: Arc<LocalVectorSpace>,
    matrix: DMatrix<f64>,
}

/// Right-hand side matrix with edge columns in local edge direction.
fn local_operator(
    re: &ReferenceElement,
    map: &ElementMap,
) -> std::result::Result<(Arc<LocalVectorSpace>, DMatrix<f64>), f64> {
    let space = re.space;
    let vspace = LocalVectorSpace::new(re.vector.clone(), map, &re.tri_rule)?;
    let nv = vspace.dim();
    let nint = space.interior_dofs();
    let ne = space.edge_dofs();
    let mut b = DMatrix::<f64>::zeros(nv, space.local_dofs());
    let jw = map.det.abs();
    let mut phi = vec![0.0; nint];
    for (xi, w) in re.tri_rule.iter() {
        re.interior_values(map, xi, &mut phi);
        let div = vspace.divergence(xi);
        for m in 0..nv {
            for i in 0..nint {
                b[(m, i)] -= w * jw * phi[i] * div[m];
            }
        }
    }
    let mut leg = vec![0.0; ne];
    for k in 0..3 {
        let (_, len, n) = map.edge(k);
        for (t, w) in re.edge_rule.iter() {
            re.edge.eval_into(t, &mut leg);
            let psi = vspace.eval(reference_edge_point(k, t));
            for m in 0..nv {
                let qn = psi[m][0] * n[0] + psi[m][1] * n[1];
                for p in 0..ne {
                    b[(m, nint + k * ne + p)] += w * len * leg[p] * qn;
                }
            }
        }
    }
    Ok((Arc::new(vspace), b))
}

fn orient_columns(space: &WgSpace, mut b: DMatrix<f64>, orientations: [i8; 3]) -> DMatrix<f64> {
    let nint = space.interior_dofs();
    let ne = space.edge_dofs();
    for (k, &o) in orientations.iter().enumerate() {
        if o < 0 {
            for p in (1..ne).step_by(2) {
                b.column_mut(nint + k * ne + p).neg_mut();
            }
        }
    }
    b
}

impl LocalWeakGradient {
    /// Build the operator for one triangle given its corners (counter-clockwise)
    /// and the orientation of each local edge relative to its global direction.
    pub fn build(
        triangle: usize,
        corners: [Point; 3],
        orientations: [i8; 3],
        re: &ReferenceElement,
    ) -> Result<Self> {
        let map = ElementMap::new(corners);
        let (vspace, b) = local_operator(re, &map).map_err(|cond| degenerate(triangle, cond))?;
        Ok(LocalWeakGradient {
            triangle,
            space: re.space,
            map,
            vspace,
            matrix: orient_columns(&re.space, b, orientations),
        })
    }

    pub fn space(&self) -> &WgSpace {
        &self.space
    }

    pub fn map(&self) -> &ElementMap {
        &self.map
    }

    pub fn vector_space(&self) -> &LocalVectorSpace {
        &self.vspace
    }

    /// `dim V x local DOFs`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn mass_condition(&self) -> f64 {
        self.vspace.mass_condition()
    }

    pub fn apply(&self, local: &DVector<f64>) -> DVector<f64> {
        &self.matrix * local
    }

    /// Local DOFs of the weak function `v_0 = v_b = 1`.
    pub fn constant_function(&self) -> DVector<f64> {
        let nint = self.space.interior_dofs();
        let ne = self.space.edge_dofs();
        let mut v = DVector::zeros(self.space.local_dofs());
        // Q_0 1 = sqrt(|T|) phi_0 since phi_0 = 1 / sqrt(|T|)
        v[0] = self.map.area().sqrt();
        for k in 0..3 {
            v[nint + k * ne] = 1.0;
        }
        v
    }
}

fn degenerate(triangle: usize, cond: f64) -> WgError {
    WgError::DegenerateElement {
        triangle,
        reason: format!(
            "gradient-space mass matrix condition estimate {cond:.3e} exceeds {MAX_MASS_CONDITION:.0e}"
        ),
    }
}

/// Kernel of a local weak-gradient map.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KernelReport {
    pub dimension: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Distance of the normalized constant weak function from the kernel.
    pub constant_residual: f64,
    /// Smallest non-kernel singular value over the largest.
    pub min_nonkernel_ratio: f64,
}

impl KernelReport {
    /// Kernel is one-dimensional and spanned by the constant function.
    pub fn is_constants_only(&self, tol: f64) -> bool {
        self.dimension == 1 && self.constant_residual <= tol
    }
}

pub fn weak_gradient_kernel(g: &LocalWeakGradient) -> KernelReport {
    let m = g.matrix();
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::<f64>::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let kernel: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| svd.singular_values[i] < KERNEL_THRESHOLD * smax)
        .collect();
    let c = g.constant_function().normalize();
    let mut proj = DVector::<f64>::zeros(n);
    for &i in &kernel {
        let row = v_t.row(i).transpose();
        proj += &row * row.dot(&c);
    }
    let min_nonkernel = sv
        .iter()
        .copied()
        .filter(|&s| s >= KERNEL_THRESHOLD * smax)
        .fold(f64::INFINITY, f64::min);
    KernelReport {
        dimension: kernel.len(),
        singular_values: sv,
        constant_residual: (c - proj).norm(),
        min_nonkernel_ratio: if smax > 0.0 { min_nonkernel / smax } else { 0.0 },
    }
}

/// Options controlling quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationOptions {
    /// Extra triangle/edge exactness beyond `2 (j + 1)`.
    pub quad_boost: usize,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        DiscretizationOptions { quad_boost: 3 }
    }
}

/// A mesh, a WG space and every local weak-gradient operator.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Arc<Mesh>,
    reference: ReferenceElement,
    gradients: Vec<LocalWeakGradient>,
    dofs: DofMap,
    options: DiscretizationOptions,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, space: WgSpace, options: DiscretizationOptions) -> Result<Self> {
        let reference = ReferenceElement::new(space, options.quad_boost)?;
        let maps: Vec<ElementMap> = (0..mesh.num_triangles())
            .map(|t| ElementMap::new(mesh.corners(t)))
            .collect();

        // one local computation per distinct Jacobian
        let mut class_of = Vec::with_capacity(maps.len());
        let mut representatives: Vec<usize> = Vec::new();
        let mut lookup: HashMap<[u64; 4], usize> = HashMap::new();
        for (t, map) in maps.iter().enumerate() {
            let class = *lookup.entry(map.key()).or_insert_with(|| {
                representatives.push(t);
                representatives.len() - 1
            });
            class_of.push(class);
        }
        let blocks = par::map_indexed(representatives.len(), |c| {
            let t = representatives[c];
            local_operator(&reference, &maps[t]).map_err(|cond| degenerate(t, cond))
        });
        let blocks: Vec<(Arc<LocalVectorSpace>, DMatrix<f64>)> =
            blocks.into_iter().collect::<Result<_>>()?;

        let gradients = par::map_indexed(maps.len(), |t| {
            let (vspace, b) = &blocks[class_of[t]];
            // the shared vector space carries the representative's origin;
            // only its Jacobian is ever used for evaluation
            LocalWeakGradient {
                triangle: t,
                space,
                map: maps[t],
                vspace: vspace.clone(),
                matrix: orient_columns(&space, b.clone(), mesh.orientations(t)),
            }
        });
        let dofs = build_dof_map(&mesh, &space);
        Ok(Discretization {
            mesh,
            reference,
            gradients,
            dofs,
            options,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn space(&self) -> WgSpace {
        self.reference.space
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn options(&self) -> DiscretizationOptions {
        self.options
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn gradient(&self, t: usize) -> &LocalWeakGradient {
        &self.gradients[t]
    }

    pub fn gradients(&self) -> &[LocalWeakGradient] {
        &self.gradients
    }

    pub fn element_map(&self, t: usize) -> &ElementMap {
        &self.gradients[t].map
    }

    /// Quadrature points of triangle `t`: reference point, physical point and
    /// physical weight.
    pub fn quadrature(&self, t: usize) -> impl Iterator<Item = (Point, Point, f64)> + '_ {
        let map = self.element_map(t);
        let jw = map.det.abs();
        self.reference
            .tri_rule
            .iter()
            .map(move |(xi, w)| (xi, map.physical(xi), w * jw))
    }

    pub fn interior_values(&self, t: usize, xi: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.space().interior_dofs()];
        self.reference
            .interior_values(self.element_map(t), xi, &mut out);
        out
    }

    /// Value of an interior polynomial with coefficients `c` at reference point `xi`.
    pub fn interior_value(&self, t: usize, c: &[f64], xi: Point) -> f64 {
        self.interior_values(t, xi)
            .iter()
            .zip(c)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Point on global edge `e` at parameter `t` in global direction.
    pub fn edge_point(&self, e: usize, t: f64) -> Point {
        let [a, b] = self.mesh.edge_endpoints(e);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }
}

/// A weak function `{v_0, v_b}`: one interior block per triangle and one
/// block per global edge, shared by both neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFunction {
    space: WgSpace,
    num_triangles: usize,
    num_edges: usize,
    values: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(disc: &Discretization) -> Self {
        WeakFunction {
            space: disc.space(),
            num_triangles: disc.mesh().num_triangles(),
            num_edges: disc.mesh().num_edges(),
            values: vec![0.0; disc.dofs().total()],
        }
    }

    pub fn from_values(disc: &Discretization, values: Vec<f64>) -> Result<Self> {
        if values.len() != disc.dofs().total() {
            return Err(WgError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                disc.dofs().total(),
                values.len()
            )));
        }
        Ok(WeakFunction {
            values,
            ..WeakFunction::zeros(disc)
        })
    }

    pub fn space(&self) -> WgSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn interior_len(&self) -> usize {
        self.space.interior_dofs()
    }

    pub fn interior(&self, t: usize) -> &[f64] {
        let n = self.interior_len();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn interior_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.interior_len();
        &mut self.values[t * n..(t + 1) * n]
    }

    pub fn edge(&self, e: usize) -> &[f64] {
        let n = self.space.edge_dofs();
        let s = self.num_triangles * self.interior_len() + e * n;
        &self.values[s..s + n]
    }

    pub fn edge_mut(&mut self, e: usize) -> &mut [f64] {
        let n = self.space.edge_dofs();
        let s = self.num_triangles * self.interior_len() + e * n;
        &mut self.values[s..s + n]
    }

    /// Local DOF vector of triangle `t` in [`LocalWeakGradient`] order.
    pub fn local(&self, mesh: &Mesh, t: usize) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.space.local_dofs());
        v.extend_from_slice(self.interior(t));
        for e in mesh.triangle_edges(t) {
            v.extend_from_slice(self.edge(e));
        }
        DVector::from_vec(v)
    }

    fn check(&self, other: &WeakFunction) {
        assert_eq!(self.space, other.space);
        assert_eq!(self.values.len(), other.values.len());
    }

    pub fn axpy(&mut self, alpha: f64, x: &WeakFunction) {
        self.check(x);
        for (a, b) in self.values.iter_mut().zip(&x.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.values {
            *a *= alpha;
        }
    }

    pub fn dot(&self, other: &WeakFunction) -> f64 {
        self.check(other);
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &WeakFunction) -> WeakFunction {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// Coefficients of the discrete weak gradient of `v` on triangle `t`.
pub fn weak_gradient(disc: &Discretization, v: &WeakFunction, t: usize) -> DVector<f64> {
    disc.gradient(t).apply(&v.local(disc.mesh(), t))
}

/// `L^2(T)` projection onto `P_j(T)`, in the orthonormal interior basis.
pub fn project_q0(disc: &Discretization, u: &ScalarField, t: usize) -> Result<Vec<f64>, EvalError> {
    let mut c = vec![0.0; disc.space().interior_dofs()];
    for (xi, x, w) in disc.quadrature(t) {
        let val = u.eval(x)?;
        for (ci, phi) in c.iter_mut().zip(disc.interior_values(t, xi)) {
            *ci += w * val * phi;
        }
    }
    Ok(c)
}

/// `L^2` projection onto `P_l(e)` in the Legendre basis of the global edge
/// direction.
pub fn project_qb(disc: &Discretization, g: &ScalarField, e: usize) -> Result<Vec<f64>, EvalError> {
    let re = disc.reference();
    let mut c = vec![0.0; re.edge.dim()];
    let mut leg = vec![0.0; re.edge.dim()];
    for (s, w) in re.edge_rule.iter() {
        let val = g.eval(disc.edge_point(e, s))?;
        re.edge.eval_into(s, &mut leg);
        for (ci, l) in c.iter_mut().zip(&leg) {
            *ci += w * val * l;
        }
    }
    Ok(c)
}

/// `L^2(T)` projection of a vector field onto the gradient space.
pub fn project_rh<F>(disc: &Discretization, q: F, t: usize) -> Result<Vec<f64>, EvalError>
where
    F: Fn(Point) -> Result<[f64; 2], EvalError>,
{
    let vs = disc.gradient(t).vector_space();
    let mut c = vec![0.0; vs.dim()];
    for (xi, x, w) in disc.quadrature(t) {
        let val = q(x)?;
        for (cm, psi) in c.iter_mut().zip(vs.eval(xi)) {
            *cm += w * (val[0] * psi[0] + val[1] * psi[1]);
        }
    }
    Ok(c)
}

/// `Q_h u = {Q_0 u, Q_b u}`.
pub fn project_exact(disc: &Discretization, u: &ScalarField) -> Result<WeakFunction, EvalError> {
    let mesh = disc.mesh();
    let interiors = par::map_indexed(mesh.num_triangles(), |t| project_q0(disc, u, t));
    let edges = par::map_indexed(mesh.num_edges(), |e| project_qb(disc, u, e));
    let mut v = WeakFunction::zeros(disc);
    for (t, c) in interiors.into_iter().enumerate() {
        v.interior_mut(t).copy_from_slice(&c?);
    }
    for (e, c) in edges.into_iter().enumerate() {
        v.edge_mut(e).copy_from_slice(&c?);
    }
    Ok(v)
}
