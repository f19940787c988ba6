//! Global assembly of the weak Galerkin form
//!
//! ```text
//! a(w, v) = (a grad_d w, grad_d v) - (b w_0, grad_d v) + (c w_0, v_0)
//! ```
//!
//! with load `(f, v_0)`, Dirichlet data eliminated through `u_b = Q_b g`.

use nalgebra::{DMatrix, DVector};

use crate::dofs::DofMap;
use crate::error::{Result, WgError};
use crate::field::ScalarField;
use crate::par;
use crate::problem::ProblemSpec;
use crate::weak::{project_qb, Discretization, WeakFunction};

/// Compressed sparse column matrix with sorted, unique row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Sum duplicate entries in a fixed order: entries are stably sorted by
    /// `(col, row)` and equal positions are added in input order, so the
    /// result depends only on the order of `entries`.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; ncols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(row, value)` pairs of column `c`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let s = self.col_ptr[c];
        let rows = &self.row_idx[s..self.col_ptr[c + 1]];
        rows.binary_search(&r).map(|k| self.values[s + k]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (r, v) in self.column(c) {
                    y[r] += v * xc;
                }
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.ncols {
            for (r, v) in self.column(c) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        let triplets: Vec<_> = (0..self.ncols)
            .flat_map(|c| self.column(c).map(move |(r, v)| faer::sparse::Triplet::new(r, c, v)))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| WgError::Solver {
                message: format!("could not build sparse matrix: {e:?}"),
                condition_estimate: None,
            })
    }
}

/// Local matrix (rows = test DOFs, columns = trial DOFs, both in
/// [`crate::weak::LocalWeakGradient`] order) and interior load of one element.
#[derive(Debug, Clone)]
pub struct ElementSystem {
    pub matrix: DMatrix<f64>,
    pub load: DVector<f64>,
}

pub fn element_system(disc: &Discretization, problem: &ProblemSpec, t: usize) -> Result<ElementSystem> {
    let space = disc.space();
    let grad = disc.gradient(t);
    let vs = grad.vector_space();
    let nv = vs.dim();
    let nint = space.interior_dofs();
    let convective = !problem.is_symmetric();
    let reactive = !problem.c.is_zero();

    let mut ma = DMatrix::<f64>::zeros(nv, nv);
    let mut bb = DMatrix::<f64>::zeros(nv, nint);
    let mut mc = DMatrix::<f64>::zeros(nint, nint);
    let mut load = DVector::<f64>::zeros(nint);
    for (xi, x, w) in disc.quadrature(t) {
        let a = problem.diffusion(x)?;
        let psi = vs.eval(xi);
        let phi = disc.interior_values(t, xi);
        let a_psi: Vec<[f64; 2]> = psi
            .iter()
            .map(|q| [a[0][0] * q[0] + a[0][1] * q[1], a[1][0] * q[0] + a[1][1] * q[1]])
            .collect();
        for m in 0..nv {
            for n in 0..nv {
                ma[(m, n)] += w * (psi[m][0] * a_psi[n][0] + psi[m][1] * a_psi[n][1]);
            }
        }
        if convective {
            let b = problem.convection(x)?;
            for m in 0..nv {
                let bq = b[0] * psi[m][0] + b[1] * psi[m][1];
                for i in 0..nint {
                    bb[(m, i)] += w * bq * phi[i];
                }
            }
        }
        if reactive {
            let c = problem.c.eval(x)?;
            for i in 0..nint {
                for k in 0..nint {
                    mc[(i, k)] += w * c * phi[i] * phi[k];
                }
            }
        }
        let f = problem.f.eval(x)?;
        for i in 0..nint {
            load[i] += w * f * phi[i];
        }
    }

    let g = grad.matrix();
    let mut matrix = g.transpose() * &ma * g;
    if convective {
        let coupling = g.transpose() * &bb;
        let mut block = matrix.columns_mut(0, nint);
        block -= coupling;
    }
    if reactive {
        let mut block = matrix.view_mut((0, 0), (nint, nint));
        block += mc;
    }
    Ok(ElementSystem { matrix, load })
}

/// Test hooks for assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    /// Scale one element's local matrix: a deliberately wrong system used as
    /// a negative control for the conservation check.
    pub perturb_element: Option<(usize, f64)>,
}

/// Linear system over the free DOFs together with everything needed to
/// rebuild the full weak function.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub dofs: DofMap,
    /// Matrix over all DOFs, boundary included.
    pub full: CscMatrix,
    /// Load over all DOFs (zero on edges).
    pub load: Vec<f64>,
    /// Free-free block.
    pub matrix: CscMatrix,
    /// Load minus the Dirichlet lift contribution.
    pub rhs: Vec<f64>,
    /// Boundary DOF values, in `dofs.boundary` order.
    pub lift: Vec<f64>,
    /// Set when the convection term vanishes.
    pub symmetric: bool,
}

impl AssembledSystem {
    /// Global vector with the lift on boundary DOFs and `free` elsewhere.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs.total()];
        for (&g, &v) in self.dofs.free_dofs().iter().zip(free) {
            out[g] = v;
        }
        for (&g, &v) in self.dofs.boundary.iter().zip(&self.lift) {
            out[g] = v;
        }
        out
    }

    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.dofs.free_dofs().iter().map(|&g| global[g]).collect()
    }
}

/// Boundary DOF values `Q_b g`, in `dofs.boundary` order.
pub fn apply_dirichlet(disc: &Discretization, g: &ScalarField) -> Result<Vec<f64>> {
    let mesh = disc.mesh();
    let boundary_edges: Vec<usize> = (0..mesh.num_edges()).filter(|&e| mesh.edges()[e].boundary).collect();
    let blocks = par::map_indexed(boundary_edges.len(), |k| project_qb(disc, g, boundary_edges[k]));
    let mut lift = Vec::with_capacity(disc.dofs().boundary.len());
    for b in blocks {
        lift.extend(b?);
    }
    debug_assert_eq!(lift.len(), disc.dofs().boundary.len());
    Ok(lift)
}

pub fn assemble(disc: &Discretization, problem: &ProblemSpec) -> Result<AssembledSystem> {
    assemble_with(disc, problem, AssemblyOptions::default())
}

pub fn assemble_with(
    disc: &Discretization,
    problem: &ProblemSpec,
    options: AssemblyOptions,
) -> Result<AssembledSystem> {
    let mesh = disc.mesh();
    let dofs = disc.dofs();
    let locals = par::map_indexed(mesh.num_triangles(), |t| {
        let mut sys = element_system(disc, problem, t)?;
        if let Some((pt, s)) = options.perturb_element {
            if pt == t {
                sys.matrix *= s;
            }
        }
        Ok::<_, WgError>((dofs.local_to_global(mesh, t), sys))
    });

    let n = dofs.total();
    let nloc = disc.space().local_dofs();
    let mut triplets = Vec::with_capacity(mesh.num_triangles() * nloc * nloc);
    let mut load = vec![0.0; n];
    for local in locals {
        let (idx, sys): (Vec<usize>, ElementSystem) = local?;
        for (c, &gc) in idx.iter().enumerate() {
            for (r, &gr) in idx.iter().enumerate() {
                triplets.push((gr, gc, sys.matrix[(r, c)]));
            }
        }
        for (i, &gi) in idx.iter().take(sys.load.len()).enumerate() {
            load[gi] += sys.load[i];
        }
    }
    let full = CscMatrix::from_triplets(n, n, triplets);

    let lift = apply_dirichlet(disc, &problem.g)?;
    let mut lift_global = vec![0.0; n];
    for (&g, &v) in dofs.boundary.iter().zip(&lift) {
        lift_global[g] = v;
    }
    let mut rhs: Vec<f64> = dofs.free_dofs().iter().map(|&g| load[g]).collect();
    let mut free_triplets = Vec::with_capacity(full.nnz());
    for gc in 0..n {
        match dofs.free_index(gc) {
            Some(fc) => {
                for (gr, v) in full.column(gc) {
                    if let Some(fr) = dofs.free_index(gr) {
                        free_triplets.push((fr, fc, v));
                    }
                }
            }
            None => {
                let lv = lift_global[gc];
                if lv != 0.0 {
                    for (gr, v) in full.column(gc) {
                        if let Some(fr) = dofs.free_index(gr) {
                            rhs[fr] -= v * lv;
                        }
                    }
                }
            }
        }
    }
    let nf = dofs.num_free();
    Ok(AssembledSystem {
        dofs: dofs.clone(),
        matrix: CscMatrix::from_triplets(nf, nf, free_triplets),
        full,
        load,
        rhs,
        lift,
        symmetric: problem.is_symmetric(),
    })
}

/// Direct per-element quadrature of `a(w, v)`, bypassing the element
/// matrices: weak gradients are evaluated as fields at quadrature points.
pub fn bilinear_form(
    disc: &Discretization,
    problem: &ProblemSpec,
    w: &WeakFunction,
    v: &WeakFunction,
) -> Result<f64> {
    let mesh = disc.mesh();
    let parts = par::map_indexed(mesh.num_triangles(), |t| -> Result<f64> {
        let grad = disc.gradient(t);
        let gw = grad.apply(&w.local(mesh, t));
        let gv = grad.apply(&v.local(mesh, t));
        let vs = grad.vector_space();
        let mut sum = 0.0;
        for (xi, x, wt) in disc.quadrature(t) {
            let a = problem.diffusion(x)?;
            let b = problem.convection(x)?;
            let c = problem.c.eval(x)?;
            let dw = vs.combine(gw.as_slice(), xi);
            let dv = vs.combine(gv.as_slice(), xi);
            let w0 = disc.interior_value(t, w.interior(t), xi);
            let v0 = disc.interior_value(t, v.interior(t), xi);
            let adw = [a[0][0] * dw[0] + a[0][1] * dw[1], a[1][0] * dw[0] + a[1][1] * dw[1]];
            sum += wt
                * (adw[0] * dv[0] + adw[1] * dv[1] - w0 * (b[0] * dv[0] + b[1] * dv[1]) + c * w0 * v0);
        }
        Ok(sum)
    });
    parts.into_iter().sum()
}

/// `(f, v_0)` by per-element quadrature.
pub fn load_functional(disc: &Discretization, f: &ScalarField, v: &WeakFunction) -> Result<f64> {
    let mut sum = 0.0;
    for t in 0..disc.mesh().num_triangles() {
        for (xi, x, w) in disc.quadrature(t) {
            sum += w * f.eval(x)? * disc.interior_value(t, v.interior(t), xi);
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    /// Sparse LU, or Cholesky when the system is symmetric.
    Direct,
    /// Jacobi-preconditioned BiCGSTAB.
    Iterative { max_iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Required `||A x - F|| / ||F||`.
    pub rel_residual: f64,
}

pub const DEFAULT_REL_RESIDUAL: f64 = 1e-10;

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kind: SolverKind::Direct,
            rel_residual: DEFAULT_REL_RESIDUAL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: WeakFunction,
    pub residual: f64,
    pub iterations: Option<usize>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `||A x - F|| / ||F||`; falls back to
/// `||A||_max ||x||` as the scale when the load vanishes.
pub fn relative_residual(a: &CscMatrix, x: &[f64], f: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(f).map(|(p, q)| p - q).collect();
    let scale = match norm(f) {
        s if s > 0.0 => s,
        _ => a.max_abs() * norm(x),
    };
    if scale > 0.0 {
        norm(&r) / scale
    } else {
        norm(&r)
    }
}

/// Dense 2-norm condition number for small systems, `None` otherwise.
pub fn condition_estimate(a: &CscMatrix) -> Option<f64> {
    if a.nrows() == 0 || a.nrows() > 1500 {
        return None;
    }
    let sv = a.to_dense().singular_values();
    let max = sv.max();
    let min = sv.min();
    Some(if min > 0.0 { max / min } else { f64::INFINITY })
}

fn solver_error(a: &CscMatrix, what: String) -> WgError {
    WgError::Solver {
        message: format!(
            "{what}; with convection or reaction active the discrete problem is only \
             guaranteed to be uniquely solvable for sufficiently small h"
        ),
        condition_estimate: condition_estimate(a),
    }
}

/// Solve the free system; returns the free DOF values and the relative
/// residual.
pub fn solve_linear(
    a: &CscMatrix,
    rhs: &[f64],
    symmetric: bool,
    options: SolverOptions,
) -> Result<(Vec<f64>, f64, Option<usize>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), 0.0, None));
    }
    let (x, iterations) = match options.kind {
        SolverKind::Direct => (direct_solve(a, rhs, symmetric)?, None),
        SolverKind::Iterative { max_iterations } => {
            let (x, it) = bicgstab(a, rhs, options.rel_residual, max_iterations);
            (x, Some(it))
        }
    };
    let residual = relative_residual(a, &x, rhs);
    if !(residual <= options.rel_residual) {
        return Err(solver_error(
            a,
            format!(
                "relative residual {residual:.3e} exceeds tolerance {:.1e}",
                options.rel_residual
            ),
        ));
    }
    Ok((x, residual, iterations))
}

fn direct_solve(a: &CscMatrix, rhs: &[f64], symmetric: bool) -> Result<Vec<f64>> {
    use faer::prelude::Solve;

    // factorizations run sequentially so results never depend on the pool
    faer::set_global_parallelism(faer::Par::Seq);
    let m = a.to_faer()?;
    let mut b = faer::Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let mut solved = false;
    if symmetric {
        if let Ok(llt) = m.sp_cholesky(faer::Side::Lower) {
            llt.solve_in_place(b.as_mut());
            solved = true;
        }
    }
    if !solved {
        let lu = m
            .sp_lu()
            .map_err(|e| solver_error(a, format!("sparse LU failed: {e:?}")))?;
        lu.solve_in_place(b.as_mut());
    }
    let x: Vec<f64> = (0..rhs.len()).map(|i| b[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(solver_error(a, "factorization produced non-finite values (singular matrix)".into()));
    }
    Ok(x)
}

fn bicgstab(a: &CscMatrix, b: &[f64], tol: f64, max_iterations: usize) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut diag = vec![1.0; n];
    for (c, d) in diag.iter_mut().enumerate() {
        let v = a.get(c, c);
        if v != 0.0 {
            *d = 1.0 / v;
        }
    }
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x * d).collect() };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let bnorm = norm(b).max(f64::MIN_POSITIVE);

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 1..=max_iterations {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            return (x, it);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.mul_vec(&p_hat);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return (x, it);
        }
        let s_hat = precond(&s);
        let t = a.mul_vec(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) / bnorm <= tol {
            return (x, it);
        }
    }
    (x, max_iterations)
}

/// Solve an assembled system and rebuild the full weak function.
pub fn solve(disc: &Discretization, system: &AssembledSystem, options: SolverOptions) -> Result<Solution> {
    let (x, residual, iterations) = solve_linear(&system.matrix, &system.rhs, system.symmetric, options)?;
    Ok(Solution {
        u: WeakFunction::from_values(disc, system.expand(&x))?,
        residual,
        iterations,
    })
}
