mod support;

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::oracle::{self, LocalDofs};
use wg_core::assembly::{assemble, bilinear_form, load_functional};
use wg_core::mesh::{structured_unit_square, Mesh};
use wg_core::problem::{builtin, pde_residual_fd, BUILTIN_NAMES};
use wg_core::study::{solve_problem, RunOptions};
use wg_core::verify::{random_orientations, random_triangle};
use wg_core::weak::{project_qb, project_rh, DiscretizationOptions};
use wg_core::{Discretization, ProblemSpec, WeakFunction, WgSpace};

fn spaces() -> Vec<WgSpace> {
    let mut out = Vec::new();
    for j in 0..3 {
        out.push(WgSpace::full(j));
        out.push(WgSpace::rt(j));
    }
    out
}

#[test]
fn weak_gradient_matches_variational_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let corners = random_triangle(&mut rng);
        let orient = random_orientations(&mut rng);
        for space in spaces() {
            let (defect, gram) = oracle::weak_gradient_defect(corners, orient, space);
            assert!(gram < 1e-11, "{space}: gradient basis not orthonormal ({gram:e})");
            worst = worst.max(defect);
        }
    }
    assert!(worst <= 1e-10, "relative Frobenius defect {worst:e}");
}

#[test]
fn oracle_quadrature_is_sane() {
    // int_0^1 t^9 = 1/10 and the reference triangle moment int x^2 y^3 = 2! 3! / 7!
    let s: f64 = oracle::gauss01(5).iter().map(|(t, w)| w * t.powi(9)).sum();
    assert!((s - 0.1).abs() < 1e-15);
    let tri: f64 = oracle::triangle_points([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 6)
        .iter()
        .map(|(p, w)| w * p[0].powi(2) * p[1].powi(3))
        .sum();
    assert!((tri - 12.0 / 5040.0).abs() < 1e-16);
}

fn random_weak(disc: &Discretization, rng: &mut impl Rng) -> WeakFunction {
    let n = disc.dofs().total();
    WeakFunction::from_values(disc, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// `a(w, v)` from oracle weak gradients and oracle quadrature.
fn oracle_bilinear(disc: &Discretization, problem: &ProblemSpec, w: &WeakFunction, v: &WeakFunction) -> f64 {
    let mesh = disc.mesh();
    let space = disc.space();
    let rt = space.family() == wg_core::Family::Rt;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let map = *disc.element_map(t);
        let interior = |x: oracle::P| disc.interior_values(t, map.reference(x));
        let dofs = LocalDofs {
            corners: mesh.corners(t),
            orientations: mesh.orientations(t),
            interior_dim: space.interior_dofs(),
            edge_dim: space.edge_dofs(),
            interior: &interior,
        };
        let (basis, c, raw) = oracle::weak_gradient_columns(&dofs, space.j(), rt, 12);
        let gw: DVector<f64> = &raw * w.local(mesh, t);
        let gv: DVector<f64> = &raw * v.local(mesh, t);
        for (x, wt) in oracle::triangle_points(mesh.corners(t), 12) {
            let dw = oracle::eval_field(&basis, c, &gw, x);
            let dv = oracle::eval_field(&basis, c, &gv, x);
            let phi = interior(x);
            let w0: f64 = phi.iter().zip(w.interior(t)).map(|(a, b)| a * b).sum();
            let v0: f64 = phi.iter().zip(v.interior(t)).map(|(a, b)| a * b).sum();
            let a11 = problem.a11.eval(x).unwrap();
            let a12 = problem.a12.eval(x).unwrap();
            let a22 = problem.a22.eval(x).unwrap();
            let b = [problem.b1.eval(x).unwrap(), problem.b2.eval(x).unwrap()];
            let cc = problem.c.eval(x).unwrap();
            let adw = [a11 * dw[0] + a12 * dw[1], a12 * dw[0] + a22 * dw[1]];
            total += wt
                * (adw[0] * dv[0] + adw[1] * dv[1] - w0 * (b[0] * dv[0] + b[1] * dv[1]) + cc * w0 * v0);
        }
    }
    total
}

#[test]
fn assembled_matrix_matches_oracle_bilinear_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = Arc::new(structured_unit_square(3).unwrap());
    let problem = builtin("variable-coeff").unwrap();
    for space in [WgSpace::full(0), WgSpace::full(1), WgSpace::rt(0), WgSpace::rt(1)] {
        let disc = Discretization::new(mesh.clone(), space, Default::default()).unwrap();
        let system = assemble(&disc, &problem).unwrap();
        for _ in 0..3 {
            let w = random_weak(&disc, &mut rng);
            let v = random_weak(&disc, &mut rng);
            let kw = system.full.mul_vec(w.values());
            let from_matrix: f64 = kw.iter().zip(v.values()).map(|(a, b)| a * b).sum();
            let direct = bilinear_form(&disc, &problem, &w, &v).unwrap();
            let reference = oracle_bilinear(&disc, &problem, &w, &v);
            let scale = reference.abs().max(1.0);
            assert!((from_matrix - reference).abs() <= 1e-10 * scale, "{space}: {from_matrix} vs {reference}");
            assert!((direct - reference).abs() <= 1e-10 * scale, "{space}: {direct} vs {reference}");
        }
    }
}

#[test]
fn rh_projection_matches_oracle() {
    // (y^2, 0) lies in [P_2]^2, so the full j = 1 projection reproduces it
    // and the lower spaces are checked against a dense oracle projection.
    let mesh = Arc::new(structured_unit_square(2).unwrap());
    let q = |p: oracle::P| [p[1] * p[1], 0.0];
    for space in [WgSpace::full(0), WgSpace::full(1), WgSpace::rt(0), WgSpace::rt(1)] {
        let disc = Discretization::new(mesh.clone(), space, Default::default()).unwrap();
        let rt = space.family() == wg_core::Family::Rt;
        for t in 0..mesh.num_triangles() {
            let lib = project_rh(&disc, |p| Ok(q(p)), t).unwrap();
            let corners = mesh.corners(t);
            let c = [
                (corners[0][0] + corners[1][0] + corners[2][0]) / 3.0,
                (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0,
            ];
            let basis = oracle::gradient_space(space.j(), rt);
            let quad = oracle::triangle_points(corners, 10);
            let nv = basis.len();
            let mut m = nalgebra::DMatrix::<f64>::zeros(nv, nv);
            let mut r = DVector::<f64>::zeros(nv);
            for &(x, w) in &quad {
                let vals: Vec<_> = basis.iter().map(|b| b.eval(x, c)).collect();
                let qx = q(x);
                for a in 0..nv {
                    r[a] += w * (vals[a][0] * qx[0] + vals[a][1] * qx[1]);
                    for b in 0..nv {
                        m[(a, b)] += w * (vals[a][0] * vals[b][0] + vals[a][1] * vals[b][1]);
                    }
                }
            }
            let coeffs = m.lu().solve(&r).unwrap();
            let vs = disc.gradient(t).vector_space();
            let map = *disc.element_map(t);
            let mut err = 0.0;
            let mut norm = 0.0;
            for &(x, w) in &quad {
                let o = oracle::eval_field(&basis, c, &coeffs, x);
                let l = vs.combine(&lib, map.reference(x));
                err += w * ((o[0] - l[0]).powi(2) + (o[1] - l[1]).powi(2));
                norm += w * (o[0] * o[0] + o[1] * o[1]);
                if space == WgSpace::full(1) {
                    let exact = q(x);
                    assert!((l[0] - exact[0]).abs() < 1e-12 && l[1].abs() < 1e-12);
                }
            }
            assert!(err.sqrt() <= 1e-12 * norm.sqrt().max(1e-3), "{space} t={t}");
        }
    }
}

#[test]
fn boundary_projection_matches_legendre_oracle() {
    let mesh = Arc::new(structured_unit_square(4).unwrap());
    let g = wg_core::ScalarField::from_fn(|x, _| (std::f64::consts::PI * x).sin());
    for space in [WgSpace::full(0), WgSpace::full(2), WgSpace::rt(1)] {
        let disc = Discretization::new(mesh.clone(), space, DiscretizationOptions { quad_boost: 20 }).unwrap();
        let mut seen = 0;
        for e in 0..mesh.num_edges() {
            let [a, b] = mesh.edge_endpoints(e);
            if !(mesh.edges()[e].boundary && a[1] == 0.0 && b[1] == 0.0) {
                continue;
            }
            seen += 1;
            let lib = project_qb(&disc, &g, e).unwrap();
            for (k, &coef) in lib.iter().enumerate() {
                let reference: f64 = oracle::gauss01(24)
                    .iter()
                    .map(|&(t, w)| {
                        let x = a[0] + t * (b[0] - a[0]);
                        w * (std::f64::consts::PI * x).sin() * oracle::edge_basis(k, t)
                    })
                    .sum();
                assert!((coef - reference).abs() < 1e-13, "{space} edge {e} mode {k}");
            }
        }
        assert_eq!(seen, 4);
    }
}

#[test]
fn discrete_solution_is_galerkin_orthogonal() {
    let mesh = Arc::new(structured_unit_square(4).unwrap());
    for name in ["sinsin", "variable-coeff", "convection"] {
        let problem = builtin(name).unwrap();
        let solved = solve_problem(mesh.clone(), &problem, WgSpace::full(0), RunOptions::default()).unwrap();
        let disc = &solved.disc;
        let free = disc.dofs().free_dofs().to_vec();
        for &g in free.iter().step_by(5) {
            let mut v = WeakFunction::zeros(disc);
            v.values_mut()[g] = 1.0;
            let a = bilinear_form(disc, &problem, &solved.solution.u, &v).unwrap();
            let f = load_functional(disc, &problem.f, &v).unwrap();
            assert!((a - f).abs() < 1e-9 * (1.0 + f.abs()), "{name} dof {g}: {a} vs {f}");
        }
    }
}

#[test]
fn builtin_sources_satisfy_their_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in BUILTIN_NAMES {
        let problem = builtin(name).unwrap();
        let exact = problem.exact.as_ref().unwrap();
        for _ in 0..100 {
            let p = [rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)];
            let r = pde_residual_fd(&problem, p, 2e-4).unwrap();
            assert!(r.abs() < 1e-5, "{name} at {p:?}: residual {r:e}");
            // stated gradients against central differences
            let h = 1e-6;
            let u = |x: f64, y: f64| exact.u.eval([x, y]).unwrap();
            let fx = (u(p[0] + h, p[1]) - u(p[0] - h, p[1])) / (2.0 * h);
            let fy = (u(p[0], p[1] + h) - u(p[0], p[1] - h)) / (2.0 * h);
            let [gx, gy] = exact.gradient(p).unwrap();
            assert!((fx - gx).abs() < 1e-7 && (fy - gy).abs() < 1e-7, "{name} gradient at {p:?}");
        }
    }
}

#[test]
fn boundary_data_matches_exact_solution() {
    for name in BUILTIN_NAMES {
        let problem = builtin(name).unwrap();
        let exact = problem.exact.as_ref().unwrap();
        for s in [0.0, 0.3, 0.7, 1.0] {
            for p in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                assert!((problem.g.eval(p).unwrap() - exact.u.eval(p).unwrap()).abs() < 1e-15);
            }
        }
    }
}

fn shifted(mesh: &Mesh, by: [f64; 2]) -> Mesh {
    let v = mesh.vertices().iter().map(|p| [p[0] + by[0], p[1] + by[1]]).collect();
    Mesh::new(v, mesh.triangles().to_vec()).unwrap()
}

#[test]
fn element_matrices_are_translation_invariant() {
    let base = structured_unit_square(2).unwrap();
    let moved = shifted(&base, [3.5, -7.25]);
    let problem = ProblemSpec::poisson(wg_core::ScalarField::zero(), wg_core::ScalarField::zero());
    for space in [WgSpace::full(1), WgSpace::rt(1)] {
        let a = Discretization::new(Arc::new(base.clone()), space, Default::default()).unwrap();
        let b = Discretization::new(Arc::new(moved.clone()), space, Default::default()).unwrap();
        let ka = assemble(&a, &problem).unwrap().full.to_dense();
        let kb = assemble(&b, &problem).unwrap().full.to_dense();
        assert!((ka - kb).amax() < 1e-11);
    }
}
