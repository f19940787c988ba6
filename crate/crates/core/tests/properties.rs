use std::sync::Arc;

use proptest::prelude::*;

use wg_core::assembly::CscMatrix;
use wg_core::dofs::build_dof_map;
use wg_core::expr::{parse_expr, BinOp, Expr, Func};
use wg_core::mesh::{structured_unit_square, Mesh};
use wg_core::postprocess::{estimate_rates, flux_report, Rate};
use wg_core::study::{solve_problem, RunOptions};
use wg_core::verify::kernel_on;
use wg_core::weak::{project_exact, weak_gradient, ReferenceElement};
use wg_core::{Discretization, ProblemSpec, ScalarField, WgSpace};

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..1e6).prop_map(Expr::Num),
        Just(Expr::X),
        Just(Expr::Y),
        Just(Expr::Pi),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        let func = prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp), Just(Func::Sqrt)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn well_shaped() -> impl Strategy<Value = [[f64; 2]; 3]> {
    (-5.0f64..5.0, -5.0f64..5.0, 0.05f64..3.0, 0.0f64..std::f64::consts::TAU, 0.3f64..1.0, 0.4f64..2.6)
        .prop_map(|(x, y, s, rot, r, ang)| {
            let (c, d) = (rot.cos(), rot.sin());
            let p1 = [x + s * c, y + s * d];
            let (c2, d2) = ((rot + ang).cos(), (rot + ang).sin());
            let p2 = [x + s * r * c2, y + s * r * d2];
            [[x, y], p1, p2]
        })
}

fn min_angle(p: [[f64; 2]; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let a = p[i];
            let b = p[(i + 1) % 3];
            let c = p[(i + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            ((u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]))).acos()
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back(e in expr_tree()) {
        let printed = e.to_string();
        prop_assert_eq!(parse_expr(&printed).unwrap(), e);
    }

    #[test]
    fn rates_of_pure_power_laws_are_recovered(c in 0.01f64..100.0, p in 0.5f64..5.0, levels in 2usize..6) {
        let h: Vec<f64> = (0..levels).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
        prop_assume!(e.iter().all(|&v| v > 1e-9));
        let r = estimate_rates(&h, &e).unwrap();
        for step in &r.per_step {
            prop_assert!((step.value().unwrap() - p).abs() < 1e-9);
        }
        prop_assert!((r.least_squares.unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn least_squares_rate_lies_within_step_rates(e in prop::collection::vec(1e-6f64..1.0, 3..7)) {
        let h: Vec<f64> = (0..e.len()).map(|k| 1.0 / (3.0 + 2.0 * k as f64)).collect();
        let r = estimate_rates(&h, &e).unwrap();
        let steps: Vec<f64> = r.per_step.iter().filter_map(|s| match s {
            Rate::Observed(v) => Some(*v),
            Rate::Exact => None,
        }).collect();
        let lo = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = steps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ls = r.least_squares.unwrap();
        prop_assert!(ls >= lo - 1e-9 && ls <= hi + 1e-9, "{} not in [{}, {}]", ls, lo, hi);
    }

    #[test]
    fn weak_gradient_kernel_is_the_constants(p in well_shaped(), j in 0usize..3, rt in any::<bool>(),
                                             o in prop::array::uniform3(any::<bool>())) {
        prop_assume!(min_angle(p) > 0.3);
        let space = if rt { WgSpace::rt(j) } else { WgSpace::full(j) };
        let orient = o.map(|b| if b { 1 } else { -1 });
        let ccw = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]) > 0.0;
        let corners = if ccw { p } else { [p[0], p[2], p[1]] };
        let report = kernel_on(corners, orient, space).unwrap();
        prop_assert!(report.is_constants_only(1e-10), "{:?}", report);
    }

    #[test]
    fn weak_gradient_of_projected_linear_is_exact(p in well_shaped(), j in 0usize..3, rt in any::<bool>(),
                                                  a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        prop_assume!(min_angle(p) > 0.3);
        let ccw = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]) > 0.0;
        let corners = if ccw { p } else { [p[0], p[2], p[1]] };
        let mesh = Arc::new(Mesh::new(corners.to_vec(), vec![[0, 1, 2]]).unwrap());
        let space = if rt { WgSpace::rt(j) } else { WgSpace::full(j) };
        let disc = Discretization::new(mesh, space, Default::default()).unwrap();
        let u = ScalarField::from_fn(move |x, y| a * x + b * y + c);
        let qh = project_exact(&disc, &u).unwrap();
        let g = weak_gradient(&disc, &qh, 0);
        let vs = disc.gradient(0).vector_space();
        for xi in [[0.2, 0.3], [1.0 / 3.0, 1.0 / 3.0], [0.7, 0.1]] {
            let v = vs.combine(g.as_slice(), xi);
            prop_assert!((v[0] - a).abs() < 1e-9 && (v[1] - b).abs() < 1e-9, "{:?} vs ({}, {})", v, a, b);
        }
    }

    #[test]
    fn refinement_preserves_mesh_invariants(n in 1usize..5, jitter in 0.0f64..0.2) {
        let base = structured_unit_square(n).unwrap();
        // move interior vertices to get a non-structured mesh
        let v: Vec<[f64; 2]> = base.vertices().iter().enumerate().map(|(i, p)| {
            let interior = p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0;
            let s = if interior { jitter / n as f64 * ((i as f64 * 1.7).sin()) } else { 0.0 };
            [p[0] + s, p[1] - s]
        }).collect();
        let mesh = Mesh::new(v, base.triangles().to_vec()).unwrap();
        for m in [&mesh, &mesh.uniform_refine()] {
            prop_assert!((m.total_area() - 1.0).abs() < 1e-12);
            // Euler characteristic of a disc
            prop_assert_eq!(m.num_vertices() + m.num_triangles(), m.num_edges() + 1);
            prop_assert_eq!(m.boundary_loops(), 1);
            for e in m.edges() {
                prop_assert_eq!(e.neighbours().len(), if e.boundary { 1 } else { 2 });
            }
            for t in 0..m.num_triangles() {
                prop_assert!(m.geometry(t).area > 0.0);
            }
        }
        let fine = mesh.uniform_refine();
        prop_assert_eq!(fine.num_triangles(), 4 * mesh.num_triangles());
        prop_assert_eq!(fine.num_boundary_edges(), 2 * mesh.num_boundary_edges());
        prop_assert!((fine.h_max() - 0.5 * mesh.h_max()).abs() < 1e-12);
    }

    #[test]
    fn dof_map_partitions_the_unknowns(n in 1usize..6, j in 0usize..3, rt in any::<bool>()) {
        let mesh = structured_unit_square(n).unwrap();
        let space = if rt { WgSpace::rt(j) } else { WgSpace::full(j) };
        let dofs = build_dof_map(&mesh, &space);
        prop_assert_eq!(dofs.total(), mesh.num_triangles() * space.interior_dofs() + mesh.num_edges() * space.edge_dofs());
        prop_assert_eq!(dofs.boundary.len(), mesh.num_boundary_edges() * space.edge_dofs());
        prop_assert_eq!(dofs.num_free() + dofs.boundary.len(), dofs.total());
        for t in 0..mesh.num_triangles() {
            let l2g = dofs.local_to_global(&mesh, t);
            prop_assert_eq!(l2g.len(), space.local_dofs());
            let mut sorted = l2g.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), l2g.len());
        }
        for (k, &g) in dofs.free_dofs().iter().enumerate() {
            prop_assert_eq!(dofs.free_index(g), Some(k));
        }
    }

    #[test]
    fn triplet_merge_matches_dense_sum(entries in prop::collection::vec((0usize..6, 0usize..5, -1.0f64..1.0), 0..40)) {
        let m = CscMatrix::from_triplets(6, 5, entries.clone());
        let mut dense = nalgebra::DMatrix::<f64>::zeros(6, 5);
        for &(r, c, v) in &entries {
            dense[(r, c)] += v;
        }
        prop_assert!((m.to_dense() - dense).amax() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_constant_coefficient_problems_conserve_mass(
        a11 in 0.5f64..3.0, a22 in 0.5f64..3.0, a12f in -0.9f64..0.9,
        b1 in -2.0f64..2.0, b2 in -2.0f64..2.0, c in 0.0f64..2.0,
        f0 in -5.0f64..5.0, fx in -5.0f64..5.0, j in 0usize..2, rt in any::<bool>(),
    ) {
        let a12 = a12f * (a11 * a22).sqrt();
        let problem = ProblemSpec {
            a11: ScalarField::constant(a11),
            a12: ScalarField::constant(a12),
            a22: ScalarField::constant(a22),
            b1: ScalarField::constant(b1),
            b2: ScalarField::constant(b2),
            c: ScalarField::constant(c),
            ..ProblemSpec::poisson(
                ScalarField::from_fn(move |x, y| f0 + fx * x * y),
                ScalarField::from_fn(|x, y| x - y * y),
            )
        };
        let space = if rt { WgSpace::rt(j) } else { WgSpace::full(j) };
        let mesh = Arc::new(structured_unit_square(3).unwrap());
        let solved = solve_problem(mesh, &problem, space, RunOptions::default()).unwrap();
        let report = flux_report(&solved.disc, &problem, &solved.solution.u).unwrap();
        prop_assert!(report.passed(), "residual {:e} jump {:e}", report.max_residual, report.max_jump);
    }
}

#[test]
fn reference_element_rejects_unsupported_degrees() {
    assert!(WgSpace::new(7, wg_core::Family::Full).is_err());
    assert!(ReferenceElement::new(WgSpace::full(6), 3).is_ok());
}
