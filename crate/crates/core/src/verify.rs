//! Self-checks of the method's structural properties, runnable from the CLI.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::AssemblyOptions;
use crate::basis::Family;
use crate::error::Result;
use crate::expr::{parse_expr, ParseError};
use crate::field::ScalarField;
use crate::mesh::{structured_unit_square, triangle_geometry, Point};
use crate::postprocess::FLUX_TOLERANCE;
use crate::problem::{builtin, ProblemSpec};
use crate::quadrature::{edge_rule, reference_monomial_integral, triangle_rule};
use crate::space::WgSpace;
use crate::study::{solve_problem, RunOptions};
use crate::weak::{
    project_exact, project_rh, weak_gradient_kernel, Discretization, DiscretizationOptions, KernelReport,
    LocalWeakGradient, ReferenceElement,
};

/// Quadrature boost used when comparing against transcendental fields.
pub const COMMUTATION_QUAD_BOOST: usize = 12;
pub const COMMUTATION_TOLERANCE: f64 = 1e-10;

/// Vertices in `[-1, 1]^2` with every angle at least 20 degrees.
pub fn random_triangle(rng: &mut impl Rng) -> [Point; 3] {
    loop {
        let mut p = [[0.0; 2]; 3];
        for v in &mut p {
            *v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        }
        let geo = triangle_geometry(p);
        let min_angle = (0..3)
            .map(|k| {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min);
        if geo.area > 0.05 && min_angle >= 20f64.to_radians() {
            // counter-clockwise
            let d = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
            if d < 0.0 {
                p.swap(1, 2);
            }
            return p;
        }
    }
}

pub fn random_orientations(rng: &mut impl Rng) -> [i8; 3] {
    [0, 1, 2].map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
}

/// Kernel of the weak gradient on a standalone triangle.
pub fn kernel_on(corners: [Point; 3], orientations: [i8; 3], space: WgSpace) -> Result<KernelReport> {
    let re = ReferenceElement::new(space, 3)?;
    let g = LocalWeakGradient::build(0, corners, orientations, &re)?;
    Ok(weak_gradient_kernel(&g))
}

/// A scalar field with its gradient.
#[derive(Clone)]
pub struct TestField {
    pub label: String,
    pub u: ScalarField,
    pub ux: ScalarField,
    pub uy: ScalarField,
}

/// Random polynomial of total degree at most `degree`.
pub fn random_polynomial(rng: &mut impl Rng, degree: usize) -> TestField {
    let mut terms = Vec::new();
    for d in 0..=degree as i32 {
        for q in 0..=d {
            terms.push((rng.gen_range(-1.0..1.0), d - q, q));
        }
    }
    let terms = Arc::new(terms);
    let (t0, t1, t2) = (terms.clone(), terms.clone(), terms);
    TestField {
        label: format!("polynomial(degree {degree})"),
        u: ScalarField::from_fn(move |x, y| t0.iter().map(|&(c, p, q)| c * x.powi(p) * y.powi(q)).sum()),
        ux: ScalarField::from_fn(move |x, y| {
            t1.iter()
                .filter(|t| t.1 > 0)
                .map(|&(c, p, q)| c * p as f64 * x.powi(p - 1) * y.powi(q))
                .sum()
        }),
        uy: ScalarField::from_fn(move |x, y| {
            t2.iter()
                .filter(|t| t.2 > 0)
                .map(|&(c, p, q)| c * q as f64 * x.powi(p) * y.powi(q - 1))
                .sum()
        }),
    }
}

/// `sin(a x + b y + c) exp(d x)` with random parameters.
pub fn random_smooth_field(rng: &mut impl Rng) -> TestField {
    let a = rng.gen_range(-3.0..3.0);
    let b = rng.gen_range(-3.0..3.0);
    let c = rng.gen_range(0.0..std::f64::consts::TAU);
    let d = rng.gen_range(-1.0..1.0);
    TestField {
        label: format!("sin({a:.3}x + {b:.3}y + {c:.3}) exp({d:.3}x)"),
        u: ScalarField::from_fn(move |x, y| (a * x + b * y + c).sin() * (d * x).exp()),
        ux: ScalarField::from_fn(move |x, y| {
            (a * (a * x + b * y + c).cos() + d * (a * x + b * y + c).sin()) * (d * x).exp()
        }),
        uy: ScalarField::from_fn(move |x, y| b * (a * x + b * y + c).cos() * (d * x).exp()),
    }
}

/// Worst elementwise `||grad_d(Q_h u) - R_h(grad u)|| / (1 + ||grad u||)`.
pub fn commutation_defect(disc: &Discretization, field: &TestField) -> Result<f64> {
    let qh = project_exact(disc, &field.u)?;
    let mut worst: f64 = 0.0;
    for t in 0..disc.mesh().num_triangles() {
        let gd = disc.gradient(t).apply(&qh.local(disc.mesh(), t));
        let rh = project_rh(disc, |x| Ok([field.ux.eval(x)?, field.uy.eval(x)?]), t)?;
        // orthonormal basis: coefficient distance is the L2(T) distance
        let diff = gd.iter().zip(&rh).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mut grad_norm = 0.0;
        for (_, x, w) in disc.quadrature(t) {
            grad_norm += w * (field.ux.eval(x)?.powi(2) + field.uy.eval(x)?.powi(2));
        }
        worst = worst.max(diff / (1.0 + grad_norm.sqrt()));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks never fail the suite.
    pub hard: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub kernel_samples: usize,
    pub field_samples: usize,
    /// Scale one element matrix of the conservation problems; the
    /// conservation check must then fail.
    pub inject_bug: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 2024,
            kernel_samples: 50,
            field_samples: 10,
            inject_bug: false,
        }
    }
}

fn kernel_suite(rng: &mut ChaCha8Rng, options: &VerifyOptions, family: Family) -> Result<Check> {
    let mut dims = Vec::new();
    let mut worst_alignment: f64 = 0.0;
    let mut worst_gap: f64 = f64::INFINITY;
    let mut ok = true;
    for j in 0..=2 {
        let space = WgSpace::new(j, family)?;
        for _ in 0..options.kernel_samples {
            let k = kernel_on(random_triangle(rng), random_orientations(rng), space)?;
            ok &= k.is_constants_only(1e-9);
            worst_alignment = worst_alignment.max(k.constant_residual);
            worst_gap = worst_gap.min(k.min_nonkernel_ratio);
            dims.push(k.dimension);
        }
    }
    let hard = family == Family::Full;
    Ok(Check {
        name: format!("kernel-{}", family.name()),
        passed: ok,
        hard,
        detail: json!({
            "kernel_dimensions": dims,
            "worst_constant_residual": worst_alignment,
            "smallest_nonkernel_ratio": worst_gap,
        }),
    })
}

fn commutation_suite(rng: &mut ChaCha8Rng, options: &VerifyOptions, family: Family) -> Result<Check> {
    let mesh = Arc::new(structured_unit_square(8)?);
    let mut worst: f64 = 0.0;
    for j in 0..=1 {
        let space = WgSpace::new(j, family)?;
        let disc = Discretization::new(
            mesh.clone(),
            space,
            DiscretizationOptions {
                quad_boost: COMMUTATION_QUAD_BOOST,
            },
        )?;
        for _ in 0..options.field_samples {
            worst = worst.max(commutation_defect(&disc, &random_polynomial(rng, j + 1))?);
            worst = worst.max(commutation_defect(&disc, &random_smooth_field(rng))?);
        }
    }
    Ok(Check {
        name: format!("commutation-{}", family.name()),
        passed: worst <= COMMUTATION_TOLERANCE,
        hard: family == Family::Full,
        detail: json!({ "worst_scaled_defect": worst, "tolerance": COMMUTATION_TOLERANCE }),
    })
}

fn conservation_suite(options: &VerifyOptions) -> Result<Vec<Check>> {
    let cases: [(&str, WgSpace, usize); 4] = [
        ("sinsin", WgSpace::full(0), 8),
        ("convection", WgSpace::full(1), 4),
        ("variable-coeff", WgSpace::full(0), 8),
        ("sinsin", WgSpace::rt(1), 4),
    ];
    let perturbed = AssemblyOptions {
        perturb_element: Some((0, 1.5)),
    };
    let mut residuals = Vec::new();
    let mut jumps = Vec::new();
    let mut control = Vec::new();
    for (name, space, n) in cases {
        let problem: ProblemSpec = builtin(name).expect("builtin exists");
        let mesh = Arc::new(structured_unit_square(n)?);
        let run = |assembly| {
            solve_problem(mesh.clone(), &problem, space, RunOptions { assembly, ..Default::default() })
                .and_then(|s| s.flux(&problem))
        };
        let honest = run(if options.inject_bug { perturbed } else { AssemblyOptions::default() })?;
        let broken = run(perturbed)?;
        residuals.push(json!({ "problem": name, "space": space.to_string(), "max": honest.max_residual }));
        jumps.push(json!({ "problem": name, "space": space.to_string(), "max": honest.max_jump }));
        control.push((honest, broken));
    }
    let all = |f: &dyn Fn(&(crate::postprocess::FluxReport, crate::postprocess::FluxReport)) -> bool| {
        control.iter().all(f)
    };
    Ok(vec![
        Check {
            name: "conservation".into(),
            passed: all(&|c| c.0.conservation_ok()),
            hard: true,
            detail: json!({ "tolerance": FLUX_TOLERANCE, "cases": residuals }),
        },
        Check {
            name: "flux-continuity".into(),
            passed: all(&|c| c.0.continuity_ok()),
            hard: true,
            detail: json!({ "tolerance": FLUX_TOLERANCE, "cases": jumps }),
        },
        Check {
            name: "conservation-negative-control".into(),
            passed: all(&|c| !c.1.conservation_ok()),
            hard: true,
            detail: json!({
                "perturbed_max_residuals": control.iter().map(|c| c.1.max_residual).collect::<Vec<_>>()
            }),
        },
    ])
}

fn quadrature_suite() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for k in [0, 1, 2, 5, 8, 13, 20] {
        let rule = triangle_rule(k)?;
        for p in 0..=k as u32 {
            for q in 0..=(k as u32 - p) {
                let v: f64 = rule.iter().map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32)).sum();
                let exact = reference_monomial_integral(p, q);
                worst = worst.max(((v - exact) / exact).abs());
            }
        }
        let rule = edge_rule(k)?;
        for p in 0..=k as i32 {
            let v: f64 = rule.iter().map(|(t, w)| w * t.powi(p)).sum();
            worst = worst.max((v * (p + 1) as f64 - 1.0).abs());
        }
    }
    Ok(Check {
        name: "quadrature".into(),
        passed: worst <= 1e-12,
        hard: true,
        detail: json!({ "worst_relative_error": worst }),
    })
}

/// Expressions used by the parser round-trip check.
pub const PARSER_CORPUS: [&str; 12] = [
    "1",
    "x + y",
    "2^3^2",
    "-x^2",
    "sin(pi*x)*sin(pi*y)",
    "(1 + x^2) * exp(-y)",
    "sqrt(1 + x*x + y*y)",
    "x - y - 1",
    "x / y / 2",
    "--x",
    "cos(2*pi*x) + 1e-3*y",
    "((x))",
];

fn parser_suite() -> Check {
    let mut failures: Vec<String> = Vec::new();
    for s in PARSER_CORPUS {
        match parse_expr(s) {
            Ok(e) => match parse_expr(&e.to_string()) {
                Ok(again) if again == e => {}
                _ => failures.push(format!("round trip: {s}")),
            },
            Err(err) => failures.push(format!("{s}: {err}")),
        }
    }
    let value = |s: &str| parse_expr(s).ok().and_then(|e| e.eval(3.0, 1.0).ok());
    for (s, v) in [("2^3^2", 512.0), ("-2^2", -4.0), ("1 + 2*3", 7.0), ("x - y", 2.0), ("8/4/2", 1.0)] {
        if value(s) != Some(v) {
            failures.push(format!("precedence: {s}"));
        }
    }
    for (s, pos) in [("x*y +", 6), ("(x", 3), ("x y", 3)] {
        match parse_expr(s) {
            Err(ParseError::Syntax { position, .. }) if position == pos => {}
            other => failures.push(format!("error path {s}: {other:?}")),
        }
    }
    if !matches!(parse_expr("z"), Err(ParseError::UnknownIdentifier { .. })) {
        failures.push("unknown identifier".into());
    }
    for s in ["1/(x-x)", "sqrt(-1 - x*x)"] {
        if parse_expr(s).map(|e| e.eval(0.5, 0.5).is_ok()).unwrap_or(true) {
            failures.push(format!("eval error: {s}"));
        }
    }
    Check {
        name: "parser".into(),
        passed: failures.is_empty(),
        hard: true,
        detail: json!({ "failures": failures }),
    }
}

pub fn run_suite(options: VerifyOptions) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut checks = vec![
        kernel_suite(&mut rng, &options, Family::Full)?,
        kernel_suite(&mut rng, &options, Family::Rt)?,
        commutation_suite(&mut rng, &options, Family::Full)?,
        commutation_suite(&mut rng, &options, Family::Rt)?,
    ];
    checks.extend(conservation_suite(&options)?);
    checks.push(quadrature_suite()?);
    checks.push(parser_suite());
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed || !c.hard),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_and_bug_is_caught() {
        let small = VerifyOptions { kernel_samples: 5, field_samples: 2, ..Default::default() };
        let report = run_suite(small).unwrap();
        for c in &report.checks {
            assert!(c.passed || !c.hard, "{}: {}", c.name, c.detail);
        }
        let broken = run_suite(VerifyOptions { inject_bug: true, ..small }).unwrap();
        assert!(!broken.passed);
        let cons = broken.checks.iter().find(|c| c.name == "conservation").unwrap();
        assert!(!cons.passed);
    }
}
