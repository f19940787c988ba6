//! Browser bindings. Every entry point returns a JSON string so the page
//! stays framework-free.

use std::sync::Arc;

use serde_json::json;
use wasm_bindgen::prelude::*;

use wg_core::mesh::structured_unit_square;
use wg_core::problem::builtin;
use wg_core::study::{convergence_study, solve_problem, RunOptions};
use wg_core::verify::kernel_on;
use wg_core::{Family, WgError, WgSpace};

fn space(j: usize, family: &str) -> Result<WgSpace, WgError> {
    let family: Family = family.parse().map_err(WgError::InvalidArgument)?;
    WgSpace::new(j, family)
}

fn js(e: WgError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn solve_json(problem: &str, j: usize, family: &str, n: usize) -> Result<String, WgError> {
    let spec = builtin(problem).ok_or_else(|| WgError::InvalidArgument(format!("unknown problem {problem}")))?;
    let space = space(j, family)?;
    let mesh = Arc::new(structured_unit_square(n.clamp(1, 64))?);
    let solved = solve_problem(mesh.clone(), &spec, space, RunOptions::default())?;
    let u = &solved.solution.u;
    let disc = &solved.disc;
    // one value per triangle: the interior polynomial at the centroid
    let values: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| disc.interior_value(t, u.interior(t), [1.0 / 3.0, 1.0 / 3.0]))
        .collect();
    let errors = match spec.exact {
        Some(_) => Some(solved.errors(&spec)?),
        None => None,
    };
    let flux = solved.flux(&spec)?;
    Ok(json!({
        "vertices": mesh.vertices(),
        "triangles": mesh.triangles(),
        "values": values,
        "dofs": disc.dofs().total(),
        "residual": solved.solution.residual,
        "errors": errors,
        "max_conservation_residual": flux.max_residual,
        "max_flux_jump": flux.max_jump,
    })
    .to_string())
}

fn convergence_json(problem: &str, j: usize, family: &str, levels: usize) -> Result<String, WgError> {
    let spec = builtin(problem).ok_or_else(|| WgError::InvalidArgument(format!("unknown problem {problem}")))?;
    let meshes = (0..levels.clamp(2, 5))
        .map(|k| structured_unit_square(2usize << k).map(Arc::new))
        .collect::<Result<Vec<_>, _>>()?;
    let study = convergence_study(meshes, &spec, space(j, family)?, RunOptions::default())?;
    Ok(serde_json::to_string(&study).unwrap_or_default())
}

fn kernel_json(corners: &[f64], j: usize, family: &str) -> Result<String, WgError> {
    if corners.len() != 6 {
        return Err(WgError::InvalidArgument("expected six coordinates".into()));
    }
    let mut p = [[corners[0], corners[1]], [corners[2], corners[3]], [corners[4], corners[5]]];
    let orient = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    if orient < 0.0 {
        p.swap(1, 2);
    }
    let report = kernel_on(p, [1, 1, 1], space(j, family)?)?;
    Ok(serde_json::to_string(&report).unwrap_or_default())
}

/// Solve a builtin problem on an `n x n` unit-square mesh.
#[wasm_bindgen]
pub fn solve(problem: &str, j: usize, family: &str, n: usize) -> Result<String, JsValue> {
    solve_json(problem, j, family, n).map_err(js)
}

/// Errors and rates on meshes `n = 2, 4, 8, ...`.
#[wasm_bindgen]
pub fn convergence(problem: &str, j: usize, family: &str, levels: usize) -> Result<String, JsValue> {
    convergence_json(problem, j, family, levels).map_err(js)
}

/// Singular values of the local weak-gradient map on one triangle
/// (`[x0, y0, x1, y1, x2, y2]`).
#[wasm_bindgen]
pub fn weak_gradient_kernel(corners: &[f64], j: usize, family: &str) -> Result<String, JsValue> {
    kernel_json(corners, j, family).map_err(js)
}
