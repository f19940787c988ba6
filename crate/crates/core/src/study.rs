//! End-to-end drivers: discretize, assemble, solve, measure.

use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{assemble_with, solve, AssembledSystem, AssemblyOptions, Solution, SolverOptions};
use crate::error::{Result, WgError};
use crate::mesh::Mesh;
use crate::postprocess::{error_norms, flux_report, ErrorReport, ErrorRow, FluxReport};
use crate::problem::ProblemSpec;
use crate::space::WgSpace;
use crate::weak::{Discretization, DiscretizationOptions};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub discretization: DiscretizationOptions,
    pub solver: SolverOptions,
    pub assembly: AssemblyOptions,
}

#[derive(Debug, Clone)]
pub struct SolvedProblem {
    pub disc: Discretization,
    pub system: AssembledSystem,
    pub solution: Solution,
}

impl SolvedProblem {
    pub fn errors(&self, problem: &ProblemSpec) -> Result<ErrorRow> {
        let exact = problem
            .exact
            .as_ref()
            .ok_or_else(|| WgError::MissingExact(problem.name.clone()))?;
        error_norms(&self.disc, exact, &self.solution.u)
    }

    pub fn flux(&self, problem: &ProblemSpec) -> Result<FluxReport> {
        flux_report(&self.disc, problem, &self.solution.u)
    }
}

pub fn solve_problem(
    mesh: Arc<Mesh>,
    problem: &ProblemSpec,
    space: WgSpace,
    options: RunOptions,
) -> Result<SolvedProblem> {
    let disc = Discretization::new(mesh, space, options.discretization)?;
    let system = assemble_with(&disc, problem, options.assembly)?;
    let solution = solve(&disc, &system, options.solver)?;
    Ok(SolvedProblem { disc, system, solution })
}

/// Everything measured on one level of a study.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub errors: ErrorRow,
    pub residual: f64,
    pub max_conservation_residual: f64,
    pub max_flux_jump: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub problem: String,
    pub space: String,
    pub report: ErrorReport,
    pub levels: Vec<LevelSummary>,
}

impl ConvergenceStudy {
    pub fn flux_ok(&self, tolerance: f64) -> bool {
        self.levels
            .iter()
            .all(|l| l.max_conservation_residual <= tolerance && l.max_flux_jump <= tolerance)
    }
}

/// Solve on each mesh in turn and tabulate errors and rates.
pub fn convergence_study(
    meshes: Vec<Arc<Mesh>>,
    problem: &ProblemSpec,
    space: WgSpace,
    options: RunOptions,
) -> Result<ConvergenceStudy> {
    if meshes.len() < 2 {
        return Err(WgError::InvalidArgument(
            "a convergence study needs at least two levels".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for mesh in meshes {
        let solved = solve_problem(mesh, problem, space, options)?;
        let errors = solved.errors(problem)?;
        let flux = solved.flux(problem)?;
        rows.push(errors);
        levels.push(LevelSummary {
            errors,
            residual: solved.solution.residual,
            max_conservation_residual: flux.max_residual,
            max_flux_jump: flux.max_jump,
        });
    }
    Ok(ConvergenceStudy {
        problem: problem.name.clone(),
        space: space.to_string(),
        report: ErrorReport::new(rows)?,
        levels,
    })
}
