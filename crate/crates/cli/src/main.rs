//! `wg`: solve, study, verify and audit weak Galerkin discretizations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use wg_core::assembly::{SolverKind, SolverOptions};
use wg_core::config::{load_problem_file, load_problem_with_env, Levels, MeshSource, ProblemConfig};
use wg_core::par::with_threads;
use wg_core::study::{convergence_study, solve_problem, RunOptions};
use wg_core::verify::{run_suite, VerifyOptions};
use wg_core::weak::DiscretizationOptions;
use wg_core::{Family, ProblemSpec, WgError, WgSpace};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "wg", version, about = "Weak Galerkin finite element solver for 2D elliptic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write the solution and a summary.
    Solve(Common),
    /// Solve on a sequence of meshes and tabulate errors and rates.
    Convergence(Common),
    /// Run the structural self-checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Scale one element matrix so the conservation check must fail.
        #[arg(long)]
        inject_bug: bool,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random triangles per degree for the kernel check.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Per-element mass balance and per-edge flux jumps.
    FluxReport(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Problem config file (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin problem, used when no config is given.
    #[arg(long)]
    problem: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "wg-out")]
    out: PathBuf,
    /// Comma-separated unit-square sizes (`8,16,32`) or a refinement count.
    #[arg(long)]
    levels: Option<String>,
    /// Interior polynomial degree.
    #[arg(long)]
    j: Option<usize>,
    #[arg(long, value_parser = ["full", "rt"])]
    family: Option<String>,
    /// Structured unit-square mesh with n x n squares.
    #[arg(long, conflicts_with = "mesh")]
    unit_square: Option<usize>,
    /// Mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Use BiCGSTAB instead of the direct factorization.
    #[arg(long)]
    iterative: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Wg(WgError),
}

impl From<WgError> for Failure {
    fn from(e: WgError) -> Self {
        Failure::Wg(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Wg(WgError::Solver { .. }) => EXIT_SOLVER,
            Failure::Wg(_) => EXIT_USAGE,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message, condition) = match self {
            Failure::Usage(m) => ("usage", m.clone(), None),
            Failure::Wg(e) => {
                let cond = match e {
                    WgError::Solver { condition_estimate, .. } => *condition_estimate,
                    _ => None,
                };
                (e.kind(), e.to_string(), cond)
            }
        };
        json!({
            "error": {
                "kind": kind,
                "message": message,
                "exit_code": self.exit_code(),
                "condition_estimate": condition,
            }
        })
    }
}

fn load(common: &Common) -> Result<(ProblemConfig, ProblemSpec), Failure> {
    let (mut cfg, spec) = match (&common.config, &common.problem) {
        (Some(path), _) => {
            if !path.exists() {
                return Err(Failure::Usage(format!("config file not found: {}", path.display())));
            }
            load_problem_file(path)?
        }
        (None, Some(name)) => load_problem_with_env(&format!("problem = {name:?}"), |k| std::env::var(k).ok())?,
        (None, None) => return Err(Failure::Usage("give --config <path> or --problem <builtin>".into())),
    };
    if common.j.is_some() || common.family.is_some() {
        let family = match common.family.as_deref() {
            Some(f) => f.parse::<Family>().map_err(Failure::Usage)?,
            None => cfg.space.family(),
        };
        cfg.space = WgSpace::new(common.j.unwrap_or(cfg.space.j()), family)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(n) = common.unit_square {
        if n == 0 {
            return Err(Failure::Usage("--unit-square must be positive".into()));
        }
        cfg.mesh = MeshSource::UnitSquare(n);
    }
    if let Some(m) = &common.mesh {
        cfg.mesh = MeshSource::File(m.clone());
    }
    if let Some(levels) = &common.levels {
        cfg.levels = Some(parse_levels(levels)?);
    }
    if matches!((&cfg.levels, &cfg.mesh), (Some(Levels::Sizes(_)), MeshSource::File(_))) {
        return Err(Failure::Usage("a list of levels applies to the unit square; use a refinement count".into()));
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    Ok((cfg, spec))
}

fn parse_levels(s: &str) -> Result<Levels, Failure> {
    let bad = || Failure::Usage(format!("invalid --levels {s:?}"));
    if s.contains(',') {
        let ns: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        if ns.len() < 2 || ns.contains(&0) {
            return Err(Failure::Usage("--levels needs at least two positive sizes".into()));
        }
        Ok(Levels::Sizes(ns))
    } else {
        s.trim().parse().map(Levels::Refinements).map_err(|_| bad())
    }
}

fn run_options(cfg: &ProblemConfig, iterative: bool) -> RunOptions {
    RunOptions {
        discretization: DiscretizationOptions {
            quad_boost: cfg.quad_boost,
        },
        solver: SolverOptions {
            kind: if iterative {
                SolverKind::Iterative { max_iterations: 20_000 }
            } else {
                SolverKind::Direct
            },
            rel_residual: cfg.rel_residual,
        },
        ..Default::default()
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    write_text(dir, name, &(text + "\n"))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(WgError::from)?;
    std::fs::write(dir.join(name), text).map_err(WgError::from)?;
    Ok(())
}

/// Run-specific metadata lives apart from the reproducible outputs.
fn write_meta(dir: &Path, command: &str, cfg: Option<&ProblemConfig>, started: Instant) -> Result<(), Failure> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    write_json(
        dir,
        "meta.json",
        &json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "unix_time": stamp,
            "elapsed_seconds": started.elapsed().as_secs_f64(),
            "threads": cfg.and_then(|c| c.threads),
        }),
    )
}

fn cmd_solve(common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    let (cfg, spec) = load(common)?;
    with_threads(cfg.threads, || -> Result<u8, Failure> {
        let mesh = Arc::new(cfg.base_mesh()?);
        let solved = solve_problem(mesh, &spec, cfg.space, run_options(&cfg, common.iterative))?;
        let u = &solved.solution.u;
        let nt = solved.disc.mesh().num_triangles();
        let ne = solved.disc.mesh().num_edges();
        write_json(
            &common.out,
            "solution.json",
            &json!({
                "space": { "j": cfg.space.j(), "family": cfg.space.family(), "edge_degree": cfg.space.edge_degree() },
                "dof_map": solved.disc.dofs(),
                "interior": (0..nt).map(|t| u.interior(t).to_vec()).collect::<Vec<_>>(),
                "edges": (0..ne).map(|e| u.edge(e).to_vec()).collect::<Vec<_>>(),
            }),
        )?;
        let flux = solved.flux(&spec)?;
        let errors = match &spec.exact {
            Some(_) => Some(solved.errors(&spec)?),
            None => None,
        };
        let summary = json!({
            "problem": spec.name,
            "space": cfg.space.to_string(),
            "triangles": nt,
            "dofs": solved.disc.dofs().total(),
            "free_dofs": solved.disc.dofs().num_free(),
            "residual": solved.solution.residual,
            "iterations": solved.solution.iterations,
            "errors": errors,
            "max_conservation_residual": flux.max_residual,
            "max_flux_jump": flux.max_jump,
        });
        write_json(&common.out, "summary.json", &summary)?;
        write_meta(&common.out, "solve", Some(&cfg), started)?;
        println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
        Ok(0)
    })
}

fn cmd_convergence(common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    let (cfg, spec) = load(common)?;
    if spec.exact.is_none() {
        return Err(WgError::MissingExact(format!("problem `{}` has no exact solution", spec.name)).into());
    }
    with_threads(cfg.threads, || -> Result<u8, Failure> {
        let meshes = cfg.level_meshes()?;
        if meshes.len() < 2 {
            return Err(Failure::Usage("a convergence study needs at least two levels".into()));
        }
        let study = convergence_study(meshes, &spec, cfg.space, run_options(&cfg, common.iterative))?;
        let csv = study.report.to_csv();
        write_text(&common.out, "convergence.csv", &csv)?;
        write_json(&common.out, "convergence.json", &study)?;
        write_meta(&common.out, "convergence", Some(&cfg), started)?;
        print!("{csv}");
        Ok(0)
    })
}

fn cmd_flux_report(common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    let (cfg, spec) = load(common)?;
    with_threads(cfg.threads, || -> Result<u8, Failure> {
        let mesh = Arc::new(cfg.base_mesh()?);
        let solved = solve_problem(mesh, &spec, cfg.space, run_options(&cfg, common.iterative))?;
        let report = solved.flux(&spec)?;
        write_text(&common.out, "flux.csv", &report.to_csv())?;
        write_json(&common.out, "flux.json", &report)?;
        write_meta(&common.out, "flux-report", Some(&cfg), started)?;
        let verdict = json!({
            "problem": spec.name,
            "space": cfg.space.to_string(),
            "max_conservation_residual": report.max_residual,
            "max_flux_jump": report.max_jump,
            "tolerance": report.tolerance,
            "passed": report.passed(),
        });
        println!("{}", serde_json::to_string_pretty(&verdict).unwrap_or_default());
        Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
    })
}

fn cmd_verify(common: &Common, inject_bug: bool, seed: u64, samples: usize) -> Result<u8, Failure> {
    let started = Instant::now();
    let threads = common.threads.or_else(|| {
        std::env::var(wg_core::config::ENV_THREADS).ok().and_then(|v| v.trim().parse().ok())
    });
    let report = with_threads(threads, || {
        run_suite(VerifyOptions {
            seed,
            kernel_samples: samples,
            inject_bug,
            ..Default::default()
        })
    })?;
    write_json(&common.out, "verify.json", &report)?;
    write_meta(&common.out, "verify", None, started)?;
    for c in &report.checks {
        let status = match (c.passed, c.hard) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "info",
        };
        println!("{status:<5} {}", c.name);
    }
    Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => cmd_solve(c),
        Command::Convergence(c) => cmd_convergence(c),
        Command::FluxReport(c) => cmd_flux_report(c),
        Command::Verify {
            common,
            inject_bug,
            seed,
            samples,
        } => cmd_verify(common, *inject_bug, *seed, *samples),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("{}", serde_json::to_string_pretty(&failure.to_json()).unwrap_or_default());
            ExitCode::from(failure.exit_code())
        }
    }
}
