//! Problem configuration files.
//!
//! A config is flat TOML: coefficient fields are quoted expressions (or bare
//! numbers), everything else is a scalar setting.
//!
//! ```toml
//! problem = "sinsin"       # optional builtin to start from
//! f = "2*pi^2*sin(pi*x)*sin(pi*y)"
//! a11 = "1 + x^2"
//! j = 1
//! family = "full"
//! levels = [4, 8, 16]
//!
//! [solver]
//! rel_residual = 1e-10
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::DEFAULT_REL_RESIDUAL;
use crate::basis::Family;
use crate::error::{Result, WgError};
use crate::expr::parse_expr;
use crate::field::ScalarField;
use crate::mesh::{load_mesh, structured_unit_square, Mesh};
use crate::problem::{builtin, ExactSolution, ProblemSpec, BUILTIN_NAMES, DEFAULT_ALPHA};
use crate::space::WgSpace;

pub const DEFAULT_QUAD_BOOST: usize = 3;
pub const DEFAULT_N: usize = 8;

pub const ENV_REL_RESIDUAL: &str = "WG_SOLVER_REL_RESIDUAL";
pub const ENV_THREADS: &str = "WG_THREADS";

/// Keys holding expressions, in a fixed order.
pub const FIELD_KEYS: [&str; 11] = ["a11", "a12", "a22", "b1", "b2", "c", "f", "g", "u", "ux", "uy"];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawField {
    Text(String),
    Number(f64),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLevels {
    Sizes(Vec<usize>),
    Count(usize),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rel_residual: Option<f64>,
    alpha: Option<f64>,
    threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<String>,
    a11: Option<RawField>,
    a12: Option<RawField>,
    a22: Option<RawField>,
    b1: Option<RawField>,
    b2: Option<RawField>,
    c: Option<RawField>,
    f: Option<RawField>,
    g: Option<RawField>,
    u: Option<RawField>,
    ux: Option<RawField>,
    uy: Option<RawField>,
    j: Option<usize>,
    family: Option<String>,
    n: Option<usize>,
    mesh: Option<PathBuf>,
    levels: Option<RawLevels>,
    quad_boost: Option<usize>,
    #[serde(default)]
    solver: RawSolver,
}

/// Where the coarsest mesh comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshSource {
    UnitSquare(usize),
    File(PathBuf),
}

/// Meshes of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Levels {
    /// Structured unit-square meshes with these subdivision counts.
    Sizes(Vec<usize>),
    /// The base mesh and this many uniform refinements of it.
    Refinements(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub problem: Option<String>,
    pub mesh: MeshSource,
    pub space: WgSpace,
    /// Expression text of each field given explicitly in the config.
    pub expressions: BTreeMap<String, String>,
    pub quad_boost: usize,
    pub rel_residual: f64,
    pub alpha: f64,
    pub levels: Option<Levels>,
    pub threads: Option<usize>,
}

impl ProblemConfig {
    pub fn base_mesh(&self) -> Result<Mesh> {
        match &self.mesh {
            MeshSource::UnitSquare(n) => structured_unit_square(*n),
            MeshSource::File(path) => load_mesh(&std::fs::read_to_string(path)?),
        }
    }

    /// Meshes for a convergence study; without explicit levels, four
    /// levels starting at the base mesh.
    pub fn level_meshes(&self) -> Result<Vec<Arc<Mesh>>> {
        let levels = self.levels.clone().unwrap_or(Levels::Refinements(3));
        match (levels, &self.mesh) {
            (Levels::Sizes(ns), _) => ns
                .iter()
                .map(|&n| structured_unit_square(n).map(Arc::new))
                .collect(),
            (Levels::Refinements(k), _) => {
                let mut mesh = self.base_mesh()?;
                let mut out = Vec::with_capacity(k + 1);
                for _ in 0..k {
                    let next = mesh.uniform_refine();
                    out.push(Arc::new(mesh));
                    mesh = next;
                }
                out.push(Arc::new(mesh));
                Ok(out)
            }
        }
    }
}

fn field(key: &str, raw: RawField) -> Result<(ScalarField, String)> {
    match raw {
        RawField::Number(v) => Ok((ScalarField::constant(v), format!("{v:?}"))),
        RawField::Text(text) => {
            let e = parse_expr(&text).map_err(|err| WgError::Config(format!("key `{key}`: {err}")))?;
            Ok((ScalarField::from_expr(e), text))
        }
    }
}

/// Parse a config and build the problem it describes.
///
/// `env` supplies overrides (see [`ENV_REL_RESIDUAL`], [`ENV_THREADS`]);
/// pass `|_| None` to ignore the environment.
pub fn load_problem_with_env(
    text: &str,
    env: impl Fn(&str) -> Option<String>,
) -> Result<(ProblemConfig, ProblemSpec)> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| WgError::Config(e.to_string()))?;

    let mut spec = match raw.problem.as_deref() {
        Some(name) => builtin(name).ok_or_else(|| {
            WgError::Config(format!(
                "unknown problem `{name}` (builtins: {})",
                BUILTIN_NAMES.join(", ")
            ))
        })?,
        None => {
            if raw.f.is_none() {
                return Err(WgError::Config("missing required key `f`".into()));
            }
            ProblemSpec::poisson(ScalarField::zero(), ScalarField::zero()).with_name("custom")
        }
    };

    let mut expressions = BTreeMap::new();
    let mut exact_parts: [Option<ScalarField>; 3] = [None, None, None];
    let entries = [
        ("a11", raw.a11),
        ("a12", raw.a12),
        ("a22", raw.a22),
        ("b1", raw.b1),
        ("b2", raw.b2),
        ("c", raw.c),
        ("f", raw.f),
        ("g", raw.g),
        ("u", raw.u),
        ("ux", raw.ux),
        ("uy", raw.uy),
    ];
    for (key, value) in entries {
        let Some(value) = value else { continue };
        let (fld, text) = field(key, value)?;
        expressions.insert(key.to_string(), text);
        match key {
            "a11" => spec.a11 = fld,
            "a12" => spec.a12 = fld,
            "a22" => spec.a22 = fld,
            "b1" => spec.b1 = fld,
            "b2" => spec.b2 = fld,
            "c" => spec.c = fld,
            "f" => spec.f = fld,
            "g" => spec.g = fld,
            "u" => exact_parts[0] = Some(fld),
            "ux" => exact_parts[1] = Some(fld),
            "uy" => exact_parts[2] = Some(fld),
            _ => unreachable!(),
        }
    }
    match exact_parts {
        [Some(u), Some(ux), Some(uy)] => {
            // without explicit boundary data the exact solution supplies it
            if !expressions.contains_key("g") {
                spec.g = u.clone();
            }
            spec.exact = Some(ExactSolution { u, ux, uy });
        }
        [None, None, None] => {}
        _ => {
            return Err(WgError::Config(
                "exact solution needs all of `u`, `ux` and `uy`".into(),
            ))
        }
    }

    let family = match raw.family.as_deref() {
        Some(s) => s.parse::<Family>().map_err(WgError::Config)?,
        None => Family::Full,
    };
    let space = WgSpace::new(raw.j.unwrap_or(0), family)?;
    let mesh = match (raw.mesh, raw.n) {
        (Some(_), Some(_)) => return Err(WgError::Config("give either `mesh` or `n`, not both".into())),
        (Some(path), None) => MeshSource::File(path),
        (None, n) => MeshSource::UnitSquare(n.unwrap_or(DEFAULT_N)),
    };
    if mesh == MeshSource::UnitSquare(0) {
        return Err(WgError::Config("`n` must be positive".into()));
    }
    let levels = match raw.levels {
        None => None,
        Some(RawLevels::Sizes(ns)) => {
            if matches!(mesh, MeshSource::File(_)) {
                return Err(WgError::Config(
                    "a list of `levels` applies to the unit square; use a refinement count with `mesh`".into(),
                ));
            }
            if ns.len() < 2 || ns.contains(&0) {
                return Err(WgError::Config("`levels` needs at least two positive sizes".into()));
            }
            Some(Levels::Sizes(ns))
        }
        Some(RawLevels::Count(k)) => Some(Levels::Refinements(k)),
    };

    let mut config = ProblemConfig {
        problem: raw.problem,
        mesh,
        space,
        expressions,
        quad_boost: raw.quad_boost.unwrap_or(DEFAULT_QUAD_BOOST),
        rel_residual: raw.solver.rel_residual.unwrap_or(DEFAULT_REL_RESIDUAL),
        alpha: raw.solver.alpha.unwrap_or(DEFAULT_ALPHA),
        levels,
        threads: raw.solver.threads,
    };
    if let Some(v) = env(ENV_REL_RESIDUAL) {
        config.rel_residual = v
            .trim()
            .parse()
            .map_err(|_| WgError::Config(format!("{ENV_REL_RESIDUAL}: not a number: {v:?}")))?;
    }
    if let Some(v) = env(ENV_THREADS) {
        config.threads = Some(
            v.trim()
                .parse()
                .map_err(|_| WgError::Config(format!("{ENV_THREADS}: not a count: {v:?}")))?,
        );
    }
    if !(config.rel_residual > 0.0) {
        return Err(WgError::Config("solver tolerance must be positive".into()));
    }
    spec.alpha = config.alpha;

    // cheap early warning; assembly re-checks at every quadrature point
    let (lo, hi) = match &config.mesh {
        MeshSource::UnitSquare(_) => ([0.0, 0.0], [1.0, 1.0]),
        MeshSource::File(_) => config.base_mesh()?.bounding_box(),
    };
    spec.check_ellipticity(lo, hi, 10)?;
    Ok((config, spec))
}

pub fn load_problem(text: &str) -> Result<(ProblemConfig, ProblemSpec)> {
    load_problem_with_env(text, |k| std::env::var(k).ok())
}

/// Read a config file; a relative `mesh` path is resolved against the
/// config's directory.
pub fn load_problem_file(path: &Path) -> Result<(ProblemConfig, ProblemSpec)> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let raw: toml::Table = toml::from_str(&text).map_err(|e| WgError::Config(e.to_string()))?;
    let text = match raw.get("mesh").and_then(|m| m.as_str()) {
        Some(m) if Path::new(m).is_relative() => {
            let mut table = raw.clone();
            table.insert("mesh".into(), toml::Value::String(dir.join(m).to_string_lossy().into_owned()));
            toml::to_string(&table).map_err(|e| WgError::Config(e.to_string()))?
        }
        _ => text,
    };
    load_problem(&text)
}
