use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = WgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("dangling vertex index {index} at line {line} (mesh has {count} vertices)")]
    DanglingIndex {
        line: usize,
        index: i64,
        count: usize,
    },

    #[error("duplicate triangle at line {line} (same vertices as triangle {first})")]
    DuplicateTriangle { line: usize, first: usize },

    #[error("non-manifold edge ({0}, {1}): more than two adjacent triangles")]
    NonManifold(usize, usize),

    #[error("degenerate triangle {triangle}: {reason}")]
    DegenerateElement { triangle: usize, reason: String },

    #[error("unsupported quadrature exactness {requested} (maximum is {maximum})")]
    UnsupportedQuadrature { requested: usize, maximum: usize },

    #[error(
        "ellipticity violated at ({x}, {y}): smallest eigenvalue of a is {lambda_min}, \
         required >= alpha = {alpha} (a must be uniformly positive definite)"
    )]
    Ellipticity {
        x: f64,
        y: f64,
        lambda_min: f64,
        alpha: f64,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing exact solution: {0}")]
    MissingExact(String),

    #[error("solver failure: {message}")]
    Solver {
        message: String,
        condition_estimate: Option<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WgError {
    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            WgError::InvalidArgument(_) => "invalid-argument",
            WgError::MeshParse { .. } => "mesh-parse",
            WgError::DanglingIndex { .. } => "dangling-index",
            WgError::DuplicateTriangle { .. } => "duplicate-triangle",
            WgError::NonManifold(..) => "non-manifold",
            WgError::DegenerateElement { .. } => "degenerate-element",
            WgError::UnsupportedQuadrature { .. } => "unsupported-quadrature",
            WgError::Ellipticity { .. } => "ellipticity",
            WgError::Parse(_) => "expression-syntax",
            WgError::Eval(_) => "expression-eval",
            WgError::Config(_) => "config",
            WgError::MissingExact(_) => "missing-exact",
            WgError::Solver { .. } => "solver",
            WgError::Io(_) => "io",
        }
    }
}
