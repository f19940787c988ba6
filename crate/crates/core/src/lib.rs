//! Weak Galerkin finite elements for second-order elliptic problems with
//! Dirichlet data on triangle meshes.
//!
//! The usual path is [`config::load_problem`] (or a builtin from
//! [`problem::builtin`]), then [`study::solve_problem`] or
//! [`study::convergence_study`].

pub mod assembly;
pub mod basis;
pub mod config;
pub mod dofs;
pub mod error;
pub mod expr;
pub mod field;
pub mod mesh;
pub mod par;
pub mod postprocess;
pub mod problem;
pub mod quadrature;
pub mod space;
pub mod study;
pub mod verify;
pub mod weak;

pub use basis::Family;
pub use error::{Result, WgError};
pub use field::ScalarField;
pub use mesh::Mesh;
pub use problem::ProblemSpec;
pub use space::WgSpace;
pub use weak::{Discretization, WeakFunction};
