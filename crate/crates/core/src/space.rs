use serde::{Deserialize, Serialize};

use crate::basis::{scalar_dim, Family, VectorBasis};
use crate::error::{Result, WgError};

/// Highest interior degree accepted.
pub const MAX_DEGREE: usize = 6;

/// Weak Galerkin space `S_h(j, l)` together with its gradient space.
///
/// Only two pairings exist: [`Family::Full`] (`l = j + 1`,
/// `V = [P_{j+1}]^2`) and [`Family::Rt`] (`l = j`, `V = RT_j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WgSpace {
    j: usize,
    family: Family,
}

impl WgSpace {
    pub fn new(j: usize, family: Family) -> Result<Self> {
        if j > MAX_DEGREE {
            return Err(WgError::InvalidArgument(format!(
                "interior degree j = {j} exceeds maximum {MAX_DEGREE}"
            )));
        }
        Ok(WgSpace { j, family })
    }

    pub fn full(j: usize) -> Self {
        WgSpace::new(j, Family::Full).expect("degree in range")
    }

    pub fn rt(j: usize) -> Self {
        WgSpace::new(j, Family::Rt).expect("degree in range")
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn edge_degree(&self) -> usize {
        match self.family {
            Family::Full => self.j + 1,
            Family::Rt => self.j,
        }
    }

    pub fn interior_dofs(&self) -> usize {
        scalar_dim(self.j)
    }

    pub fn edge_dofs(&self) -> usize {
        self.edge_degree() + 1
    }

    /// Interior block plus three edge blocks.
    pub fn local_dofs(&self) -> usize {
        self.interior_dofs() + 3 * self.edge_dofs()
    }

    pub fn gradient_dim(&self) -> usize {
        match self.family {
            Family::Full => (self.j + 2) * (self.j + 3),
            Family::Rt => (self.j + 1) * (self.j + 3),
        }
    }

    pub fn vector_basis(&self) -> VectorBasis {
        VectorBasis::new(self.family, self.j)
    }

    /// Default triangle quadrature exactness: `2 (j + 1) + boost`.
    pub fn quadrature_exactness(&self, boost: usize) -> usize {
        2 * (self.j + 1) + boost
    }
}

impl std::fmt::Display for WgSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(j={}, l={})", self.family.name(), self.j, self.edge_degree())
    }
}
