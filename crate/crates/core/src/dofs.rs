use serde::Serialize;

use crate::mesh::Mesh;
use crate::space::WgSpace;

/// Global numbering: interior DOFs blocked by triangle, then edge DOFs
/// blocked by global edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofMap {
    pub num_triangles: usize,
    pub num_edges: usize,
    pub interior_per_triangle: usize,
    pub per_edge: usize,
    /// Ascending global indices of DOFs on boundary edges.
    pub boundary: Vec<usize>,
    /// Global -> free index, `None` for boundary DOFs.
    #[serde(skip)]
    free_index: Vec<Option<usize>>,
    #[serde(skip)]
    free: Vec<usize>,
}

pub fn build_dof_map(mesh: &Mesh, space: &WgSpace) -> DofMap {
    let nint = space.interior_dofs();
    let ne = space.edge_dofs();
    let offset = mesh.num_triangles() * nint;
    let total = offset + mesh.num_edges() * ne;
    let mut is_boundary = vec![false; total];
    let mut boundary = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.boundary {
            for p in 0..ne {
                let g = offset + e * ne + p;
                is_boundary[g] = true;
                boundary.push(g);
            }
        }
    }
    let mut free_index = vec![None; total];
    let mut free = Vec::with_capacity(total - boundary.len());
    for g in 0..total {
        if !is_boundary[g] {
            free_index[g] = Some(free.len());
            free.push(g);
        }
    }
    DofMap {
        num_triangles: mesh.num_triangles(),
        num_edges: mesh.num_edges(),
        interior_per_triangle: nint,
        per_edge: ne,
        boundary,
        free_index,
        free,
    }
}

impl DofMap {
    pub fn num_interior(&self) -> usize {
        self.num_triangles * self.interior_per_triangle
    }

    pub fn num_edge(&self) -> usize {
        self.num_edges * self.per_edge
    }

    pub fn total(&self) -> usize {
        self.num_interior() + self.num_edge()
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn interior_range(&self, t: usize) -> std::ops::Range<usize> {
        let s = t * self.interior_per_triangle;
        s..s + self.interior_per_triangle
    }

    pub fn edge_range(&self, e: usize) -> std::ops::Range<usize> {
        let s = self.num_interior() + e * self.per_edge;
        s..s + self.per_edge
    }

    /// Global indices of the local DOFs of triangle `t` (interior, then
    /// local edges 0, 1, 2).
    pub fn local_to_global(&self, mesh: &Mesh, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.interior_range(t).collect();
        for e in mesh.triangle_edges(t) {
            out.extend(self.edge_range(e));
        }
        out
    }

    pub fn free_index(&self, g: usize) -> Option<usize> {
        self.free_index[g]
    }

    /// Global indices of free DOFs, ascending.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn is_boundary(&self, g: usize) -> bool {
        self.free_index[g].is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_unit_square;

    #[test]
    fn counts() {
        let m = structured_unit_square(1).unwrap();
        let d = build_dof_map(&m, &WgSpace::full(0));
        assert_eq!(d.total(), 12);
        assert_eq!(d.boundary.len(), 8);
        let d = build_dof_map(&m, &WgSpace::rt(0));
        assert_eq!(d.total(), 7);
        assert_eq!(d.boundary.len(), 4);

        let r = m.uniform_refine();
        let dr = build_dof_map(&r, &WgSpace::rt(0));
        assert_eq!(dr.num_interior(), 4 * d.num_interior());
    }

    #[test]
    fn ranges_disjoint_and_exhaustive() {
        let m = structured_unit_square(3).unwrap();
        let d = build_dof_map(&m, &WgSpace::full(1));
        let mut seen = vec![0u8; d.total()];
        for t in 0..m.num_triangles() {
            for g in d.interior_range(t) {
                seen[g] += 1;
            }
        }
        for e in 0..m.num_edges() {
            for g in d.edge_range(e) {
                seen[g] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(d.num_free() + d.boundary.len(), d.total());
        assert_eq!(build_dof_map(&m, &WgSpace::full(1)), d);
    }
}
