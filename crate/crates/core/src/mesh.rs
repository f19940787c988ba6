//! Conforming triangle meshes with derived edge topology and per-triangle
//! geometry.
//!
//! Local edge `k` of a triangle runs from its vertex `k` to vertex `(k+1) % 3`.
//! Global edges are stored with the lower vertex index first; that direction
//! parametrizes every edge polynomial.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Result, WgError};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    /// Endpoints, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// First adjacent triangle and, for interior edges, the second one.
    pub triangles: [usize; 2],
    pub boundary: bool,
}

impl Edge {
    pub fn neighbours(&self) -> &[usize] {
        if self.boundary {
            &self.triangles[..1]
        } else {
            &self.triangles[..]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleGeometry {
    pub area: f64,
    /// Longest edge length.
    pub diameter: f64,
    pub inradius: f64,
    pub edge_lengths: [f64; 3],
    /// Outward unit normal per local edge.
    pub normals: [Point; 3],
}

/// Edge table produced by [`build_edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    pub edges: Vec<Edge>,
    /// Global edge index per local edge.
    pub triangle_edges: Vec<[usize; 3]>,
    /// +1 when the triangle traverses the edge low -> high, -1 otherwise.
    pub orientations: Vec<[i8; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    orientations: Vec<[i8; 3]>,
    geometry: Vec<TriangleGeometry>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Derive the unique undirected edges of a triangle list.
pub fn build_edges(num_vertices: usize, triangles: &[[usize; 3]]) -> Result<EdgeTable> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    let mut orientations = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut local = [0usize; 3];
        let mut signs = [0i8; 3];
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            if a >= num_vertices || b >= num_vertices {
                return Err(WgError::InvalidArgument(format!(
                    "triangle {t} references vertex outside 0..{num_vertices}"
                )));
            }
            if a == b {
                return Err(WgError::DegenerateElement {
                    triangle: t,
                    reason: "repeated vertex".into(),
                });
            }
            let key = (a.min(b), a.max(b));
            let e = match lookup.get(&key) {
                Some(&e) => {
                    let edge = &mut edges[e];
                    if !edge.boundary {
                        return Err(WgError::NonManifold(key.0, key.1));
                    }
                    edge.triangles[1] = t;
                    edge.boundary = false;
                    e
                }
                None => {
                    let e = edges.len();
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [t, t],
                        boundary: true,
                    });
                    lookup.insert(key, e);
                    e
                }
            };
            local[k] = e;
            signs[k] = if a < b { 1 } else { -1 };
        }
        triangle_edges.push(local);
        orientations.push(signs);
    }
    Ok(EdgeTable {
        edges,
        triangle_edges,
        orientations,
    })
}

impl Mesh {
    /// Build a mesh from vertices and triangles. Clockwise triangles are
    /// reoriented; zero-area triangles are rejected.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(WgError::InvalidArgument("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(WgError::InvalidArgument(format!(
                    "triangle {t} references vertex {v} outside 0..{}",
                    vertices.len()
                )));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a.abs() > 0.0) || !a.is_finite() {
                return Err(WgError::DegenerateElement {
                    triangle: t,
                    reason: "zero or non-finite area".into(),
                });
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let table = build_edges(vertices.len(), &triangles)?;
        let geometry = triangles
            .iter()
            .map(|tri| triangle_geometry([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]))
            .collect();
        Ok(Mesh {
            vertices,
            triangles,
            edges: table.edges,
            triangle_edges: table.triangle_edges,
            orientations: table.orientations,
            geometry,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.boundary).count()
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn orientations(&self, t: usize) -> [i8; 3] {
        self.orientations[t]
    }

    pub fn geometry(&self, t: usize) -> &TriangleGeometry {
        &self.geometry[t]
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Endpoints of a global edge in global direction.
    pub fn edge_endpoints(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_endpoints(e);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Local index of global edge `e` in triangle `t`.
    pub fn local_edge_index(&self, t: usize, e: usize) -> Option<usize> {
        self.triangle_edges[t].iter().position(|&x| x == e)
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    /// `max_T h_T / rho_T`.
    pub fn shape_regularity(&self) -> f64 {
        self.geometry
            .iter()
            .map(|g| g.diameter / g.inradius)
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Number of closed loops formed by the boundary edges.
    pub fn boundary_loops(&self) -> usize {
        // union-find over boundary vertices
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        fn find(parent: &mut BTreeMap<usize, usize>, mut v: usize) -> usize {
            while parent[&v] != v {
                let p = parent[&v];
                let gp = parent[&p];
                parent.insert(v, gp);
                v = gp;
            }
            v
        }
        for e in self.edges.iter().filter(|e| e.boundary) {
            for v in e.vertices {
                parent.entry(v).or_insert(v);
            }
            let a = find(&mut parent, e.vertices[0]);
            let b = find(&mut parent, e.vertices[1]);
            if a != b {
                parent.insert(a, b);
            }
        }
        let keys: Vec<usize> = parent.keys().copied().collect();
        let mut roots: Vec<usize> = keys.into_iter().map(|v| find(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Vertices lying on the boundary, ascending.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.boundary)
            .flat_map(|e| e.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Split every triangle into four through its edge midpoints. The
    /// midpoint of global edge `e` gets vertex index `num_vertices + e`.
    pub fn uniform_refine(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|e| {
            let a = self.vertices[e.vertices[0]];
            let b = self.vertices[e.vertices[1]];
            [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
        }));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [e01, e12, e20] = self.triangle_edges[t].map(|e| nv + e);
            triangles.push([tri[0], e01, e20]);
            triangles.push([e01, tri[1], e12]);
            triangles.push([e20, e12, tri[2]]);
            triangles.push([e01, e12, e20]);
        }
        Mesh::new(vertices, triangles).expect("refinement of a valid mesh is valid")
    }
}

pub fn triangle_geometry(p: [Point; 3]) -> TriangleGeometry {
    let area = signed_area(p[0], p[1], p[2]).abs();
    let mut edge_lengths = [0.0; 3];
    let mut normals = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        edge_lengths[k] = len;
        normals[k] = [d[1] / len, -d[0] / len];
    }
    let perimeter: f64 = edge_lengths.iter().sum();
    TriangleGeometry {
        area,
        diameter: edge_lengths.iter().copied().fold(0.0, f64::max),
        inradius: 2.0 * area / perimeter,
        edge_lengths,
        normals,
    }
}

/// Unit square split into `n x n` cells, each cut along the diagonal from
/// `(i/n, k/n)` to `((i+1)/n, (k+1)/n)`.
pub fn structured_unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(WgError::InvalidArgument(
            "unit-square resolution n must be >= 1".into(),
        ));
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for k in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, k as f64 / n as f64]);
        }
    }
    let id = |i: usize, k: usize| k * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for k in 0..n {
        for i in 0..n {
            triangles.push([id(i, k), id(i + 1, k), id(i + 1, k + 1)]);
            triangles.push([id(i, k), id(i + 1, k + 1), id(i, k + 1)]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Parse the plain-text node/ele format:
///
/// ```text
/// # comment
/// nodes <count> base <0|1>
/// <x> <y>            (count lines)
/// elements <count>
/// <a> <b> <c>        (count lines, vertex indices in the declared base)
/// ```
///
/// Edges are rebuilt; clockwise triangles are reoriented.
pub fn load_mesh(source: &str) -> Result<Mesh> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| WgError::MeshParse { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty mesh file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (count, base) = match tokens.as_slice() {
        ["nodes", count, "base", base] => {
            let count: usize = count
                .parse()
                .map_err(|_| parse_err(line, format!("bad node count '{count}'")))?;
            let base: usize = match *base {
                "0" => 0,
                "1" => 1,
                other => return Err(parse_err(line, format!("index base must be 0 or 1, got '{other}'"))),
            };
            (count, base)
        }
        _ => {
            return Err(parse_err(
                line,
                "expected header 'nodes <count> base <0|1>'".into(),
            ))
        }
    };

    let mut vertices = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {count} node lines")))?;
        let coords: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad coordinate: {e}")))?;
        if coords.len() != 2 || !coords.iter().all(|c| c.is_finite()) {
            return Err(parse_err(line, "expected two finite coordinates".into()));
        }
        vertices.push([coords[0], coords[1]]);
    }

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing 'elements <count>' section".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let count = match tokens.as_slice() {
        ["elements", count] => count
            .parse::<usize>()
            .map_err(|_| parse_err(line, format!("bad element count '{count}'")))?,
        _ => return Err(parse_err(line, "expected header 'elements <count>'".into())),
    };

    let mut triangles = Vec::with_capacity(count);
    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
    for t in 0..count {
        let (line, text) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {count} element lines")))?;
        let idx: Vec<i64> = text
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad vertex index: {e}")))?;
        if idx.len() != 3 {
            return Err(parse_err(line, "expected three vertex indices".into()));
        }
        let mut tri = [0usize; 3];
        for (slot, &raw) in tri.iter_mut().zip(&idx) {
            let zero_based = raw - base as i64;
            if zero_based < 0 || zero_based as usize >= vertices.len() {
                return Err(WgError::DanglingIndex {
                    line,
                    index: raw,
                    count: vertices.len(),
                });
            }
            *slot = zero_based as usize;
        }
        let mut key = tri;
        key.sort_unstable();
        if let Some(&first) = seen.get(&key) {
            return Err(WgError::DuplicateTriangle { line, first });
        }
        seen.insert(key, t);
        triangles.push(tri);
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing content after elements".into()));
    }
    Mesh::new(vertices, triangles)
}

/// Serialize in the format read by [`load_mesh`] (0-based).
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = format!("nodes {} base 0\n", mesh.num_vertices());
    for v in mesh.vertices() {
        out.push_str(&format!("{:?} {:?}\n", v[0], v[1]));
    }
    out.push_str(&format!("elements {}\n", mesh.num_triangles()));
    for t in mesh.triangles() {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    out
}
