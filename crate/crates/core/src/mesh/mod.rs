//! Conforming simplicial meshes of polygonal domains.
//!
//! Cells are stored counter-clockwise. Edges are stored once with a sorted
//! vertex pair as key; local edge `i` of a cell is the edge opposite its local
//! vertex `i`, which is the convention the Crouzeix-Raviart basis relies on.

mod geometry;
mod io;
mod locate;
mod refine;
mod structured;

use std::collections::HashMap;

pub use geometry::{compute_geometry, regularity_theta, GeometryTables, MeshQuality, ShapeViolation};
pub use io::{read_mesh, write_mesh};
pub use locate::{barycentric_coords, PointLocator};
pub use refine::refine_uniform;
pub use structured::{build_structured, Rect};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Incident cells of an edge: the first is `K`, the second `L` (absent on the boundary).
pub type EdgeCells = (usize, Option<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dimension: usize,
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_cells: Vec<EdgeCells>,
    boundary_flags: Vec<bool>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds the edge topology from a vertex list and counter-clockwise triangles,
    /// validating conformity.
    pub fn from_cells(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidArgument("mesh has no cells".into()));
        }
        for (k, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cell {k} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(Error::Nonconforming(format!("cell {k} repeats a vertex")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) || !area.is_finite() {
                return Err(Error::DegenerateCell { cell: k, area });
            }
        }

        let mut seen_cells: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let mut key = *cell;
            key.sort_unstable();
            if let Some(first) = seen_cells.insert(key, k) {
                return Err(Error::Nonconforming(format!(
                    "cell {k} duplicates cell {first}"
                )));
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(2 * cells.len());
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(2 * cells.len());
        let mut edge_cells: Vec<EdgeCells> = Vec::with_capacity(2 * cells.len());
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                let e = match edge_index.get(&key) {
                    Some(&e) => {
                        match edge_cells[e].1 {
                            None => edge_cells[e].1 = Some(k),
                            Some(other) => {
                                return Err(Error::Nonconforming(format!(
                                    "edge ({}, {}) shared by cells {}, {} and {k}",
                                    key[0], key[1], edge_cells[e].0, other
                                )))
                            }
                        }
                        e
                    }
                    None => {
                        let e = edges.len();
                        edges.push(key);
                        edge_cells.push((k, None));
                        edge_index.insert(key, e);
                        e
                    }
                };
                *slot = e;
            }
            cell_edges.push(local);
        }

        let boundary_flags: Vec<bool> = edge_cells.iter().map(|(_, l)| l.is_none()).collect();
        let mesh = Mesh {
            dimension: 2,
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            boundary_flags,
        };
        mesh.check_hanging_nodes()?;
        Ok(mesh)
    }

    /// A vertex lying strictly inside a boundary edge means two cells meet along
    /// part of an edge only.
    fn check_hanging_nodes(&self) -> Result<()> {
        let boundary: Vec<usize> = (0..self.edges.len())
            .filter(|&e| self.boundary_flags[e])
            .collect();
        let mut candidates: Vec<usize> = boundary.iter().flat_map(|&e| self.edges[e]).collect();
        candidates.sort_unstable();
        candidates.dedup();
        for &e in &boundary {
            let [a, b] = self.edges[e];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            for &v in &candidates {
                if v == a || v == b {
                    continue;
                }
                let pv = self.vertices[v];
                let cross = (pb[0] - pa[0]) * (pv[1] - pa[1]) - (pb[1] - pa[1]) * (pv[0] - pa[0]);
                if cross.abs() > 1e-12 * len2 {
                    continue;
                }
                let t = ((pv[0] - pa[0]) * (pb[0] - pa[0]) + (pv[1] - pa[1]) * (pb[1] - pa[1])) / len2;
                if t > 1e-12 && t < 1.0 - 1e-12 {
                    return Err(Error::Nonconforming(format!(
                        "hanging vertex {v} lies inside edge ({a}, {b})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Local edge `i` is opposite local vertex `i`.
    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[EdgeCells] {
        &self.edge_cells
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary(&self, edge: usize) -> bool {
        self.boundary_flags[edge]
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| !self.boundary_flags[e])
    }

    pub fn n_interior_edges(&self) -> usize {
        self.boundary_flags.iter().filter(|b| !**b).count()
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn edge_points(&self, edge: usize) -> [Point; 2] {
        let [a, b] = self.edges[edge];
        [self.vertices[a], self.vertices[b]]
    }

    /// Position of `edge` among the local edges of `cell`.
    pub fn local_edge_index(&self, cell: usize, edge: usize) -> Option<usize> {
        self.cell_edges[cell].iter().position(|&e| e == edge)
    }

    /// The neighbour of `cell` across `edge`, if the edge is interior and incident.
    pub fn neighbor(&self, cell: usize, edge: usize) -> Option<usize> {
        match self.edge_cells[edge] {
            (k, Some(l)) if k == cell => Some(l),
            (k, Some(l)) if l == cell => Some(k),
            _ => None,
        }
    }

    /// Same mesh translated by `shift`.
    pub fn translated(&self, shift: Point) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            v[0] += shift[0];
            v[1] += shift[1];
        }
        out
    }

    /// Ordering-independent description: sorted vertex coordinates of every cell.
    /// Two meshes with equal canonical forms describe the same triangulation.
    pub fn canonical_form(&self) -> Vec<[[u64; 2]; 3]> {
        let key = |p: Point| [p[0].to_bits(), p[1].to_bits()];
        let mut out: Vec<[[u64; 2]; 3]> = (0..self.n_cells())
            .map(|k| {
                let mut pts = self.cell_points(k).map(key);
                pts.sort_unstable();
                pts
            })
            .collect();
        out.sort_unstable();
        out
    }
}
