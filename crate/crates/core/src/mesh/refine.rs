use super::Mesh;
use crate::error::Result;

/// Red refinement: every triangle is split into four similar children through
/// its edge midpoints. Midpoint of edge `e` becomes vertex `n_vertices + e`.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();
    vertices.reserve(mesh.n_edges());
    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edge_points(e);
        vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
    }
    let mut cells = Vec::with_capacity(4 * mesh.n_cells());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let [a, b, c] = *cell;
        // local edge i is opposite vertex i
        let [e_bc, e_ca, e_ab] = mesh.cell_edges()[k];
        let (m_ab, m_bc, m_ca) = (nv + e_ab, nv + e_bc, nv + e_ca);
        cells.push([a, m_ab, m_ca]);
        cells.push([m_ab, b, m_bc]);
        cells.push([m_ca, m_bc, c]);
        cells.push([m_ab, m_bc, m_ca]);
    }
    Mesh::from_cells(vertices, cells)
}
