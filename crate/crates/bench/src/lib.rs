//! Shared fixtures for the criterion benchmarks.

use std::f64::consts::PI;

use crstokes_core::{GeometryTables, Mesh, VelocityField};

/// Divergence-free swirl `curl (sin pi x sin pi y)` sampled at edge midpoints,
/// zero on boundary edges.
pub fn swirl(mesh: &Mesh, geo: &GeometryTables) -> VelocityField {
    let mut u = VelocityField::zeros(mesh);
    for e in mesh.interior_edges() {
        let [x, y] = geo.edge_centroid[e];
        u.components[0].values[e] = PI * (PI * x).sin() * (PI * y).cos();
        u.components[1].values[e] = -PI * (PI * x).cos() * (PI * y).sin();
    }
    u
}
