use serde::Serialize;

use super::{signed_area, Mesh, Point};
use crate::error::{Error, Result};

/// Measures, diameters and normals of a mesh.
///
/// `edge_normal[e]` is the unit normal of `e` oriented from its first incident
/// cell `K` toward `L` (outward from `K` on the boundary).
#[derive(Debug, Clone)]
pub struct GeometryTables {
    pub cell_measure: Vec<f64>,
    pub cell_diameter: Vec<f64>,
    pub inball_diameter: Vec<f64>,
    pub cell_centroid: Vec<Point>,
    pub edge_measure: Vec<f64>,
    pub edge_diameter: Vec<f64>,
    pub edge_centroid: Vec<Point>,
    pub edge_normal: Vec<Point>,
    /// Gradients of the three barycentric coordinates of each cell.
    pub bary_gradients: Vec<[Point; 3]>,
    /// Global mesh size, the largest cell diameter.
    pub h: f64,
    pub domain_measure: f64,
}

impl GeometryTables {
    /// Unit normal of local edge `local` of `cell`, pointing out of the cell.
    pub fn outward_normal(&self, mesh: &Mesh, cell: usize, local: usize) -> Point {
        let e = mesh.cell_edges()[cell][local];
        let n = self.edge_normal[e];
        if mesh.edge_cells()[e].0 == cell {
            n
        } else {
            [-n[0], -n[1]]
        }
    }

    /// Unit normal of `edge` pointing out of `cell`.
    pub fn normal_from(&self, mesh: &Mesh, edge: usize, cell: usize) -> Point {
        let n = self.edge_normal[edge];
        if mesh.edge_cells()[edge].0 == cell {
            n
        } else {
            [-n[0], -n[1]]
        }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

pub fn compute_geometry(mesh: &Mesh) -> Result<GeometryTables> {
    let nc = mesh.n_cells();
    let ne = mesh.n_edges();
    let mut cell_measure = Vec::with_capacity(nc);
    let mut cell_diameter = Vec::with_capacity(nc);
    let mut inball_diameter = Vec::with_capacity(nc);
    let mut cell_centroid = Vec::with_capacity(nc);
    let mut bary_gradients = Vec::with_capacity(nc);
    for k in 0..nc {
        let p = mesh.cell_points(k);
        let area = signed_area(p[0], p[1], p[2]);
        if !(area > 0.0) {
            return Err(Error::DegenerateCell { cell: k, area });
        }
        let lens = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
        let perimeter: f64 = lens.iter().sum();
        cell_measure.push(area);
        cell_diameter.push(lens.iter().cloned().fold(0.0, f64::max));
        // twice the inradius r = |K| / s
        inball_diameter.push(4.0 * area / perimeter);
        cell_centroid.push([
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]);
        // grad lambda_i is perpendicular to the opposite edge, pointing at vertex i
        let mut g = [[0.0; 2]; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            *gi = [-(b[1] - a[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        bary_gradients.push(g);
    }

    let mut edge_measure = Vec::with_capacity(ne);
    let mut edge_centroid = Vec::with_capacity(ne);
    let mut edge_normal = Vec::with_capacity(ne);
    for e in 0..ne {
        let [a, b] = mesh.edge_points(e);
        let len = dist(a, b);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let k = mesh.edge_cells()[e].0;
        let c = cell_centroid[k];
        if n[0] * (mid[0] - c[0]) + n[1] * (mid[1] - c[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        edge_measure.push(len);
        edge_centroid.push(mid);
        edge_normal.push(n);
    }
    // in 2D an edge is a segment, its diameter is its length
    let edge_diameter = edge_measure.clone();
    let h = cell_diameter.iter().cloned().fold(0.0, f64::max);
    let domain_measure = cell_measure.iter().sum();
    Ok(GeometryTables {
        cell_measure,
        cell_diameter,
        inball_diameter,
        cell_centroid,
        edge_measure,
        edge_diameter,
        edge_centroid,
        edge_normal,
        bary_gradients,
        h,
        domain_measure,
    })
}

/// A `(K, sigma)` pair breaking `h_sigma |sigma| <= 2 theta^{-d} |K|`.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeViolation {
    pub cell: usize,
    pub edge: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshQuality {
    pub theta: f64,
    /// `xi_K / h_K` per cell.
    pub per_cell_ratio: Vec<f64>,
    /// `h_L / h_K` per interior edge, in interior-edge order.
    pub per_edge_ratios: Vec<f64>,
    pub shape_violations: Vec<ShapeViolation>,
}

/// Regularity parameter: the infimum of the cell roundness ratios and of the
/// size ratios (both ways) of neighbouring cells. Also checks the derived
/// shape bound on every cell/edge pair.
pub fn regularity_theta(mesh: &Mesh, geo: &GeometryTables) -> MeshQuality {
    let per_cell_ratio: Vec<f64> = geo
        .inball_diameter
        .iter()
        .zip(&geo.cell_diameter)
        .map(|(xi, h)| xi / h)
        .collect();
    let mut theta = per_cell_ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut per_edge_ratios = Vec::new();
    for e in mesh.interior_edges() {
        let (k, l) = mesh.edge_cells()[e];
        let l = l.expect("interior edge");
        let r = geo.cell_diameter[l] / geo.cell_diameter[k];
        theta = theta.min(r).min(1.0 / r);
        per_edge_ratios.push(r);
    }
    let d = mesh.dimension() as i32;
    let mut shape_violations = Vec::new();
    for k in 0..mesh.n_cells() {
        for &e in &mesh.cell_edges()[k] {
            let lhs = geo.edge_diameter[e] * geo.edge_measure[e];
            let rhs = 2.0 * theta.powi(-d) * geo.cell_measure[k];
            if lhs > rhs {
                shape_violations.push(ShapeViolation { cell: k, edge: e, lhs, rhs });
            }
        }
    }
    MeshQuality { theta, per_cell_ratio, per_edge_ratios, shape_violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, Rect};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn unit_right_triangle() {
        let m = Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let g = compute_geometry(&m).unwrap();
        assert!((g.cell_measure[0] - 0.5).abs() < 1e-15);
        assert!((g.cell_diameter[0] - SQRT2).abs() < 1e-15);
        assert!((g.inball_diameter[0] - (2.0 - SQRT2)).abs() < 1e-15);
        let hyp = m.cell_edges()[0][0];
        assert!((g.edge_measure[hyp] - SQRT2).abs() < 1e-15);
        assert_eq!(g.edge_measure[hyp], g.edge_diameter[hyp]);
        let q = regularity_theta(&m, &g);
        assert!((q.theta - (SQRT2 - 1.0)).abs() < 1e-15);
        assert!(q.shape_violations.is_empty());
    }

    #[test]
    fn interior_normals_are_opposite() {
        let m = build_structured(1, 1, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let e = m.interior_edges().next().unwrap();
        let (k, l) = m.edge_cells()[e];
        let nk = g.normal_from(&m, e, k);
        let nl = g.normal_from(&m, e, l.unwrap());
        let dot = nk[0] * nl[0] + nk[1] * nl[1];
        assert!((dot + 1.0).abs() < 1e-15);
        assert!((nk[0].hypot(nk[1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let m = build_structured(3, 2, Rect::new([0.0, 0.0], [2.0, 1.0])).unwrap();
        let g = compute_geometry(&m).unwrap();
        for grads in &g.bary_gradients {
            let s = [grads[0][0] + grads[1][0] + grads[2][0], grads[0][1] + grads[1][1] + grads[2][1]];
            assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
        }
    }

    #[test]
    fn structured_theta_and_shape_bound() {
        let m = build_structured(4, 4, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let q = regularity_theta(&m, &g);
        assert!((q.theta - (SQRT2 - 1.0)).abs() < 1e-12);
        assert!(q.per_edge_ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        assert!(q.shape_violations.is_empty());
        assert!((g.domain_measure - 1.0).abs() < 1e-12);
    }
}
