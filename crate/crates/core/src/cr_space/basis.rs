use super::{CRFunction, VelocityField};
use crate::error::{invalid, Result};
use crate::mesh::{barycentric_coords, GeometryTables, Mesh, Point};

/// Shape function of `edge` restricted to `cell`, evaluated at `x`:
/// `1 - 2 lambda_opp(x)` with `lambda_opp` the barycentric coordinate of the
/// vertex opposite the edge.
pub fn eval_basis(mesh: &Mesh, geo: &GeometryTables, edge: usize, cell: usize, x: Point) -> Result<f64> {
    let Some(local) = mesh.local_edge_index(cell, edge) else {
        return invalid(format!("edge {edge} is not an edge of cell {cell}"));
    };
    let lam = barycentric_coords(mesh, geo, cell, x);
    Ok(1.0 - 2.0 * lam[local])
}

/// Gradient of the local shape function of local edge `i` on `cell`.
#[inline]
pub(crate) fn basis_gradient(geo: &GeometryTables, cell: usize, i: usize) -> Point {
    let g = geo.bary_gradients[cell][i];
    [-2.0 * g[0], -2.0 * g[1]]
}

/// Cellwise gradient of the affine representative.
pub fn broken_gradient(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> Vec<Point> {
    (0..mesh.n_cells())
        .map(|k| {
            let vals = v.local(mesh, k);
            let mut g = [0.0; 2];
            for (i, vi) in vals.iter().enumerate() {
                let gi = basis_gradient(geo, k, i);
                g[0] += vi * gi[0];
                g[1] += vi * gi[1];
            }
            g
        })
        .collect()
}

/// Cellwise Jacobian: row `i` is the gradient of component `i`.
pub fn broken_gradient_vec(mesh: &Mesh, geo: &GeometryTables, u: &VelocityField) -> Vec<[Point; 2]> {
    let gx = broken_gradient(mesh, geo, &u.components[0]);
    let gy = broken_gradient(mesh, geo, &u.components[1]);
    gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect()
}

/// Cellwise divergence, the trace of [`broken_gradient_vec`].
pub fn broken_divergence(mesh: &Mesh, geo: &GeometryTables, u: &VelocityField) -> Vec<f64> {
    broken_gradient_vec(mesh, geo, u).iter().map(|j| j[0][0] + j[1][1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, compute_geometry, Rect};

    fn unit_triangle() -> (Mesh, GeometryTables) {
        let m = Mesh::from_cells(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let g = compute_geometry(&m).unwrap();
        (m, g)
    }

    #[test]
    fn basis_values() {
        let (m, g) = unit_triangle();
        for local in 0..3 {
            let e = m.cell_edges()[0][local];
            let mid = g.edge_centroid[e];
            assert!((eval_basis(&m, &g, e, 0, mid).unwrap() - 1.0).abs() < 1e-15);
            for other in 0..3 {
                if other != local {
                    let e2 = m.cell_edges()[0][other];
                    let v = eval_basis(&m, &g, e, 0, g.edge_centroid[e2]).unwrap();
                    assert!(v.abs() < 1e-15);
                }
            }
            let opp = m.vertices()[m.cells()[0][local]];
            assert!((eval_basis(&m, &g, e, 0, opp).unwrap() + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_rejects_foreign_edge() {
        let m = build_structured(2, 1, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let foreign = (0..m.n_edges()).find(|e| !m.cell_edges()[0].contains(e)).unwrap();
        assert!(eval_basis(&m, &g, foreign, 0, [0.1, 0.1]).is_err());
    }

    #[test]
    fn gradient_matches_dense_affine_fit() {
        // oracle: solve for (c0, c1, c2) with c0 + c1 x + c2 y matching the
        // three edge midpoint values (edge mean of an affine function)
        let m = Mesh::from_cells(vec![[0.2, 0.1], [1.3, 0.4], [0.5, 1.1]], vec![[0, 1, 2]]).unwrap();
        let g = compute_geometry(&m).unwrap();
        let vals = [0.7, -1.2, 2.5];
        let mut v = CRFunction::zeros(&m);
        for (i, &e) in m.cell_edges()[0].iter().enumerate() {
            v.values[e] = vals[i];
        }
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (i, &e) in m.cell_edges()[0].iter().enumerate() {
            let c = g.edge_centroid[e];
            a[i] = [1.0, c[0], c[1]];
            b[i] = vals[i];
        }
        let coef = solve3(a, b);
        let grad = broken_gradient(&m, &g, &v)[0];
        assert!((grad[0] - coef[1]).abs() < 1e-12);
        assert!((grad[1] - coef[2]).abs() < 1e-12);
    }

    fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(a);
        let mut x = [0.0; 3];
        for (j, xj) in x.iter_mut().enumerate() {
            let mut aj = a;
            for i in 0..3 {
                aj[i][j] = b[i];
            }
            *xj = det(aj) / d;
        }
        x
    }

    #[test]
    fn zero_field_has_zero_gradient() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let grads = broken_gradient(&m, &g, &CRFunction::zeros(&m));
        assert!(grads.iter().all(|g| g == &[0.0, 0.0]));
    }
}
