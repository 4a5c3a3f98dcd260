use super::basis::broken_gradient;
use super::{broken_gradient_vec, CRFunction, CellField, VelocityField};
use crate::fields::ScalarField;
use crate::mesh::{GeometryTables, Mesh};
use crate::quadrature::{bary_to_point, triangle_rule};

/// `(sum_K |K| |grad v|_K|^2)^{1/2}`
pub fn broken_h1_seminorm(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> f64 {
    broken_gradient(mesh, geo, v)
        .iter()
        .zip(&geo.cell_measure)
        .map(|(g, a)| a * (g[0] * g[0] + g[1] * g[1]))
        .sum::<f64>()
        .sqrt()
}

pub fn broken_h1_seminorm_vec(mesh: &Mesh, geo: &GeometryTables, u: &VelocityField) -> f64 {
    broken_gradient_vec(mesh, geo, u)
        .iter()
        .zip(&geo.cell_measure)
        .map(|(j, a)| a * j.iter().flatten().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Weighted finite-volume seminorm
/// `(sum_{sigma = K|L} (h_K + h_L)^beta |sigma| / h_sigma (q_K - q_L)^2)^{1/2}`.
pub fn discrete_rho_seminorm(mesh: &Mesh, geo: &GeometryTables, q: &CellField, beta: f64) -> f64 {
    mesh.interior_edges()
        .map(|e| {
            let (k, l) = mesh.edge_cells()[e];
            let l = l.expect("interior edge");
            let w = (geo.cell_diameter[k] + geo.cell_diameter[l]).powf(beta) * geo.edge_measure[e]
                / geo.edge_diameter[e];
            w * (q.values[k] - q.values[l]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Traces of the cell-`cell` representative at the two endpoints of `edge`.
fn edge_trace(mesh: &Mesh, v: &CRFunction, cell: usize, edge: usize) -> [f64; 2] {
    let t = v.vertex_traces(mesh, cell);
    let verts = mesh.cells()[cell];
    let [a, b] = mesh.edges()[edge];
    let pos = |x: usize| verts.iter().position(|&y| y == x).expect("edge vertex in cell");
    [t[pos(a)], t[pos(b)]]
}

/// Per edge `(int_sigma [v], int_sigma [v]^2)` with `[v] = v_K - v_L` on interior
/// edges and `[v] = v` on the boundary. The jump is affine along the edge so
/// both integrals are evaluated exactly from the endpoint values.
pub fn edge_jump_integrals(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> Vec<(f64, f64)> {
    (0..mesh.n_edges())
        .map(|e| {
            let (k, l) = mesh.edge_cells()[e];
            let tk = edge_trace(mesh, v, k, e);
            let j = match l {
                Some(l) => {
                    let tl = edge_trace(mesh, v, l, e);
                    [tk[0] - tl[0], tk[1] - tl[1]]
                }
                None => tk,
            };
            let len = geo.edge_measure[e];
            (
                0.5 * len * (j[0] + j[1]),
                len * (j[0] * j[0] + j[0] * j[1] + j[1] * j[1]) / 3.0,
            )
        })
        .collect()
}

/// `sum_sigma h_sigma^{-1} int_sigma [v]^2` over all edges.
pub fn jump_sum(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> f64 {
    edge_jump_integrals(mesh, geo, v)
        .iter()
        .enumerate()
        .map(|(e, (_, sq))| sq / geo.edge_diameter[e])
        .sum()
}

/// `||v||_{L^2}`, exact for the piecewise affine field.
pub fn l2_norm(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> f64 {
    let rule = triangle_rule(2);
    (0..mesh.n_cells())
        .map(|k| {
            geo.cell_measure[k]
                * rule.iter().map(|&(lam, w)| w * v.eval_bary(mesh, k, lam).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `(||v - f||_{L^2}, ||grad_h v - grad f||_{L^2})` by cell quadrature with an
/// `n x n` collapsed rule.
pub fn l2_error(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction, f: &dyn ScalarField, n: usize) -> (f64, f64) {
    let rule = triangle_rule(n);
    let grads = broken_gradient(mesh, geo, v);
    let (mut e0, mut e1) = (0.0, 0.0);
    for k in 0..mesh.n_cells() {
        let p = mesh.cell_points(k);
        let (mut s0, mut s1) = (0.0, 0.0);
        for &(lam, w) in &rule {
            let x = bary_to_point(&p, lam);
            s0 += w * (v.eval_bary(mesh, k, lam) - f.value(x)).powi(2);
            let gf = f.gradient(x);
            s1 += w * ((grads[k][0] - gf[0]).powi(2) + (grads[k][1] - gf[1]).powi(2));
        }
        e0 += geo.cell_measure[k] * s0;
        e1 += geo.cell_measure[k] * s1;
    }
    (e0.sqrt(), e1.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_space::interpolate_rh;
    use crate::fields::Affine;
    use crate::mesh::{build_structured, compute_geometry, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(mesh: &Mesh, seed: u64) -> CRFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = CRFunction::zeros(mesh);
        for e in mesh.interior_edges() {
            v.values[e] = rng.gen_range(-1.0..1.0);
        }
        v
    }

    #[test]
    fn x1_seminorm_is_one() {
        let m = build_structured(4, 4, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = interpolate_rh(&m, &Affine { a: 0.0, b: [1.0, 0.0] }, 3).unwrap();
        assert!((broken_h1_seminorm(&m, &g, &v).powi(2) - 1.0).abs() < 1e-13);
        assert_eq!(broken_h1_seminorm(&m, &g, &CRFunction::zeros(&m)), 0.0);
    }

    #[test]
    fn seminorm_matches_cellwise_dense_oracle() {
        // oracle: per cell fit c0 + c1 x + c2 y through the edge midpoints with
        // Cramer's rule, then sum |K| (c1^2 + c2^2)
        let m = build_structured(3, 2, Rect::new([0.0, 0.0], [1.0, 2.0])).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = random_field(&m, 7);
        let mut sum = 0.0;
        for k in 0..m.n_cells() {
            let es = m.cell_edges()[k];
            let c: Vec<[f64; 2]> = es.iter().map(|&e| g.edge_centroid[e]).collect();
            let f: Vec<f64> = es.iter().map(|&e| v.values[e]).collect();
            let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
            let gx = ((f[1] - f[0]) * (c[2][1] - c[0][1]) - (f[2] - f[0]) * (c[1][1] - c[0][1])) / det;
            let gy = ((c[1][0] - c[0][0]) * (f[2] - f[0]) - (c[2][0] - c[0][0]) * (f[1] - f[0])) / det;
            sum += g.cell_measure[k] * (gx * gx + gy * gy);
        }
        assert!((broken_h1_seminorm(&m, &g, &v) - sum.sqrt()).abs() < 1e-12 * sum.sqrt());
    }

    #[test]
    fn rho_seminorm_two_cells() {
        let m = build_structured(1, 1, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let q = CellField::from_values(vec![0.0, 1.0]);
        let expect = (2.0 * std::f64::consts::SQRT_2).sqrt();
        assert!((discrete_rho_seminorm(&m, &g, &q, 1.0) - expect).abs() < 1e-14);
        let q2 = q.scaled(2.0);
        assert!((discrete_rho_seminorm(&m, &g, &q2, 1.0) - 2.0 * expect).abs() < 1e-14);
        assert_eq!(discrete_rho_seminorm(&m, &g, &CellField::constant(&m, 3.0), 1.0), 0.0);
    }

    #[test]
    fn interior_mean_jumps_vanish() {
        let m = build_structured(4, 3, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = random_field(&m, 11);
        for (e, (mean, _)) in edge_jump_integrals(&m, &g, &v).iter().enumerate() {
            if !m.is_boundary(e) {
                assert!(mean.abs() < 1e-13, "edge {e}: {mean}");
            }
        }
    }

    #[test]
    fn continuous_affine_has_no_interior_jumps() {
        let m = build_structured(3, 3, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = interpolate_rh(&m, &Affine { a: 1.0, b: [0.5, 2.0] }, 2).unwrap();
        for (e, (mean, sq)) in edge_jump_integrals(&m, &g, &v).iter().enumerate() {
            if !m.is_boundary(e) {
                assert!(mean.abs() < 1e-13 && sq.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jump_integrals_match_quadrature() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = random_field(&m, 3);
        let jumps = edge_jump_integrals(&m, &g, &v);
        for e in 0..m.n_edges() {
            let (k, l) = m.edge_cells()[e];
            let [a, b] = m.edge_points(e);
            let jump = |x: [f64; 2]| {
                let vk = v.eval(&m, &g, k, x);
                vk - l.map_or(0.0, |l| v.eval(&m, &g, l, x))
            };
            let q1 = crate::quadrature::integrate_segment(a, b, 3, |x| jump(x));
            let q2 = crate::quadrature::integrate_segment(a, b, 3, |x| jump(x).powi(2));
            assert!((jumps[e].0 - q1).abs() < 1e-13);
            assert!((jumps[e].1 - q2).abs() < 1e-13);
        }
    }

    #[test]
    fn l2_norm_of_constant_part() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = interpolate_rh(&m, &Affine { a: 2.0, b: [0.0, 0.0] }, 1).unwrap();
        assert!((l2_norm(&m, &g, &v) - 2.0).abs() < 1e-13);
        let (e0, e1) = l2_error(&m, &g, &v, &Affine { a: 2.0, b: [0.0, 0.0] }, 3);
        assert!(e0 < 1e-13 && e1 < 1e-13);
    }
}
