use crate::cr_space::{basis_gradient, DofMap};
use crate::error::{invalid, Result};
use crate::mesh::{GeometryTables, Mesh, Point};
use crate::quadrature::{bary_to_point, triangle_rule};
use crate::sparse::CsrMatrix;

/// Linear part of the momentum balance on the free velocity unknowns:
/// `stiffness u - coupling^T p = load`.
#[derive(Debug, Clone)]
pub struct MomentumSystem {
    /// Broken vector Laplacian, block diagonal over the two components.
    pub stiffness: CsrMatrix,
    /// One diagonal block of `stiffness`.
    pub scalar_stiffness: CsrMatrix,
    /// Cells x velocity: `coupling[K, (sigma, i)] = int_K d_i phi_sigma`.
    pub coupling: CsrMatrix,
    /// `load[(sigma, i)] = int f_i phi_sigma`.
    pub load: Vec<f64>,
}

/// Assembles the momentum operators. `quad_order` is the number of collapsed
/// Gauss points per direction used for the load vector.
pub fn assemble_momentum(
    mesh: &Mesh,
    geo: &GeometryTables,
    dofs: &DofMap,
    forcing: &dyn Fn(Point) -> [f64; 2],
    quad_order: usize,
) -> Result<MomentumSystem> {
    if quad_order < 1 {
        return invalid("load quadrature order must be at least 1");
    }
    let n = dofs.n_free();
    let mut lap = Vec::with_capacity(9 * mesh.n_cells());
    let mut coup = Vec::with_capacity(6 * mesh.n_cells());
    let mut load = vec![0.0; 2 * n];
    let rule = triangle_rule(quad_order);
    for k in 0..mesh.n_cells() {
        let area = geo.cell_measure[k];
        let edges = mesh.cell_edges()[k];
        let grads: [Point; 3] = std::array::from_fn(|i| basis_gradient(geo, k, i));
        let p = mesh.cell_points(k);
        let fq: Vec<([f64; 3], f64, [f64; 2])> =
            rule.iter().map(|&(lam, w)| (lam, w, forcing(bary_to_point(&p, lam)))).collect();
        for i in 0..3 {
            let Some(di) = dofs.free_index(edges[i]) else { continue };
            for j in 0..3 {
                let Some(dj) = dofs.free_index(edges[j]) else { continue };
                let v = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                lap.push((di, dj, v));
            }
            for c in 0..2 {
                coup.push((k, c * n + di, area * grads[i][c]));
                let s: f64 = fq.iter().map(|(lam, w, f)| w * f[c] * (1.0 - 2.0 * lam[i])).sum();
                load[c * n + di] += area * s;
            }
        }
    }
    let scalar_stiffness = CsrMatrix::from_triplets(n, n, &lap);
    let mut vec_lap = lap.clone();
    vec_lap.extend(lap.iter().map(|&(i, j, v)| (i + n, j + n, v)));
    Ok(MomentumSystem {
        stiffness: CsrMatrix::from_triplets(2 * n, 2 * n, &vec_lap),
        scalar_stiffness,
        coupling: CsrMatrix::from_triplets(mesh.n_cells(), 2 * n, &coup),
        load,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_space::{broken_divergence, VelocityField};
    use crate::mesh::{build_structured, compute_geometry, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(nx: usize) -> (Mesh, GeometryTables, DofMap) {
        let m = build_structured(nx, nx, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let d = DofMap::new(&m);
        (m, g, d)
    }

    #[test]
    fn zero_forcing_zero_load() {
        let (m, g, d) = setup(3);
        let sys = assemble_momentum(&m, &g, &d, &|_| [0.0, 0.0], 3).unwrap();
        assert!(sys.load.iter().all(|&b| b == 0.0));
        assert!(assemble_momentum(&m, &g, &d, &|_| [0.0, 0.0], 0).is_err());
    }

    #[test]
    fn stiffness_is_symmetric() {
        let (m, g, d) = setup(4);
        let sys = assemble_momentum(&m, &g, &d, &|_| [1.0, 0.0], 2).unwrap();
        let a = &sys.stiffness;
        let t = a.transpose();
        let scale = a.max_abs();
        for (i, j, v) in a.triplets() {
            assert!((v - t.get(i, j)).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn coupling_row_is_cell_divergence() {
        // oracle: |K| times the trace of the cellwise Jacobian of v
        let (m, g, d) = setup(1);
        let sys = assemble_momentum(&m, &g, &d, &|_| [0.0, 0.0], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = VelocityField::zeros(&m);
        for e in m.interior_edges() {
            u.components[0].values[e] = rng.gen_range(-1.0..1.0);
            u.components[1].values[e] = rng.gen_range(-1.0..1.0);
        }
        let bv = sys.coupling.mul_vec(&d.scatter(&u));
        let div = broken_divergence(&m, &g, &u);
        for k in 0..m.n_cells() {
            assert!((bv[k] - g.cell_measure[k] * div[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_annihilates_constants() {
        let (m, g, d) = setup(4);
        let sys = assemble_momentum(&m, &g, &d, &|_| [0.0, 0.0], 1).unwrap();
        let bt1 = sys.coupling.transpose_mul_vec(&vec![1.0; m.n_cells()]);
        assert!(bt1.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_forcing_load_matches_area_weights() {
        // int_K phi_sigma = |K| / 3 for every local shape function
        let (m, g, d) = setup(2);
        let sys = assemble_momentum(&m, &g, &d, &|_| [1.0, 2.0], 2).unwrap();
        let n = d.n_free();
        for (i, &e) in d.free_edges().iter().enumerate() {
            let (k, l) = m.edge_cells()[e];
            let expect = (g.cell_measure[k] + g.cell_measure[l.unwrap()]) / 3.0;
            assert!((sys.load[i] - expect).abs() < 1e-14);
            assert!((sys.load[n + i] - 2.0 * expect).abs() < 1e-14);
        }
    }
}
