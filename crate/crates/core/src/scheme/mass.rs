use crate::cr_space::{CellField, VelocityField};
use crate::error::{invalid, Result};
use crate::mesh::{GeometryTables, Mesh};
use crate::sparse::{CsrMatrix, DofSpace, SparseSystem};

use super::SchemeParams;

/// `v_{sigma,K} = |sigma| u_sigma . n_{K,sigma}` with the normal pointing out of `cell`.
pub fn edge_velocity_flux(
    mesh: &Mesh,
    geo: &GeometryTables,
    u: &VelocityField,
    edge: usize,
    cell: usize,
) -> Result<f64> {
    if mesh.is_boundary(edge) {
        return invalid(format!("edge {edge} is on the boundary and carries no flux"));
    }
    let (k, l) = mesh.edge_cells()[edge];
    if cell != k && Some(cell) != l {
        return invalid(format!("cell {cell} is not incident to edge {edge}"));
    }
    Ok(flux_unchecked(mesh, geo, u, edge, cell))
}

fn flux_unchecked(mesh: &Mesh, geo: &GeometryTables, u: &VelocityField, edge: usize, cell: usize) -> f64 {
    let n = geo.normal_from(mesh, edge, cell);
    let ue = u.at_edge(edge);
    geo.edge_measure[edge] * (ue[0] * n[0] + ue[1] * n[1])
}

/// Density carried by the flux `v` leaving `K`: `rho_K` for `v >= 0`, else `rho_L`.
pub fn upwind_density(rho_k: f64, rho_l: f64, v: f64) -> f64 {
    if v >= 0.0 {
        rho_k
    } else {
        rho_l
    }
}

/// Coefficient `(h_K + h_L)^beta |sigma| / h_sigma` of the density diffusion on an interior edge.
pub fn stabilization_weight(mesh: &Mesh, geo: &GeometryTables, edge: usize, beta: f64) -> f64 {
    let (k, l) = mesh.edge_cells()[edge];
    let l = l.expect("stabilization weight requested on a boundary edge");
    (geo.cell_diameter[k] + geo.cell_diameter[l]).powf(beta) * geo.edge_measure[edge]
        / geo.edge_diameter[edge]
}

fn check_velocity(u: &VelocityField) -> Result<()> {
    if !u.is_finite() {
        return invalid("velocity contains non-finite values");
    }
    Ok(())
}

fn check_source(source: Option<&[f64]>, mesh: &Mesh) -> Result<()> {
    if let Some(g) = source {
        if g.len() != mesh.n_cells() {
            return invalid(format!("mass source has {} entries for {} cells", g.len(), mesh.n_cells()));
        }
        let sum: f64 = g.iter().sum();
        let scale: f64 = g.iter().map(|v| v.abs()).sum();
        if !sum.is_finite() || sum.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return invalid(format!("mass source must sum to zero, got {sum:e}"));
        }
    }
    Ok(())
}

/// Frozen-weight linearization of the mass balance: the diffusion weight
/// `|rho_K + rho_L|` is taken from `rho_prev`. An optional zero-sum source
/// `g_K` is added to the right-hand side.
pub fn assemble_mass_balance(
    mesh: &Mesh,
    geo: &GeometryTables,
    u: &VelocityField,
    rho_prev: &CellField,
    params: &SchemeParams,
    source: Option<&[f64]>,
) -> Result<SparseSystem> {
    check_velocity(u)?;
    check_source(source, mesh)?;
    if rho_prev.values.iter().any(|r| !r.is_finite()) {
        return invalid("frozen density contains non-finite values");
    }
    let nc = mesh.n_cells();
    let anchor = geo.h.powf(params.alpha);
    let rho_star = params.rho_star(geo.domain_measure);
    let mut trips = Vec::with_capacity(4 * nc);
    let mut rhs = vec![0.0; nc];
    for k in 0..nc {
        let mut diag = anchor * geo.cell_measure[k];
        rhs[k] = anchor * geo.cell_measure[k] * rho_star + source.map_or(0.0, |g| g[k]);
        for &e in &mesh.cell_edges()[k] {
            let Some(l) = mesh.neighbor(k, e) else { continue };
            let v = flux_unchecked(mesh, geo, u, e, k);
            let d = stabilization_weight(mesh, geo, e, params.beta)
                * (rho_prev.values[k] + rho_prev.values[l]).abs();
            diag += v.max(0.0) + d;
            trips.push((k, l, -(-v).max(0.0) - d));
        }
        trips.push((k, k, diag));
    }
    Ok(SparseSystem { matrix: CsrMatrix::from_triplets(nc, nc, &trips), rhs, space: DofSpace::Cell })
}

/// Per-cell upwind flux balance `sum_sigma (v+ rho_K - v- rho_L)`.
pub fn upwind_flux_sums(mesh: &Mesh, geo: &GeometryTables, u: &VelocityField, rho: &CellField) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|k| {
            mesh.cell_edges()[k]
                .iter()
                .filter_map(|&e| mesh.neighbor(k, e).map(|l| (e, l)))
                .map(|(e, l)| {
                    let v = flux_unchecked(mesh, geo, u, e, k);
                    v * upwind_density(rho.values[k], rho.values[l], v)
                })
                .sum()
        })
        .collect()
}

/// Row values of the nonlinear mass balance at `(u, rho)`, with the diffusion
/// weight `|rho_K + rho_L|` evaluated on `rho` itself. Zero at a solution.
pub fn mass_row_residuals(
    mesh: &Mesh,
    geo: &GeometryTables,
    u: &VelocityField,
    rho: &CellField,
    params: &SchemeParams,
    source: Option<&[f64]>,
) -> Vec<f64> {
    let anchor = geo.h.powf(params.alpha);
    let rho_star = params.rho_star(geo.domain_measure);
    let flux = upwind_flux_sums(mesh, geo, u, rho);
    (0..mesh.n_cells())
        .map(|k| {
            let rk = rho.values[k];
            let diffusion: f64 = mesh.cell_edges()[k]
                .iter()
                .filter_map(|&e| mesh.neighbor(k, e).map(|l| (e, l)))
                .map(|(e, l)| {
                    let rl = rho.values[l];
                    stabilization_weight(mesh, geo, e, params.beta) * (rk + rl).abs() * (rk - rl)
                })
                .sum();
            flux[k] + anchor * geo.cell_measure[k] * (rk - rho_star) + diffusion
                - source.map_or(0.0, |g| g[k])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, compute_geometry, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> (Mesh, GeometryTables) {
        let m = build_structured(n, n, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        (m, g)
    }

    fn random_velocity(m: &Mesh, seed: u64) -> VelocityField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = VelocityField::zeros(m);
        for e in m.interior_edges() {
            u.components[0].values[e] = rng.gen_range(-1.0..1.0);
            u.components[1].values[e] = rng.gen_range(-1.0..1.0);
        }
        u
    }

    #[test]
    fn flux_on_diagonal_edge() {
        let (m, g) = square(1);
        let e = m.interior_edges().next().unwrap();
        let (k, l) = m.edge_cells()[e];
        let n = g.normal_from(&m, e, k);
        let mut u = VelocityField::zeros(&m);
        u.components[0].values[e] = n[0];
        u.components[1].values[e] = n[1];
        let v = edge_velocity_flux(&m, &g, &u, e, k).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        let w = edge_velocity_flux(&m, &g, &u, e, l.unwrap()).unwrap();
        assert!((w + 2f64.sqrt()).abs() < 1e-15);
        u.components[0].values[e] = -n[1];
        u.components[1].values[e] = n[0];
        assert!(edge_velocity_flux(&m, &g, &u, e, k).unwrap().abs() < 1e-15);
        let b = (0..m.n_edges()).find(|&e| m.is_boundary(e)).unwrap();
        assert!(edge_velocity_flux(&m, &g, &u, b, m.edge_cells()[b].0).is_err());
    }

    #[test]
    fn upwind_branches() {
        assert_eq!(upwind_density(2.0, 5.0, 3.0), 2.0);
        assert_eq!(3.0 * upwind_density(2.0, 5.0, 3.0), 6.0);
        assert_eq!(-3.0 * upwind_density(2.0, 5.0, -3.0), -15.0);
        assert_eq!(upwind_density(2.0, 5.0, 0.0), 2.0);
    }

    #[test]
    fn two_cell_system_at_rest() {
        // dense 2x2 oracle: [[a+d, -d], [-d, a+d]] with a = h|K|, d = (2 h_K)^1 * w
        let (m, g) = square(1);
        let p = SchemeParams::default();
        let rho_prev = CellField::from_values(vec![0.7, 0.7]);
        let sys = assemble_mass_balance(&m, &g, &VelocityField::zeros(&m), &rho_prev, &p, None).unwrap();
        let a = g.h * 0.5;
        let d = 2.0 * 2f64.sqrt() * 1.4;
        let dense = sys.matrix.to_dense();
        assert!((dense[(0, 0)] - (a + d)).abs() < 1e-14);
        assert!((dense[(0, 1)] + d).abs() < 1e-14);
        let det = (a + d) * (a + d) - d * d;
        let inv = [[(a + d) / det, d / det], [d / det, (a + d) / det]];
        assert!(inv.iter().flatten().all(|&x| x >= 0.0));
        let rho: Vec<f64> = (0..2).map(|i| inv[i][0] * sys.rhs[0] + inv[i][1] * sys.rhs[1]).collect();
        for r in rho {
            assert!((r - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_pattern_for_random_velocity() {
        let (m, g) = square(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho_prev = CellField::from_values((0..m.n_cells()).map(|_| rng.gen_range(0.1..3.0)).collect());
        let sys = assemble_mass_balance(&m, &g, &random_velocity(&m, 3), &rho_prev, &SchemeParams::default(), None)
            .unwrap();
        for (i, j, v) in sys.matrix.triplets() {
            if i == j {
                assert!(v > 0.0);
            } else {
                assert!(v <= 0.0);
            }
        }
        assert!(sys.rhs.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn fluxes_telescope() {
        let (m, g) = square(5);
        let u = random_velocity(&m, 8);
        let rho = CellField::from_values((0..m.n_cells()).map(|k| 1.0 + (k as f64).sin().abs()).collect());
        let s = upwind_flux_sums(&m, &g, &u, &rho);
        let scale: f64 = s.iter().map(|v| v.abs()).sum();
        assert!(s.iter().sum::<f64>().abs() <= 1e-12 * scale);
    }

    #[test]
    fn residual_vanishes_at_rest_state() {
        let (m, g) = square(3);
        let p = SchemeParams::default();
        let rho = CellField::constant(&m, p.rho_star(g.domain_measure));
        let r = mass_row_residuals(&m, &g, &VelocityField::zeros(&m), &rho, &p, None);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn residual_matches_frozen_system_at_same_density() {
        let (m, g) = square(3);
        let p = SchemeParams::new(0.5, 2.0, 1.0, 1.2).unwrap();
        let u = random_velocity(&m, 4);
        let rho = CellField::from_values((0..m.n_cells()).map(|k| 1.0 + 0.1 * k as f64).collect());
        let sys = assemble_mass_balance(&m, &g, &u, &rho, &p, None).unwrap();
        let lin = sys.residual(&rho.values);
        let nl = mass_row_residuals(&m, &g, &u, &rho, &p, None);
        for (a, b) in lin.iter().zip(&nl) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (m, g) = square(1);
        let p = SchemeParams::default();
        let rho = CellField::constant(&m, 1.0);
        let mut u = VelocityField::zeros(&m);
        assert!(assemble_mass_balance(&m, &g, &u, &rho, &p, Some(&[1.0, 1.0])).is_err());
        assert!(assemble_mass_balance(&m, &g, &u, &rho, &p, Some(&[1.0, -1.0])).is_ok());
        u.components[0].values[0] = f64::NAN;
        assert!(assemble_mass_balance(&m, &g, &u, &rho, &p, None).is_err());
    }
}
