use serde::{Deserialize, Serialize};

use crate::cr_space::{CellField, DofMap, VelocityField};
use crate::mesh::{GeometryTables, Mesh};
use crate::sparse::norm2;

use super::{mass_row_residuals, MomentumSystem, SchemeParams};

/// Nondimensional residuals of the nonlinear discrete system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualTriple {
    /// `|A u - b - B^T p|_2 / |b|_2` (unscaled when the load vanishes).
    pub momentum: f64,
    /// `max_K |R_K| / (|K| rho*)` over the mass-balance rows, i.e. the largest
    /// cell average of the mass-balance defect relative to `rho*`.
    pub mass: f64,
    /// `|int rho - M| / M`
    pub mass_defect: f64,
}

impl ResidualTriple {
    pub fn combined(&self) -> f64 {
        self.momentum + self.mass + self.mass_defect
    }

    pub fn is_finite(&self) -> bool {
        self.momentum.is_finite() && self.mass.is_finite() && self.mass_defect.is_finite()
    }
}

/// Evaluates both balances at `(u, p)` with `rho = a p`.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_residual(
    mesh: &Mesh,
    geo: &GeometryTables,
    dofs: &DofMap,
    momentum: &MomentumSystem,
    params: &SchemeParams,
    u: &VelocityField,
    p: &CellField,
    source: Option<&[f64]>,
) -> ResidualTriple {
    let x = dofs.scatter(u);
    let au = momentum.stiffness.mul_vec(&x);
    let btp = momentum.coupling.transpose_mul_vec(&p.values);
    let r: Vec<f64> = au.iter().zip(&momentum.load).zip(&btp).map(|((a, b), c)| a - b - c).collect();
    let bnorm = norm2(&momentum.load);
    let momentum_res = if bnorm > 0.0 { norm2(&r) / bnorm } else { norm2(&r) };

    let rho = p.scaled(params.a);
    let rows = mass_row_residuals(mesh, geo, u, &rho, params, source);
    let rho_star = params.rho_star(geo.domain_measure);
    let mass = rows.iter().zip(&geo.cell_measure).fold(0.0f64, |m, (v, a)| m.max(v.abs() / a)) / rho_star;
    let mass_defect = (rho.integral(geo) - params.mass).abs() / params.mass;
    ResidualTriple { momentum: momentum_res, mass, mass_defect }
}
