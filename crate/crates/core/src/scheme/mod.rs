//! Discrete compressible Stokes system: CR momentum balance coupled to an
//! upwind finite-volume mass balance with two stabilization terms.

mod mass;
mod mmatrix;
mod momentum;
mod residual;

pub use mass::{
    assemble_mass_balance, edge_velocity_flux, mass_row_residuals, stabilization_weight,
    upwind_density, upwind_flux_sums,
};
pub use mmatrix::{verify_m_matrix, MMatrixReport, MMatrixViolation};
pub use momentum::{assemble_momentum, MomentumSystem};
pub use residual::{nonlinear_residual, ResidualTriple};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical and stabilization parameters.
///
/// `a` is the slope of the linear equation of state `rho = a p`, `mass` the
/// prescribed total mass. `alpha` and `beta` are the exponents of the mass
/// anchor `h^alpha |K| (rho_K - rho*)` and of the density diffusion weight
/// `(h_K + h_L)^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeParams {
    pub a: f64,
    pub mass: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams { a: 1.0, mass: 1.0, alpha: 1.0, beta: 1.0 }
    }
}

impl SchemeParams {
    /// Rejects `a <= 0`, `mass <= 0`, `alpha < 1` and `beta` outside `(0, 2)`.
    pub fn new(a: f64, mass: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = SchemeParams { a, mass, alpha, beta };
        p.validate(false)?;
        Ok(p)
    }

    /// Like [`SchemeParams::new`] but only warns when the exponents leave the
    /// range covered by the convergence theory.
    pub fn new_relaxed(a: f64, mass: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = SchemeParams { a, mass, alpha, beta };
        p.validate(true)?;
        Ok(p)
    }

    pub fn validate(&self, allow_exponents: bool) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return invalid(format!("equation-of-state slope must be positive, got {}", self.a));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return invalid(format!("total mass must be positive, got {}", self.mass));
        }
        let exponents_ok = self.alpha >= 1.0 && self.beta > 0.0 && self.beta < 2.0;
        if !exponents_ok {
            if !(self.alpha.is_finite() && self.beta.is_finite()) {
                return invalid("stabilization exponents must be finite");
            }
            let msg = format!(
                "stabilization exponents alpha = {}, beta = {} outside alpha >= 1, 0 < beta < 2",
                self.alpha, self.beta
            );
            if allow_exponents {
                log::warn!("{msg}");
            } else {
                return invalid(msg);
            }
        }
        Ok(())
    }

    /// Mean density `M / |Omega|`.
    pub fn rho_star(&self, domain_measure: f64) -> f64 {
        self.mass / domain_measure
    }
}
