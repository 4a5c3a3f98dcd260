use serde::Serialize;

use crate::cr_space::{broken_divergence, discrete_rho_seminorm};
use crate::error::{invalid, Result};
use crate::mesh::{GeometryTables, Mesh};
use crate::scheme::{edge_velocity_flux, mass_row_residuals, stabilization_weight, upwind_density, SchemeParams};
use crate::solver::Solution;

/// Logarithmic mean `(a - b) / (log a - log b)`, equal to `a` when `a == b`.
///
/// Errors on nonpositive or non-finite input, or if rounding pushed the value
/// outside `[min(a, b), max(a, b)]`.
pub fn log_mean_bracket(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return invalid(format!("log mean needs positive finite arguments, got ({a}, {b})"));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == hi {
        return Ok(lo);
    }
    let x = (hi - lo) / lo;
    let m = if x.is_finite() {
        // x / ln(1 + x) keeps full precision as hi -> lo
        lo * (x / x.ln_1p())
    } else {
        (hi - lo) / (hi.ln() - lo.ln())
    };
    if !(lo <= m && m <= hi) {
        return invalid(format!("log mean {m:e} of ({a:e}, {b:e}) left its bracket"));
    }
    Ok(m)
}

/// Terms of the density-logarithm energy balance for one discrete solution.
///
/// With `R_K` the nonlinear mass-balance row of cell `K`,
/// `t1 + t2 + t3 = A^{-1} sum_K (1 + log rho_K) R_K`, which vanishes at an
/// exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBreakdown {
    /// Convection term via the flux reordering with the log mean.
    pub t1: f64,
    /// Convection term as the direct cellwise sum.
    pub t1_direct: f64,
    /// Sum of the magnitudes of the summands of both forms of `t1`; the scale
    /// of their rounding error.
    pub t1_scale: f64,
    pub t2: f64,
    pub t3: f64,
    /// `int p div_h u`
    pub pdivu: f64,
    /// `|rho|_disc^2`
    pub seminorm_sq: f64,
    /// `A^{-1} h^alpha sum_K |K| (rho_K log rho_K - rho* log rho*)`
    pub t2_bound: f64,
    /// `A^{-1} sum_K (1 + log rho_K) R_K`
    pub residual_pairing: f64,
}

impl EntropyBreakdown {
    pub fn sum(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }

    /// Slacks of the three lower bounds: `t1 - pdivu`, `t2 - t2_bound`,
    /// `t3 - seminorm_sq / A`.
    pub fn slacks(&self, a: f64) -> [f64; 3] {
        [self.t1 - self.pdivu, self.t2 - self.t2_bound, self.t3 - self.seminorm_sq / a]
    }

    /// Relative disagreement of the two summation orders of `t1`.
    pub fn t1_mismatch(&self) -> f64 {
        let d = (self.t1 - self.t1_direct).abs();
        if self.t1_scale > 0.0 {
            d / self.t1_scale
        } else {
            d
        }
    }

    /// All bounds hold up to `-tol` and the sum is within `tol` of zero.
    pub fn holds(&self, a: f64, tol: f64) -> bool {
        self.slacks(a).iter().all(|s| *s >= -tol) && self.sum().abs() <= tol
    }
}

pub fn audit_entropy(mesh: &Mesh, geo: &GeometryTables, solution: &Solution, params: &SchemeParams) -> Result<EntropyBreakdown> {
    let rho = &solution.rho;
    if let Some(k) = rho.values.iter().position(|r| !(*r > 0.0)) {
        return invalid(format!("entropy audit needs positive density, cell {k} has {}", rho.values[k]));
    }
    let inv_a = 1.0 / params.a;
    let logs: Vec<f64> = rho.values.iter().map(|r| r.ln()).collect();
    let u = &solution.u;

    let (mut t1_direct, mut t1_scale) = (0.0, 0.0);
    for k in 0..mesh.n_cells() {
        let mut s = 0.0;
        for &e in &mesh.cell_edges()[k] {
            if let Some(l) = mesh.neighbor(k, e) {
                let v = edge_velocity_flux(mesh, geo, u, e, k)?;
                s += v.max(0.0) * rho.values[k] - (-v).max(0.0) * rho.values[l];
            }
        }
        t1_direct += logs[k] * s;
        t1_scale += (logs[k] * s).abs();
    }
    t1_direct *= inv_a;
    t1_scale *= inv_a;

    let div = broken_divergence(mesh, geo, u);
    let pdivu_terms: Vec<f64> = (0..mesh.n_cells()).map(|k| solution.p.values[k] * geo.cell_measure[k] * div[k]).collect();
    let pdivu: f64 = pdivu_terms.iter().sum();
    t1_scale += pdivu_terms.iter().map(|x| x.abs()).sum::<f64>();

    let (mut reorder, mut t3) = (0.0, 0.0);
    for e in mesh.interior_edges() {
        let (k, l) = mesh.edge_cells()[e];
        let l = l.expect("interior edge");
        let (rk, rl) = (rho.values[k], rho.values[l]);
        let v = edge_velocity_flux(mesh, geo, u, e, k)?;
        let dlog = logs[k] - logs[l];
        let term = v * (upwind_density(rk, rl, v) - log_mean_bracket(rk, rl)?) * dlog;
        reorder += term;
        t1_scale += inv_a * term.abs();
        t3 += stabilization_weight(mesh, geo, e, params.beta) * (rk + rl) * (rk - rl) * dlog;
    }
    let t1 = pdivu + inv_a * reorder;
    t3 *= inv_a;

    let anchor = geo.h.powf(params.alpha);
    let rho_star = params.rho_star(geo.domain_measure);
    let (mut t2, mut t2_bound) = (0.0, 0.0);
    for k in 0..mesh.n_cells() {
        let (r, a) = (rho.values[k], geo.cell_measure[k]);
        t2 += a * (1.0 + logs[k]) * (r - rho_star);
        t2_bound += a * (r * logs[k] - rho_star * rho_star.ln());
    }
    t2 *= inv_a * anchor;
    t2_bound *= inv_a * anchor;

    let rows = mass_row_residuals(mesh, geo, u, rho, params, None);
    let residual_pairing = inv_a * rows.iter().zip(&logs).map(|(r, lg)| (1.0 + lg) * r).sum::<f64>();
    let seminorm_sq = discrete_rho_seminorm(mesh, geo, rho, params.beta).powi(2);

    Ok(EntropyBreakdown { t1, t1_direct, t1_scale, t2, t3, pdivu, seminorm_sq, t2_bound, residual_pairing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_space::{CellField, VelocityField};
    use crate::mesh::{build_structured, compute_geometry, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_mean_values() {
        assert_eq!(log_mean_bracket(2.5, 2.5).unwrap(), 2.5);
        let e = std::f64::consts::E;
        assert!((log_mean_bracket(1.0, e).unwrap() - (e - 1.0)).abs() < 1e-15);
        assert_eq!(log_mean_bracket(3.0, 7.0).unwrap(), log_mean_bracket(7.0, 3.0).unwrap());
        let m = log_mean_bracket(1.0, 1.0 + 1e-12).unwrap();
        assert!(m >= 1.0 && m <= 1.0 + 1e-12);
        let m = log_mean_bracket(1e-300, 1e300).unwrap();
        assert!((m / (1e300 / (1e300f64.ln() - 1e-300f64.ln())) - 1.0).abs() < 1e-12);
        assert!(log_mean_bracket(0.0, 1.0).is_err());
        assert!(log_mean_bracket(-1.0, 1.0).is_err());
        assert!(log_mean_bracket(f64::NAN, 1.0).is_err());
    }

    fn random_state(n: usize, seed: u64) -> (Mesh, GeometryTables, Solution, SchemeParams) {
        let m = build_structured(n, n, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let params = SchemeParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = VelocityField::zeros(&m);
        for e in m.interior_edges() {
            u.components[0].values[e] = rng.gen_range(-1.0..1.0);
            u.components[1].values[e] = rng.gen_range(-1.0..1.0);
        }
        let rho = CellField::from_values((0..m.n_cells()).map(|_| rng.gen_range(0.1..3.0)).collect());
        let sol = Solution { u, p: rho.scaled(0.5), rho, params };
        (m, g, sol, params)
    }

    #[test]
    fn identity_and_bounds_for_arbitrary_states() {
        // the algebra holds for any positive rho and any u, solution or not
        for seed in 0..5 {
            let (m, g, sol, params) = random_state(5, seed);
            let e = audit_entropy(&m, &g, &sol, &params).unwrap();
            assert!(e.t1_mismatch() < 1e-12, "{e:?}");
            let scale = e.t1_scale + e.t2.abs() + e.t3.abs();
            assert!((e.sum() - e.residual_pairing).abs() < 1e-12 * scale, "{e:?}");
            assert!(e.slacks(params.a).iter().all(|s| *s >= -1e-12 * scale), "{e:?}");
        }
    }

    #[test]
    fn rest_state_is_tight() {
        let m = build_structured(3, 3, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let params = SchemeParams::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let rho = CellField::constant(&m, 2.0);
        let sol = Solution { u: VelocityField::zeros(&m), p: rho.clone(), rho, params };
        let e = audit_entropy(&m, &g, &sol, &params).unwrap();
        for v in [e.t1, e.t1_direct, e.t2, e.t3, e.pdivu, e.seminorm_sq, e.residual_pairing] {
            assert!(v.abs() < 1e-14, "{e:?}");
        }
        assert!(e.t2_bound.abs() < 1e-14);
    }

    #[test]
    fn uniform_density_has_no_diffusion() {
        let (m, g, mut sol, params) = random_state(4, 9);
        sol.rho = CellField::constant(&m, 1.5);
        sol.p = sol.rho.scaled(0.5);
        let e = audit_entropy(&m, &g, &sol, &params).unwrap();
        assert_eq!(e.t3, 0.0);
        assert_eq!(e.seminorm_sq, 0.0);
    }

    #[test]
    fn nonpositive_density_rejected() {
        let (m, g, mut sol, params) = random_state(2, 1);
        sol.rho.values[0] = 0.0;
        assert!(audit_entropy(&m, &g, &sol, &params).is_err());
    }
}
