//! Damped Picard iteration alternating a positivity-preserving mass solve with
//! a linear momentum solve.

pub mod linear;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cr_space::{CellField, DofMap, VelocityField};
use crate::error::{invalid, Error, Result};
use crate::mesh::{compute_geometry, GeometryTables, Mesh, Point};
use crate::scheme::{
    assemble_mass_balance, assemble_momentum, nonlinear_residual, MomentumSystem, ResidualTriple, SchemeParams,
};
use crate::sparse::{norm2, CsrMatrix};

use linear::{conjugate_gradient, gauss_seidel, lu_solve, SpdFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassSolveMode {
    Direct,
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverControls {
    /// Tolerance on the combined nonlinear residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping factor for the density update.
    pub omega: f64,
    /// Halve `omega` (down to `min_omega`) after three consecutive residual increases.
    pub auto_damping: bool,
    pub min_omega: f64,
    /// Velocity unknowns per component above which the momentum block uses CG.
    pub direct_threshold: usize,
    pub cg_rtol: f64,
    pub cg_max_iter: usize,
    pub mass_mode: MassSolveMode,
    pub gs_rtol: f64,
    pub gs_max_sweeps: usize,
    /// Quadrature points per direction for load vectors.
    pub quad_order: usize,
    /// Seed for randomized diagnostics.
    pub seed: u64,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            tol: 1e-10,
            max_iter: 500,
            omega: 1.0,
            auto_damping: true,
            min_omega: 1.0 / 16.0,
            direct_threshold: 50_000,
            cg_rtol: 1e-13,
            cg_max_iter: 20_000,
            mass_mode: MassSolveMode::Direct,
            gs_rtol: 1e-13,
            gs_max_sweeps: 5_000,
            quad_order: 4,
            seed: 0,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("nonlinear tolerance must be positive, got {}", self.tol));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return invalid(format!("damping factor must lie in (0, 1], got {}", self.omega));
        }
        if !(self.min_omega > 0.0 && self.min_omega <= self.omega) {
            return invalid(format!("minimum damping must lie in (0, omega], got {}", self.min_omega));
        }
        if self.max_iter == 0 {
            return invalid("at least one Picard iteration is required");
        }
        if self.quad_order == 0 {
            return invalid("quadrature order must be at least 1");
        }
        Ok(())
    }
}

/// Discrete solution `(u, p)` with density `rho = a p`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: VelocityField,
    pub p: CellField,
    pub rho: CellField,
    pub params: SchemeParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub history: Vec<ResidualTriple>,
    pub residual: ResidualTriple,
    pub min_rho: f64,
    /// Smallest density over every Picard iterate.
    pub min_rho_iterates: f64,
    pub converged: bool,
    pub final_omega: f64,
    /// Seconds spent in the Picard loop.
    pub wall_time: f64,
}

/// Solves the frozen-weight mass system. The result is strictly positive.
pub fn solve_mass(
    mesh: &Mesh,
    geo: &GeometryTables,
    u: &VelocityField,
    rho_prev: &CellField,
    params: &SchemeParams,
    source: Option<&[f64]>,
    controls: &SolverControls,
) -> Result<CellField> {
    let sys = assemble_mass_balance(mesh, geo, u, rho_prev, params, source)?;
    let direct = || lu_solve(&sys.matrix, &sys.rhs);
    let rho = match controls.mass_mode {
        MassSolveMode::Direct => direct()?,
        MassSolveMode::GaussSeidel => {
            let (x, ok) = gauss_seidel(&sys.matrix, &sys.rhs, &rho_prev.values, controls.gs_rtol, controls.gs_max_sweeps);
            if ok && x.iter().all(|&r| r > 0.0) {
                x
            } else {
                log::debug!("Gauss-Seidel mass solve fell back to LU");
                direct()?
            }
        }
    };
    if let Some(bad) = rho.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::LinearSolve(format!(
            "mass solve returned nonpositive density {:e} in cell {bad}; the assembled matrix is not an M-matrix",
            rho[bad]
        )));
    }
    Ok(CellField::from_values(rho))
}

/// Factorization of the scalar broken Laplacian, reused across momentum solves.
pub struct MomentumSolver {
    scalar: CsrMatrix,
    factor: Option<SpdFactor>,
    cg_rtol: f64,
    cg_max_iter: usize,
}

impl MomentumSolver {
    pub fn new(system: &MomentumSystem, controls: &SolverControls) -> Result<Self> {
        let n = system.scalar_stiffness.nrows();
        let factor = if n <= controls.direct_threshold && n > 0 {
            Some(SpdFactor::new(&system.scalar_stiffness)?)
        } else {
            None
        };
        Ok(MomentumSolver {
            scalar: system.scalar_stiffness.clone(),
            factor,
            cg_rtol: controls.cg_rtol,
            cg_max_iter: controls.cg_max_iter,
        })
    }

    fn solve_block(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        if let Some(f) = &self.factor {
            return Ok(f.solve(rhs));
        }
        let (x, out) = conjugate_gradient(&self.scalar, rhs, self.cg_rtol, self.cg_max_iter);
        if out.converged {
            return Ok(x);
        }
        log::warn!(
            "CG stalled at relative residual {:e} after {} iterations; switching to Cholesky",
            out.relative_residual,
            out.iterations
        );
        let f = SpdFactor::new(&self.scalar)?;
        let x = f.solve(rhs);
        self.factor = Some(f);
        Ok(x)
    }

    /// Solves `A u = b + B^T p` one velocity component at a time.
    pub fn solve(&mut self, system: &MomentumSystem, dofs: &DofMap, p: &CellField) -> Result<VelocityField> {
        let n = dofs.n_free();
        let btp = system.coupling.transpose_mul_vec(&p.values);
        let rhs: Vec<f64> = system.load.iter().zip(&btp).map(|(b, c)| b + c).collect();
        if n == 0 {
            return Ok(dofs.gather(&rhs));
        }
        let mut x = self.solve_block(&rhs[..n])?;
        x.extend(self.solve_block(&rhs[n..])?);
        Ok(dofs.gather(&x))
    }
}

/// One-shot momentum solve for a given pressure.
pub fn solve_momentum(
    system: &MomentumSystem,
    dofs: &DofMap,
    p: &CellField,
    controls: &SolverControls,
) -> Result<VelocityField> {
    MomentumSolver::new(system, controls)?.solve(system, dofs, p)
}

/// Data of a steady problem beyond the scheme parameters.
pub struct Problem<'a> {
    pub params: SchemeParams,
    pub forcing: &'a dyn Fn(Point) -> [f64; 2],
    /// Optional zero-sum mass source per cell.
    pub mass_source: Option<&'a [f64]>,
}

/// Picard iteration from `rho = rho*`, `u = 0` with the default geometry.
pub fn picard_solve(
    mesh: &Mesh,
    params: &SchemeParams,
    forcing: &dyn Fn(Point) -> [f64; 2],
    controls: &SolverControls,
) -> Result<(Solution, SolveReport)> {
    let geo = compute_geometry(mesh)?;
    let problem = Problem { params: *params, forcing, mass_source: None };
    picard_solve_problem(mesh, &geo, &problem, controls)
}

pub fn picard_solve_problem(
    mesh: &Mesh,
    geo: &GeometryTables,
    problem: &Problem<'_>,
    controls: &SolverControls,
) -> Result<(Solution, SolveReport)> {
    controls.validate()?;
    let params = problem.params;
    params.validate(true)?;
    let start = Instant::now();
    let dofs = DofMap::new(mesh);
    let momentum = assemble_momentum(mesh, geo, &dofs, problem.forcing, controls.quad_order)?;
    let mut msolver = MomentumSolver::new(&momentum, controls)?;
    let source = problem.mass_source;
    let residual =
        |u: &VelocityField, p: &CellField| nonlinear_residual(mesh, geo, &dofs, &momentum, &params, u, p, source);

    let rho_star = params.rho_star(geo.domain_measure);
    let mut rho = CellField::constant(mesh, rho_star);
    let mut u = VelocityField::zeros(mesh);

    let mut omega = controls.omega;
    let mut history = Vec::new();
    let mut best: Option<(f64, VelocityField, CellField, CellField, ResidualTriple)> = None;
    let mut increases = 0usize;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut min_rho_iterates = f64::INFINITY;
    for it in 1..=controls.max_iter {
        let rho_tilde = solve_mass(mesh, geo, &u, &rho, &params, source, controls)?;
        let next: Vec<f64> =
            rho.values.iter().zip(&rho_tilde.values).map(|(r, t)| (1.0 - omega) * r + omega * t).collect();
        rho = CellField::from_values(next);
        if rho.values.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite { field: "rho", iteration: it });
        }
        let min_rho = rho.min();
        if !(min_rho > 0.0) {
            return Err(Error::Positivity { min_rho, iteration: it });
        }
        min_rho_iterates = min_rho_iterates.min(min_rho);
        let p = rho.scaled(1.0 / params.a);
        u = msolver.solve(&momentum, &dofs, &p)?;
        if !u.is_finite() {
            return Err(Error::NonFinite { field: "u", iteration: it });
        }
        let r = residual(&u, &p);
        if !r.is_finite() {
            return Err(Error::NonFinite { field: "residual", iteration: it });
        }
        history.push(r);
        let c = r.combined();
        log::debug!("picard {it}: momentum {:e} mass {:e} defect {:e} omega {omega}", r.momentum, r.mass, r.mass_defect);
        if best.as_ref().map_or(true, |b| c < b.0) {
            best = Some((c, u.clone(), p.clone(), rho.clone(), r));
        }
        if c <= controls.tol {
            converged = true;
            break;
        }
        if c > prev {
            increases += 1;
            if controls.auto_damping && increases >= 3 && omega > controls.min_omega {
                omega = (omega * 0.5).max(controls.min_omega);
                log::info!("residual grew three times in a row; damping reduced to {omega}");
                increases = 0;
            }
        } else {
            increases = 0;
        }
        prev = c;
    }
    let (_, u, p, rho, r) = best.expect("at least one iteration ran");
    if !converged {
        log::warn!("Picard iteration stopped after {} iterations at residual {:e}", controls.max_iter, r.combined());
    }
    let report = SolveReport {
        iterations: history.len(),
        min_rho: rho.min(),
        min_rho_iterates,
        history,
        residual: r,
        converged,
        final_omega: omega,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((Solution { u, p, rho, params }, report))
}

/// `|A u - b - B^T p| / |b + B^T p|` of a momentum solve.
pub fn momentum_linear_residual(system: &MomentumSystem, dofs: &DofMap, u: &VelocityField, p: &CellField) -> f64 {
    let x = dofs.scatter(u);
    let btp = system.coupling.transpose_mul_vec(&p.values);
    let rhs: Vec<f64> = system.load.iter().zip(&btp).map(|(b, c)| b + c).collect();
    let r: Vec<f64> = system.stiffness.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let d = norm2(&rhs);
    if d > 0.0 {
        norm2(&r) / d
    } else {
        norm2(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, Rect};

    fn square(n: usize) -> (Mesh, GeometryTables) {
        let m = build_structured(n, n, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        (m, g)
    }

    #[test]
    fn mass_solve_at_rest_returns_mean_density() {
        let (m, g) = square(3);
        let p = SchemeParams::new(1.0, 2.5, 1.0, 1.0).unwrap();
        let rho = solve_mass(&m, &g, &VelocityField::zeros(&m), &CellField::constant(&m, 1.0), &p, None, &SolverControls::default())
            .unwrap();
        assert!(rho.values.iter().all(|r| (r - 2.5).abs() < 1e-13));
    }

    #[test]
    fn mass_solve_matches_dense_two_cell() {
        let (m, g) = square(1);
        let e = m.interior_edges().next().unwrap();
        let mut u = VelocityField::zeros(&m);
        u.components[0].values[e] = 0.8;
        u.components[1].values[e] = -0.3;
        let params = SchemeParams::default();
        let prev = CellField::from_values(vec![0.5, 1.5]);
        let rho = solve_mass(&m, &g, &u, &prev, &params, None, &SolverControls::default()).unwrap();

        // independent 2x2 system built from the row formula
        let (k, _) = m.edge_cells()[e];
        let n = g.normal_from(&m, e, k);
        let v = g.edge_measure[e] * (0.8 * n[0] - 0.3 * n[1]);
        let d = (g.cell_diameter[0] + g.cell_diameter[1]) * 2.0;
        let a = g.h * 0.5;
        let (vp, vm) = (v.max(0.0), (-v).max(0.0));
        let mk = [[a + vp + d, -vm - d], [-vp - d, a + vm + d]];
        let mk = if k == 0 { mk } else { [[mk[1][1], mk[1][0]], [mk[0][1], mk[0][0]]] };
        let c = a * 1.0 / g.domain_measure * 1.0;
        let det = mk[0][0] * mk[1][1] - mk[0][1] * mk[1][0];
        let x0 = (c * mk[1][1] - mk[0][1] * c) / det;
        let x1 = (mk[0][0] * c - c * mk[1][0]) / det;
        assert!((rho.values[0] - x0).abs() < 1e-13, "{} vs {x0}", rho.values[0]);
        assert!((rho.values[1] - x1).abs() < 1e-13);
        assert!((rho.integral(&g) - params.mass).abs() < 1e-13);
    }

    #[test]
    fn gauss_seidel_mode_agrees_with_direct() {
        let (m, g) = square(4);
        let mut u = VelocityField::zeros(&m);
        for e in m.interior_edges() {
            u.components[0].values[e] = (e as f64).sin();
            u.components[1].values[e] = (e as f64).cos();
        }
        let params = SchemeParams::default();
        let prev = CellField::constant(&m, 1.0);
        let direct = solve_mass(&m, &g, &u, &prev, &params, None, &SolverControls::default()).unwrap();
        let gs = SolverControls { mass_mode: MassSolveMode::GaussSeidel, ..Default::default() };
        let iter = solve_mass(&m, &g, &u, &prev, &params, None, &gs).unwrap();
        for (a, b) in direct.values.iter().zip(&iter.values) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn constant_pressure_without_forcing_gives_rest() {
        let (m, g) = square(4);
        let d = DofMap::new(&m);
        let sys = assemble_momentum(&m, &g, &d, &|_| [0.0, 0.0], 2).unwrap();
        let u = solve_momentum(&sys, &d, &CellField::constant(&m, 3.0), &SolverControls::default()).unwrap();
        assert!(u.components.iter().all(|c| c.values.iter().all(|v| v.abs() < 1e-13)));
    }

    #[test]
    fn momentum_paths_agree_and_are_linear() {
        let (m, g) = square(5);
        let d = DofMap::new(&m);
        let f = |x: Point| [x[1] - 0.5, (3.0 * x[0]).sin()];
        let f2 = |x: Point| [2.0 * (x[1] - 0.5), 2.0 * (3.0 * x[0]).sin()];
        let sys = assemble_momentum(&m, &g, &d, &f, 3).unwrap();
        let sys2 = assemble_momentum(&m, &g, &d, &f2, 3).unwrap();
        let p = CellField::from_values((0..m.n_cells()).map(|k| (k % 3) as f64).collect());
        let zero = CellField::constant(&m, 0.0);
        let direct = solve_momentum(&sys, &d, &p, &SolverControls::default()).unwrap();
        let cg = SolverControls { direct_threshold: 0, ..Default::default() };
        let iter = solve_momentum(&sys, &d, &p, &cg).unwrap();
        assert!(momentum_linear_residual(&sys, &d, &direct, &p) < 1e-12);
        assert!(momentum_linear_residual(&sys, &d, &iter, &p) < 1e-12);
        let a = solve_momentum(&sys, &d, &zero, &SolverControls::default()).unwrap();
        let b = solve_momentum(&sys2, &d, &zero, &SolverControls::default()).unwrap();
        for e in 0..m.n_edges() {
            for c in 0..2 {
                assert!((direct.components[c].values[e] - iter.components[c].values[e]).abs() < 1e-10);
                let (x, y) = (a.components[c].values[e], b.components[c].values[e]);
                assert!((2.0 * x - y).abs() <= 1e-10 * y.abs().max(1e-12));
            }
        }
        // dense oracle
        let dense = sys.stiffness.to_dense();
        let x = d.scatter(&direct);
        let bt = sys.coupling.transpose_mul_vec(&p.values);
        for i in 0..x.len() {
            let ax: f64 = (0..x.len()).map(|j| dense[(i, j)] * x[j]).sum();
            assert!((ax - sys.load[i] - bt[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_forcing_converges_immediately() {
        let (m, _) = square(4);
        let params = SchemeParams::new(2.0, 3.0, 1.0, 1.0).unwrap();
        let (sol, rep) = picard_solve(&m, &params, &|_| [0.0, 0.0], &SolverControls::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2);
        assert!(sol.rho.values.iter().all(|r| (r - 3.0).abs() < 1e-13));
        assert!(sol.p.values.iter().all(|r| (r - 1.5).abs() < 1e-13));
    }

    #[test]
    fn invalid_controls_rejected() {
        let (m, _) = square(1);
        let bad = SolverControls { omega: 1.5, ..Default::default() };
        assert!(picard_solve(&m, &SchemeParams::default(), &|_| [0.0, 0.0], &bad).is_err());
        let bad = SolverControls { tol: 0.0, ..Default::default() };
        assert!(picard_solve(&m, &SchemeParams::default(), &|_| [0.0, 0.0], &bad).is_err());
    }
}
