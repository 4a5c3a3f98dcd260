//! Manufactured solutions, discretization errors, and convergence studies.

mod case;

pub use case::{
    stream_function_case, ExactPressure, ExactVelocity, ExactVelocityComponent, ManufacturedCase, FD_STEP, MAX_MODE,
};

use std::fmt::Write as _;

use serde::Serialize;

use crate::cr_space::{broken_h1_seminorm_vec, interpolate_rh_vec, l2_error, DEFAULT_EDGE_QUADRATURE};
use crate::error::{invalid, Result};
use crate::fit::{loglog_fit, LogLogFit};
use crate::mesh::{compute_geometry, refine_uniform, GeometryTables, Mesh};
use crate::quadrature::{bary_to_point, triangle_rule};
use crate::scheme::SchemeParams;
use crate::solver::{picard_solve_problem, Problem, Solution, SolveReport, SolverControls};

/// Discretization errors of one solve against a manufactured case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `|u_h - r_h u|` in the broken H1 seminorm (exact, discrete to discrete).
    pub u_h1b_interp: f64,
    /// `|u_h - u|` in the broken H1 seminorm by cell quadrature.
    pub u_h1b: f64,
    pub u_l2: f64,
    /// `|p_h - Pi_0 p|_{L2}` with `Pi_0` the cell-mean projection.
    pub p_l2: f64,
}

pub fn compute_errors(
    mesh: &Mesh,
    geo: &GeometryTables,
    solution: &Solution,
    case: &ManufacturedCase,
    quad_order: usize,
) -> Result<ErrorNorms> {
    if quad_order == 0 {
        return invalid("quadrature order must be at least 1");
    }
    let interp = interpolate_rh_vec(mesh, &case.velocity_field(), DEFAULT_EDGE_QUADRATURE.max(quad_order))?;
    let u_h1b_interp = broken_h1_seminorm_vec(mesh, geo, &solution.u.sub(&interp));
    let (mut l2, mut h1) = (0.0, 0.0);
    for i in 0..2 {
        let (a, b) = l2_error(mesh, geo, &solution.u.components[i], &case.velocity_component(i), quad_order);
        l2 += a * a;
        h1 += b * b;
    }
    let means = cell_means(mesh, &|x| case.pressure(x), quad_order);
    let p_l2 = solution
        .p
        .values
        .iter()
        .zip(&means)
        .zip(&geo.cell_measure)
        .map(|((ph, pm), a)| a * (ph - pm).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ErrorNorms { u_h1b_interp, u_h1b: h1.sqrt(), u_l2: l2.sqrt(), p_l2 })
}

/// Cell averages of `f` by an `n x n` collapsed Gauss rule.
pub fn cell_means(mesh: &Mesh, f: &dyn Fn([f64; 2]) -> f64, n: usize) -> Vec<f64> {
    let rule = triangle_rule(n);
    (0..mesh.n_cells())
        .map(|k| {
            let p = mesh.cell_points(k);
            rule.iter().map(|&(lam, w)| w * f(bary_to_point(&p, lam))).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub level: usize,
    pub h: f64,
    pub err_u_h1b: f64,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    pub err_u_h1b_interp: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSlopes {
    pub u_h1b: Option<LogLogFit>,
    pub u_l2: Option<LogLogFit>,
    pub p_l2: Option<LogLogFit>,
    /// Levels entering the fit (converged ones only).
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Present when at least three levels converged.
    pub slopes: Option<RateSlopes>,
}

impl RateTable {
    pub fn from_rows(rows: Vec<RateRow>) -> Self {
        let used: Vec<&RateRow> = rows.iter().filter(|r| r.converged).collect();
        let slopes = (used.len() >= 3).then(|| {
            let h: Vec<f64> = used.iter().map(|r| r.h).collect();
            let col = |f: fn(&RateRow) -> f64| used.iter().map(|r| f(r)).collect::<Vec<_>>();
            RateSlopes {
                u_h1b: loglog_fit(&h, &col(|r| r.err_u_h1b)),
                u_l2: loglog_fit(&h, &col(|r| r.err_u_l2)),
                p_l2: loglog_fit(&h, &col(|r| r.err_p_l2)),
                levels: used.iter().map(|r| r.level).collect(),
            }
        });
        RateTable { rows, slopes }
    }

    /// CSV with header `level,h,err_u_h1b,err_u_l2,err_p_l2`, slopes as trailing
    /// comment lines. `preamble` lines are emitted first as comments.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("level,h,err_u_h1b,err_u_l2,err_p_l2\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.level, r.h, r.err_u_h1b, r.err_u_l2, r.err_p_l2);
        }
        for r in self.rows.iter().filter(|r| !r.converged) {
            let _ = writeln!(out, "# level {} did not converge; excluded from slopes", r.level);
        }
        if let Some(s) = &self.slopes {
            for (name, fit) in [("u_h1b", &s.u_h1b), ("u_l2", &s.u_l2), ("p_l2", &s.p_l2)] {
                if let Some(f) = fit {
                    let _ = writeln!(out, "# slope_{name}={:.16e}", f.slope);
                    let _ = writeln!(out, "# r2_{name}={:.16e}", f.r2);
                }
            }
            let levels: Vec<String> = s.levels.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(out, "# slope_levels={}", levels.join(" "));
        }
        out
    }
}

/// One refinement level of a study.
pub struct StudyLevel {
    pub mesh: Mesh,
    pub geo: GeometryTables,
    pub solution: Solution,
    pub report: SolveReport,
    pub errors: ErrorNorms,
}

pub struct Study {
    pub levels: Vec<StudyLevel>,
    pub table: RateTable,
}

/// Solves the manufactured problem on `base` and `levels - 1` uniform refinements.
pub fn convergence_study(
    case: &ManufacturedCase,
    base: &Mesh,
    levels: usize,
    params: &SchemeParams,
    controls: &SolverControls,
) -> Result<Study> {
    if levels < 3 {
        return invalid(format!("a convergence study needs at least 3 levels, got {levels}"));
    }
    if params.a != case.a || params.mass != case.mass {
        return invalid("scheme parameters A and M must match the manufactured case");
    }
    let forcing = |x: [f64; 2]| case.forcing(x);
    let mut mesh = base.clone();
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            mesh = refine_uniform(&mesh)?;
        }
        out.push(solve_level(&mesh, case, params, &forcing, controls)?);
    }
    let rows = out
        .iter()
        .enumerate()
        .map(|(level, l)| RateRow {
            level,
            h: l.geo.h,
            err_u_h1b: l.errors.u_h1b,
            err_u_l2: l.errors.u_l2,
            err_p_l2: l.errors.p_l2,
            err_u_h1b_interp: l.errors.u_h1b_interp,
            converged: l.report.converged,
        })
        .collect();
    Ok(Study { levels: out, table: RateTable::from_rows(rows) })
}

/// Solves one manufactured problem and measures its errors.
pub fn solve_level(
    mesh: &Mesh,
    case: &ManufacturedCase,
    params: &SchemeParams,
    forcing: &dyn Fn([f64; 2]) -> [f64; 2],
    controls: &SolverControls,
) -> Result<StudyLevel> {
    let geo = compute_geometry(mesh)?;
    let problem = Problem { params: *params, forcing, mass_source: None };
    let (solution, report) = picard_solve_problem(mesh, &geo, &problem, controls)?;
    let errors = compute_errors(mesh, &geo, &solution, case, controls.quad_order.max(4))?;
    Ok(StudyLevel { mesh: mesh.clone(), geo, solution, report, errors })
}
