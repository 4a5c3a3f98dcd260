use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::cr_space::{interpolate_rh, DofMap};
use crate::error::{invalid, Result};
use crate::fields::{Bubble, Componentwise, SinSin};
use crate::fit::growth_over_first;
use crate::mms::{stream_function_case, RateRow, RateTable, StudyLevel};
use crate::scheme::{assemble_mass_balance, verify_m_matrix, SchemeParams};
use crate::solver::SolverControls;

/// Knobs of the full audit run by [`run_audit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Refinement levels, at least 3.
    pub levels: usize,
    /// Random fields per level for the inequality checks.
    pub n_random: usize,
    pub seed: u64,
    pub translate_resolution: usize,
    pub log_mean_samples: usize,
    /// Mass systems up to this size get the dense inverse check.
    pub m_matrix_dense_cells: usize,
    /// Manufactured mode for the scheme checks.
    pub mode: u32,
    /// Allowed growth of measured constants over the coarsest level.
    pub constant_growth: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            levels: 4,
            n_random: 20,
            seed: 0,
            translate_resolution: DEFAULT_TRANSLATE_RESOLUTION,
            log_mean_samples: 100_000,
            m_matrix_dense_cells: 200,
            mode: 0,
            constant_growth: 2.0,
        }
    }
}

const WEAK_NOISE_FACTOR: f64 = 1e3;

fn trend_entry(check: &str, anchor: &str, comparison: &str, trend: Vec<f64>, pass: bool) -> AuditEntry {
    let mut e = AuditEntry::new(check, anchor, comparison);
    e.trend = trend;
    e.pass = pass;
    e
}

fn growth_entry(check: &str, anchor: &str, trend: Vec<f64>, limit: f64) -> AuditEntry {
    let g = growth_over_first(&trend);
    let cmp = format!("max_l c_l / c_0 <= {limit}");
    trend_entry(check, anchor, &cmp, trend, g <= limit).value("growth", g)
}

/// `x_{l+1} <= (1 + slack) x_l` for every consecutive pair, where values
/// below `floor[l]` count as zero.
fn decreasing(x: &[f64], floor: &[f64], slack: f64) -> bool {
    (1..x.len()).all(|l| x[l] <= floor[l] || x[l] <= (1.0 + slack) * x[l - 1])
}

/// Runs every audit on `base` and its refinements. Scheme checks solve the
/// manufactured problem of `config.mode` with `params` on each level, so the
/// mesh must cover the unit square.
pub fn run_audit(base: &Mesh, params: &SchemeParams, controls: &SolverControls, config: &AuditConfig) -> Result<AuditReport> {
    if config.levels < 3 {
        return invalid(format!("the audit needs at least 3 levels, got {}", config.levels));
    }
    if config.n_random == 0 {
        return invalid("n_random must be at least 1");
    }
    controls.validate()?;
    let family = mesh_family(base, config.levels)?;
    if !covers_unit_square(&family[0].mesh, &family[0].geo) {
        return invalid("the audit's manufactured solutions are defined on the unit square; the mesh does not cover it");
    }
    let case = stream_function_case(params.a, params.mass, config.mode)?;
    let mut entries = Vec::new();

    entries.push(check_divergence_preservation(&family, &Componentwise(Bubble, Bubble), 3, 1e-12)?);
    entries.push(check_interp_rates(&family, &SinSin::fundamental(), 4)?);

    // geometry-only audits, independent per level
    struct LevelAudit {
        ineq: InequalityMeasures,
        translate: f64,
        infsup: f64,
    }
    let per_level: Vec<LevelAudit> = family
        .par_iter()
        .enumerate()
        .map(|(l, lv)| {
            let ineq = check_inequalities(&lv.mesh, &lv.geo, config.n_random, config.seed.wrapping_add(l as u64))?;
            // same smooth field on every level
            let v = interpolate_rh(&lv.mesh, &SinSin::fundamental(), 3)?;
            let res = config.translate_resolution.max((8.0 / lv.geo.h).ceil() as usize);
            let translate = translate_constant(&lv.mesh, &lv.geo, &v, [lv.geo.h, 0.0], res)?;
            let infsup = if lv.mesh.n_cells() <= INFSUP_MAX_CELLS {
                infsup_constant(&lv.mesh, &lv.geo, &DofMap::new(&lv.mesh))?
            } else {
                f64::NAN
            };
            Ok(LevelAudit { ineq, translate, infsup })
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&LevelAudit) -> f64| per_level.iter().map(f).collect::<Vec<f64>>();
    let g = config.constant_growth;

    let jump = col(|a| a.ineq.jump_ratio);
    let bound = col(|a| a.ineq.jump_bound);
    let within = jump.iter().zip(&bound).all(|(j, b)| *j <= b * (1.0 + 1e-12));
    let mut e = growth_entry("jump_bound", "jump sum bounded by the broken H1 seminorm", jump, g);
    e.comparison = format!("ratio <= explicit per-mesh constant and growth <= {g}");
    e.pass &= within;
    entries.push(e.value("explicit_constant_max", bound.iter().cloned().fold(0.0, f64::max)));

    let trace = col(|a| a.ineq.trace_ratio);
    let ok = trace.iter().all(|t| *t <= 1.0 + 1e-12);
    entries.push(trend_entry("trace_inequality", "cell trace inequality with constant (d|sigma|/|K|)^{1/2}", "max ratio <= 1", trace, ok));
    let poincare = col(|a| a.ineq.poincare_ratio);
    let ok = poincare.iter().all(|t| *t <= 1.0 + 1e-12);
    entries.push(trend_entry("poincare_inequality", "cellwise Poincare inequality with constant h_K / pi", "max ratio <= 1", poincare, ok));
    entries.push(growth_entry(
        "jump_pairing",
        "pairing of weighted jumps with H1_0 functions is O(h)",
        col(|a| a.ineq.jump_pairing_constant),
        g,
    ));
    entries.push(growth_entry("translate_estimate", "translates of discrete functions, shift eta = (h, 0)", col(|a| a.translate), g));

    let infsup = col(|a| a.infsup);
    let measured: Vec<f64> = infsup.iter().cloned().filter(|c| c.is_finite()).collect();
    let ok = !measured.is_empty() && measured.iter().all(|c| *c > 0.0 && *c >= 0.5 * measured[0]);
    entries.push(
        trend_entry("infsup", "inf-sup stability of the velocity/pressure pair", "c_i > 0 and c_i >= 0.5 c_0", infsup, ok)
            .value("levels_measured", measured.len() as f64),
    );

    // scheme checks
    let forcing = |x: Point| case.forcing(x);
    let solves: Vec<StudyLevel> = family
        .par_iter()
        .map(|lv| crate::mms::solve_level(&lv.mesh, &case, params, &forcing, controls))
        .collect::<Result<_>>()?;
    entries.extend(scheme_entries(&family, &solves, params, controls, config, &forcing)?);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut violations = 0usize;
    for _ in 0..config.log_mean_samples {
        let a = 10f64.powf(rng.gen_range(-12.0..12.0));
        let b = if rng.gen_bool(0.5) { a * (1.0 + rng.gen_range(-1e-6..1e-6)) } else { 10f64.powf(rng.gen_range(-12.0..12.0)) };
        if log_mean_bracket(a, b).is_err() {
            violations += 1;
        }
    }
    entries.push(
        trend_entry(
            "log_mean_bracket",
            "logarithmic mean lies between its arguments",
            "zero violations over random positive pairs",
            Vec::new(),
            violations == 0,
        )
        .value("samples", config.log_mean_samples as f64)
        .value("violations", violations as f64),
    );

    Ok(AuditReport { h: family.iter().map(|l| l.geo.h).collect(), entries })
}

fn scheme_entries(
    family: &[MeshLevel],
    solves: &[StudyLevel],
    params: &SchemeParams,
    controls: &SolverControls,
    config: &AuditConfig,
    forcing: &dyn Fn(Point) -> [f64; 2],
) -> Result<Vec<AuditEntry>> {
    let mut out = Vec::new();
    let converged: Vec<bool> = solves.iter().map(|s| s.report.converged).collect();
    let all_converged = converged.iter().all(|c| *c);
    out.push(
        trend_entry(
            "picard_convergence",
            "the nonlinear iteration reaches the tolerance",
            "every level converged",
            solves.iter().map(|s| s.report.residual.combined()).collect(),
            all_converged,
        )
        .value("max_iterations", solves.iter().map(|s| s.report.iterations).max().unwrap_or(0) as f64),
    );

    let min_rho: Vec<f64> = solves.iter().map(|s| s.report.min_rho_iterates).collect();
    let ok = min_rho.iter().all(|r| *r > 0.0);
    out.push(trend_entry("positivity", "every discrete density is positive", "min_K rho_K > 0 at every iterate", min_rho, ok));

    let tol = 1e-8;
    let defect: Vec<f64> = solves.iter().map(|s| (s.solution.rho.integral(&s.geo) - params.mass).abs() / params.mass).collect();
    let ok = defect.iter().zip(&converged).all(|(d, c)| !c || *d <= tol);
    out.push(trend_entry("mass_constraint", "total mass equals M", "|int rho - M| / M <= 1e-8 on converged levels", defect, ok));

    let mean_p: Vec<f64> = solves
        .iter()
        .map(|s| (s.solution.p.mean(&s.geo) - params.rho_star(s.geo.domain_measure) / params.a).abs())
        .collect();
    let ok = mean_p.iter().zip(&converged).all(|(d, c)| !c || *d <= tol);
    out.push(trend_entry("mean_pressure", "mean pressure equals rho* / A", "|mean p - rho*/A| <= 1e-8 on converged levels", mean_p, ok));

    let mut m_ok = true;
    let mut m_trend = Vec::new();
    let mut dense_levels = 0.0;
    for (lv, s) in family.iter().zip(solves) {
        let sys = assemble_mass_balance(&lv.mesh, &lv.geo, &s.solution.u, &s.solution.rho, params, None)?;
        let r = verify_m_matrix(&sys.matrix, config.m_matrix_dense_cells);
        m_ok &= r.passed();
        if r.dense_checked {
            dense_levels += 1.0;
        }
        m_trend.push(r.min_inverse_ratio.or(r.min_column_margin).unwrap_or(f64::NAN));
    }
    out.push(
        trend_entry(
            "m_matrix",
            "the frozen mass matrix is an M-matrix",
            "sign pattern, and nonnegative inverse (dense) or column dominance (large)",
            m_trend,
            m_ok,
        )
        .value("dense_levels", dense_levels),
    );

    let mut ent_ok = true;
    let mut ent_trend = Vec::new();
    let (mut worst_slack, mut worst_t1) = (f64::INFINITY, 0.0f64);
    for (lv, s) in family.iter().zip(solves) {
        let e = audit_entropy(&lv.mesh, &lv.geo, &s.solution, params)?;
        let tol = 10.0 * s.report.residual.combined();
        let slack = e.slacks(params.a).iter().cloned().fold(f64::INFINITY, f64::min);
        worst_slack = worst_slack.min(slack);
        worst_t1 = worst_t1.max(e.t1_mismatch());
        if s.report.converged {
            ent_ok &= e.holds(params.a, tol) && e.t1_mismatch() <= 1e-12;
        }
        ent_trend.push(e.sum().abs());
    }
    out.push(
        trend_entry(
            "entropy_balance",
            "log-density energy balance and its three lower bounds",
            "bounds hold with slack >= -10 r, |t1 + t2 + t3| <= 10 r, two t1 summations agree to 1e-12",
            ent_trend,
            ent_ok,
        )
        .value("min_slack", worst_slack)
        .value("t1_mismatch", worst_t1),
    );

    let rows: Vec<RateRow> = solves
        .iter()
        .enumerate()
        .map(|(level, s)| RateRow {
            level,
            h: s.geo.h,
            err_u_h1b: s.errors.u_h1b,
            err_u_l2: s.errors.u_l2,
            err_p_l2: s.errors.p_l2,
            err_u_h1b_interp: s.errors.u_h1b_interp,
            converged: s.report.converged,
        })
        .collect();
    let table = RateTable::from_rows(rows);
    let mut e = trend_entry(
        "scheme_convergence",
        "velocity converges at order close to one in the broken H1 seminorm",
        "broken H1 slope in [0.8, 1.3]",
        solves.iter().map(|s| s.errors.u_h1b).collect(),
        false,
    );
    if let Some(fit) = table.slopes.as_ref().and_then(|s| s.u_h1b) {
        e = e.value("slope_u_h1b", fit.slope).value("r2_u_h1b", fit.r2);
        e.pass = (0.8..=1.3).contains(&fit.slope);
    }
    if let Some(fit) = table.slopes.as_ref().and_then(|s| s.p_l2) {
        e = e.value("slope_p_l2", fit.slope);
    }
    out.push(e);

    let (lo, hi) = bounding_box(&family[0].mesh);
    let psi = default_psi_family(lo, hi)?;
    let q = controls.quad_order.max(6);
    let weak: Vec<Vec<WeakResidual>> = family
        .iter()
        .zip(solves)
        .map(|(lv, s)| weak_residuals(&lv.mesh, &lv.geo, &s.solution.u, &s.solution.p, forcing, &psi, q))
        .collect::<Result<_>>()?;
    let mut ok = true;
    let mut e = AuditEntry::new(
        "weak_residuals",
        "the discrete solution satisfies the weak formulation in the limit",
        "R1 and R2 decrease level to level (10% slack) for each test function, or sit below 1000 r times their integrand scale",
    );
    for j in 0..psi.len() {
        let r1: Vec<f64> = weak.iter().map(|w| w[j].momentum).collect();
        let r2: Vec<f64> = weak.iter().map(|w| w[j].mass).collect();
        // residuals that vanish by symmetry sit at the solver-tolerance level,
        // amplified by the conditioning of the discrete operators
        let noise = |l: usize| WEAK_NOISE_FACTOR * solves[l].report.residual.combined().max(1e-15);
        let f1: Vec<f64> = (0..r1.len()).map(|l| noise(l) * weak[l][j].momentum_scale).collect();
        let f2: Vec<f64> = (0..r2.len()).map(|l| noise(l) * weak[l][j].mass_scale).collect();
        ok &= decreasing(&r1, &f1, 0.1) && decreasing(&r2, &f2, 0.1);
        e.values.insert(format!("r1_psi{j}_finest"), *r1.last().expect("levels"));
        e.values.insert(format!("r2_psi{j}_finest"), *r2.last().expect("levels"));
    }
    e.trend = weak.iter().map(|w| w.iter().map(|x| x.momentum.max(x.mass)).fold(0.0, f64::max)).collect();
    e.pass = ok;
    out.push(e);

    let apriori: Vec<AprioriQuantities> =
        family.iter().zip(solves).map(|(lv, s)| apriori_quantities(&lv.mesh, &lv.geo, &s.solution)).collect();
    let totals: Vec<f64> = apriori.iter().map(|a| a.total()).collect();
    let last = apriori.last().expect("levels");
    out.push(
        growth_entry("apriori_bound", "velocity, pressure, density and density jumps stay bounded", totals, config.constant_growth)
            .value("u_h1b_finest", last.u_h1b)
            .value("p_l2_finest", last.p_l2)
            .value("rho_l2_finest", last.rho_l2)
            .value("rho_disc_finest", last.rho_disc),
    );
    Ok(out)
}
