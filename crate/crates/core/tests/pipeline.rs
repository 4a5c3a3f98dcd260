use crstokes_core::analysis::{run_audit, AuditConfig};
use crstokes_core::cr_space::io::{cell_csv, read_cell_csv, read_velocity_csv, velocity_csv};
use crstokes_core::mesh::{build_structured, compute_geometry, read_mesh, refine_uniform, write_mesh, Rect};
use crstokes_core::mms::stream_function_case;
use crstokes_core::scheme::{assemble_momentum, nonlinear_residual};
use crstokes_core::solver::{picard_solve, MassSolveMode, SolverControls};
use crstokes_core::{DofMap, Error, SchemeParams};

#[test]
fn mesh_file_solve_and_dump_round_trip() {
    let mesh = read_mesh(&write_mesh(&refine_uniform(&build_structured(3, 3, Rect::unit()).unwrap()).unwrap())).unwrap();
    let params = SchemeParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let case = stream_function_case(1.0, 1.0, 1).unwrap();
    let (sol, report) = picard_solve(&mesh, &params, &|x| case.forcing(x), &SolverControls::default()).unwrap();
    assert!(report.converged);

    let u = read_velocity_csv(&velocity_csv(&sol.u), mesh.n_edges()).unwrap();
    let p = read_cell_csv(&cell_csv(&sol.p), mesh.n_cells()).unwrap();
    assert_eq!(u.components[0].values, sol.u.components[0].values);
    assert_eq!(u.components[1].values, sol.u.components[1].values);
    assert_eq!(p.values, sol.p.values);

    // the reloaded fields are still a solution
    let geo = compute_geometry(&mesh).unwrap();
    let dofs = DofMap::new(&mesh);
    let mom = assemble_momentum(&mesh, &geo, &dofs, &|x| case.forcing(x), SolverControls::default().quad_order).unwrap();
    let r = nonlinear_residual(&mesh, &geo, &dofs, &mom, &params, &u, &p, None);
    assert!(r.combined() <= SolverControls::default().tol, "{r:?}");
}

#[test]
fn gauss_seidel_mass_mode_agrees_with_direct() {
    let mesh = build_structured(8, 8, Rect::unit()).unwrap();
    let params = SchemeParams::new(0.25, 1.0, 1.0, 1.0).unwrap();
    let case = stream_function_case(0.25, 1.0, 2).unwrap();
    let f = |x: [f64; 2]| case.forcing(x);
    let direct = SolverControls::default();
    let gs = SolverControls { mass_mode: MassSolveMode::GaussSeidel, ..SolverControls::default() };
    let (a, ra) = picard_solve(&mesh, &params, &f, &direct).unwrap();
    let (b, rb) = picard_solve(&mesh, &params, &f, &gs).unwrap();
    assert!(ra.converged && rb.converged);
    let d = a.rho.values.iter().zip(&b.rho.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d}");
}

#[test]
fn audit_on_default_family_passes() {
    let base = build_structured(4, 4, Rect::unit()).unwrap();
    let config = AuditConfig { levels: 3, log_mean_samples: 1000, ..AuditConfig::default() };
    for a in [0.25, 4.0] {
        let params = SchemeParams::new(a, 1.0, 1.0, 1.0).unwrap();
        let report = run_audit(&base, &params, &SolverControls::default(), &config).unwrap();
        assert!(report.passed(), "A = {a}: {:?}", report.failures());
        assert_eq!(report.h.len(), 3);
    }
}

#[test]
fn audit_rejects_other_domains() {
    let base = build_structured(4, 2, Rect::new([0.0, 0.0], [2.0, 1.0])).unwrap();
    let r = run_audit(&base, &SchemeParams::default(), &SolverControls::default(), &AuditConfig::default());
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}
