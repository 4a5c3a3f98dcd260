use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use crstokes_core::cr_space::DofMap;
use crstokes_core::mesh::{build_structured, compute_geometry, Rect};
use crstokes_core::mms::stream_function_case;
use crstokes_core::scheme::{assemble_mass_balance, assemble_momentum};
use crstokes_core::solver::{picard_solve, solve_mass, SolverControls};
use crstokes_core::{CellField, SchemeParams};
use crstokes_bench::swirl;

const SIZES: [usize; 3] = [16, 32, 64];

fn assembly(c: &mut Criterion) {
    let params = SchemeParams::default();
    let mut g = c.benchmark_group("assembly");
    for n in SIZES {
        let mesh = build_structured(n, n, Rect::unit()).unwrap();
        let geo = compute_geometry(&mesh).unwrap();
        let dofs = DofMap::new(&mesh);
        let u = swirl(&mesh, &geo);
        let rho = CellField::constant(&mesh, 1.0);
        g.bench_with_input(BenchmarkId::new("momentum", n), &n, |b, _| {
            b.iter(|| assemble_momentum(&mesh, &geo, &dofs, &|x| [x[1], -x[0]], 4).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("mass", n), &n, |b, _| {
            b.iter(|| assemble_mass_balance(&mesh, &geo, &u, &rho, &params, None).unwrap())
        });
    }
    g.finish();
}

fn mass_solve(c: &mut Criterion) {
    let params = SchemeParams::default();
    let controls = SolverControls::default();
    let mut g = c.benchmark_group("mass_solve");
    for n in SIZES {
        let mesh = build_structured(n, n, Rect::unit()).unwrap();
        let geo = compute_geometry(&mesh).unwrap();
        let u = swirl(&mesh, &geo);
        let rho = CellField::constant(&mesh, 1.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_mass(&mesh, &geo, &u, &rho, &params, None, &controls).unwrap())
        });
    }
    g.finish();
}

fn picard(c: &mut Criterion) {
    let params = SchemeParams::default();
    let controls = SolverControls::default();
    let case = stream_function_case(params.a, params.mass, 0).unwrap();
    let mut g = c.benchmark_group("picard");
    g.sample_size(10);
    for n in [8, 16, 32] {
        let mesh = build_structured(n, n, Rect::unit()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| picard_solve(&mesh, &params, &|x| case.forcing(x), &controls).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, mass_solve, picard);
criterion_main!(benches);
