//! Command-line driver: config handling, mesh loading and the four commands.

pub mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::{json, Value};

use crstokes_core::analysis::{covers_unit_square, run_audit};
use crstokes_core::cr_space::io::{cell_csv, velocity_csv};
use crstokes_core::mesh::{build_structured, compute_geometry, read_mesh, regularity_theta, Rect};
use crstokes_core::mms::{compute_errors, convergence_study, stream_function_case, ManufacturedCase};
use crstokes_core::solver::{picard_solve_problem, Problem};
use crstokes_core::{Error, GeometryTables, Mesh};

pub use config::{Command, Forcing, MeshSource, RunConfig};
use output::{csv_with_hash, write_file, JsonOut};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

/// An error carrying the process exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn io(what: &Path, e: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", what.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Nonconforming(_) | Error::DegenerateCell { .. } => {
                EXIT_CONFIG
            }
            Error::LinearSolve(_) | Error::NonFinite { .. } | Error::Positivity { .. } | Error::Eigen(_) => {
                EXIT_NOT_CONVERGED
            }
        };
        Failure { code, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "crstokes", version, about = "CR / upwind finite volume solver for steady compressible Stokes flow")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandArg,
    /// JSON run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mesh file or structured spec such as `8x8`.
    #[arg(long)]
    pub mesh: Option<String>,
    /// Refinement levels for `study` and `verify`.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write the audit flattened to CSV (`verify`).
    #[arg(long)]
    pub csv: bool,
    /// Leave wall-clock fields out of the outputs.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Override a config field, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum CommandArg {
    Solve,
    Study,
    Verify,
    MeshInfo,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::Study => Command::Study,
            CommandArg::Verify => Command::Verify,
            CommandArg::MeshInfo => Command::MeshInfo,
        }
    }
}

/// A config with its overrides applied and paths resolved.
#[derive(Debug, Clone)]
pub struct Run {
    pub command: Command,
    pub config: RunConfig,
    pub out: PathBuf,
    pub csv: bool,
    pub timestamp: bool,
}

impl Run {
    pub fn from_cli(cli: Cli) -> Result<Self, Failure> {
        let (mut config, base) = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (RunConfig::from_json(&text, &path.display().to_string())?, dir)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        if let Some(m) = &cli.mesh {
            config.mesh = MeshSource::parse(m);
        }
        if let Some(l) = cli.levels {
            config.levels = l;
        }
        let mut config = config.with_overrides(&cli.params)?;
        // paths from the config file are relative to it; a --mesh path to the working directory
        let base = if cli.mesh.is_some() { PathBuf::new() } else { base };
        let cwd = std::env::current_dir().map_err(|e| Failure::io(Path::new("."), e))?;
        config.resolve_paths(&cwd.join(base))?;
        Ok(Run { command: cli.command.into(), config, out: cli.out, csv: cli.csv, timestamp: !cli.no_timestamp })
    }

    fn check(&self) -> Result<(), Failure> {
        let c = &self.config;
        c.params.validate(false)?;
        c.solver.validate()?;
        if matches!(self.command, Command::Study | Command::Verify) && c.levels < 3 {
            return Err(Failure::config(format!("{} needs at least 3 levels, got {}", self.command.name(), c.levels)));
        }
        if !(c.amplitude.is_finite() && c.amplitude != 0.0) {
            return Err(Failure::config(format!("amplitude must be finite and nonzero, got {}", c.amplitude)));
        }
        Ok(())
    }
}

/// Parses arguments, runs, and returns the exit status.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|_| Run::from_cli(cli)).and_then(|run| execute(&run));
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

/// Caps the rayon pool at `CRSTOKES_THREADS` when set.
fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CRSTOKES_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::config(format!("CRSTOKES_THREADS must be a positive integer, got `{v}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command, writing its artifacts under `run.out`.
pub fn execute(run: &Run) -> Result<i32, Failure> {
    run.check()?;
    fs::create_dir_all(&run.out).map_err(|e| Failure::io(&run.out, e))?;
    let mesh = load_mesh(&run.config.mesh)?;
    match run.command {
        Command::MeshInfo => mesh_info(run, &mesh),
        Command::Solve => solve(run, &mesh),
        Command::Study => study(run, &mesh),
        Command::Verify => verify(run, &mesh),
    }
}

pub fn load_mesh(source: &MeshSource) -> Result<Mesh, Failure> {
    match source {
        MeshSource::Structured { nx, ny } => Ok(build_structured(*nx, *ny, Rect::unit())?),
        MeshSource::File(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            read_mesh(&text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))
        }
    }
}

fn manufactured(c: &RunConfig) -> Result<ManufacturedCase, Failure> {
    Ok(stream_function_case(c.params.a, c.params.mass, c.mode)?.with_amplitude(c.amplitude)?)
}

fn require_unit_square(mesh: &Mesh, geo: &GeometryTables, what: &str) -> Result<(), Failure> {
    if covers_unit_square(mesh, geo) {
        Ok(())
    } else {
        Err(Failure::config(format!("{what} uses the manufactured solution and needs a mesh of the unit square")))
    }
}

fn mesh_summary(mesh: &Mesh, geo: &GeometryTables) -> Value {
    let q = regularity_theta(mesh, geo);
    let ratio = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().cloned().fold(init, f);
    json!({
        "vertices": mesh.n_vertices(),
        "cells": mesh.n_cells(),
        "edges": mesh.n_edges(),
        "interior_edges": mesh.n_interior_edges(),
        "h": geo.h,
        "domain_measure": geo.domain_measure,
        "theta": q.theta,
        "min_inball_ratio": ratio(&q.per_cell_ratio, f64::min, f64::INFINITY),
        "max_inball_ratio": ratio(&q.per_cell_ratio, f64::max, 0.0),
        "shape_violations": q.shape_violations.len(),
    })
}

fn mesh_info(run: &Run, mesh: &Mesh) -> Result<i32, Failure> {
    let geo = compute_geometry(mesh)?;
    let summary = mesh_summary(mesh, &geo);
    println!(
        "cells {} edges {} h {:.6} theta {:.6}",
        mesh.n_cells(),
        mesh.n_edges(),
        geo.h,
        summary["theta"].as_f64().unwrap_or(f64::NAN)
    );
    let mut out = JsonOut::new(run);
    out.set("mesh", summary);
    out.write(&run.out.join("mesh_info.json"))?;
    Ok(EXIT_OK)
}

fn solve(run: &Run, mesh: &Mesh) -> Result<i32, Failure> {
    let c = &run.config;
    let geo = compute_geometry(mesh)?;
    let case = match c.forcing {
        Forcing::Manufactured => {
            require_unit_square(mesh, &geo, "manufactured forcing")?;
            Some(manufactured(c)?)
        }
        Forcing::Zero => None,
    };
    let forcing = |x: [f64; 2]| case.as_ref().map_or([0.0, 0.0], |m| m.forcing(x));
    let problem = Problem { params: c.params, forcing: &forcing, mass_source: None };
    let (solution, report) = picard_solve_problem(mesh, &geo, &problem, &c.solver)?;

    let hash = c.hash(run.command);
    write_file(&run.out.join("velocity.csv"), &csv_with_hash(&hash, &velocity_csv(&solution.u)))?;
    write_file(&run.out.join("pressure.csv"), &csv_with_hash(&hash, &cell_csv(&solution.p)))?;
    write_file(&run.out.join("density.csv"), &csv_with_hash(&hash, &cell_csv(&solution.rho)))?;

    let mut out = JsonOut::new(run);
    out.set("mesh", mesh_summary(mesh, &geo));
    out.set("converged", json!(report.converged));
    out.set("iterations", json!(report.iterations));
    out.set("residual", json!(report.residual));
    out.set("residual_combined", json!(report.residual.combined()));
    out.set("history", json!(report.history));
    out.set("min_rho", json!(report.min_rho));
    out.set("min_rho_iterates", json!(report.min_rho_iterates));
    out.set("rho_star", json!(c.params.rho_star(geo.domain_measure)));
    out.set("final_omega", json!(report.final_omega));
    out.set("mass", json!(solution.rho.integral(&geo)));
    out.set("mean_pressure", json!(solution.p.mean(&geo)));
    if let Some(m) = &case {
        out.set("errors", json!(compute_errors(mesh, &geo, &solution, m, c.solver.quad_order.max(4))?));
    }
    out.timed("wall_time", report.wall_time);
    out.write(&run.out.join("summary.json"))?;
    println!(
        "iterations {} residual {:.3e} min_rho {:.6e} converged {}",
        report.iterations,
        report.residual.combined(),
        report.min_rho,
        report.converged
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn study(run: &Run, mesh: &Mesh) -> Result<i32, Failure> {
    let c = &run.config;
    require_unit_square(mesh, &compute_geometry(mesh)?, "study")?;
    let case = manufactured(c)?;
    let s = convergence_study(&case, mesh, c.levels, &c.params, &c.solver)?;
    let hash = c.hash(run.command);
    write_file(&run.out.join("rates.csv"), &s.table.to_csv(&[format!("config_hash={hash}")]))?;

    let levels: Vec<Value> = s
        .levels
        .iter()
        .map(|l| {
            let mut v = json!({
                "cells": l.mesh.n_cells(),
                "h": l.geo.h,
                "iterations": l.report.iterations,
                "converged": l.report.converged,
                "residual_combined": l.report.residual.combined(),
                "min_rho": l.report.min_rho,
                "errors": l.errors,
            });
            if run.timestamp {
                v["wall_time"] = json!(l.report.wall_time);
            }
            v
        })
        .collect();
    let mut out = JsonOut::new(run);
    out.set("table", json!(s.table));
    out.set("levels", Value::Array(levels));
    out.write(&run.out.join("study.json"))?;
    if let Some(f) = s.table.slopes.as_ref().and_then(|sl| sl.u_h1b) {
        println!("velocity broken-H1 slope {:.4} (R^2 {:.4})", f.slope, f.r2);
    }
    let ok = s.levels.iter().all(|l| l.report.converged);
    Ok(if ok { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn verify(run: &Run, mesh: &Mesh) -> Result<i32, Failure> {
    let c = &run.config;
    let start = std::time::Instant::now();
    let report = run_audit(mesh, &c.params, &c.solver, &c.audit_config())?;
    let hash = c.hash(run.command);
    let mut out = JsonOut::new(run);
    out.set("passed", json!(report.passed()));
    out.set("h", json!(report.h));
    out.set("entries", json!(report.entries));
    out.timed("wall_time", start.elapsed().as_secs_f64());
    out.write(&run.out.join("audit.json"))?;
    if run.csv {
        write_file(&run.out.join("audit.csv"), &csv_with_hash(&hash, &report.to_csv()))?;
    }
    for e in &report.entries {
        println!("{:<24} {}", e.check, if e.pass { "pass" } else { "FAIL" });
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_AUDIT })
}
