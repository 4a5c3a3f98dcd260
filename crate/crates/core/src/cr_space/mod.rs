//! Crouzeix-Raviart velocities and piecewise-constant pressures.
//!
//! A [`CRFunction`] stores one value per edge: the edge mean `F_sigma(v)`. On a
//! cell the affine representative is `sum_i v_i (1 - 2 lambda_i)` where local
//! edge `i` is opposite the vertex carrying `lambda_i`.

mod basis;
mod interp;
pub mod io;
mod norms;

pub(crate) use basis::basis_gradient;
pub use basis::{broken_divergence, broken_gradient, broken_gradient_vec, eval_basis};
pub use interp::{interpolate_rh, interpolate_rh_vec, DEFAULT_EDGE_QUADRATURE};
pub use norms::{
    broken_h1_seminorm, broken_h1_seminorm_vec, discrete_rho_seminorm, edge_jump_integrals,
    jump_sum, l2_error, l2_norm,
};

use crate::mesh::{GeometryTables, Mesh, Point};

/// Scalar Crouzeix-Raviart field, one edge mean per mesh edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CRFunction {
    pub values: Vec<f64>,
}

impl CRFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        CRFunction { values: vec![0.0; mesh.n_edges()] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        CRFunction { values }
    }

    /// Edge means of the three local edges of `cell`.
    pub fn local(&self, mesh: &Mesh, cell: usize) -> [f64; 3] {
        mesh.cell_edges()[cell].map(|e| self.values[e])
    }

    /// Value of the affine representative on `cell` at barycentric coordinates `lam`.
    pub fn eval_bary(&self, mesh: &Mesh, cell: usize, lam: [f64; 3]) -> f64 {
        let v = self.local(mesh, cell);
        (0..3).map(|i| v[i] * (1.0 - 2.0 * lam[i])).sum()
    }

    /// Value of the affine representative on `cell` at the point `x`.
    pub fn eval(&self, mesh: &Mesh, geo: &GeometryTables, cell: usize, x: Point) -> f64 {
        let lam = crate::mesh::barycentric_coords(mesh, geo, cell, x);
        self.eval_bary(mesh, cell, lam)
    }

    /// Trace of the cell-`cell` representative at each of its vertices.
    pub fn vertex_traces(&self, mesh: &Mesh, cell: usize) -> [f64; 3] {
        let v = self.local(mesh, cell);
        let s = v[0] + v[1] + v[2];
        [s - 2.0 * v[0], s - 2.0 * v[1], s - 2.0 * v[2]]
    }

    /// Largest magnitude on boundary edges; zero for members of the discrete space.
    pub fn boundary_defect(&self, mesh: &Mesh) -> f64 {
        (0..mesh.n_edges())
            .filter(|&e| mesh.is_boundary(e))
            .map(|e| self.values[e].abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        CRFunction { values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &CRFunction) -> Self {
        CRFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }
}

/// Vector Crouzeix-Raviart field, stored component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub components: [CRFunction; 2],
}

impl VelocityField {
    pub fn zeros(mesh: &Mesh) -> Self {
        VelocityField { components: [CRFunction::zeros(mesh), CRFunction::zeros(mesh)] }
    }

    /// Edge-mean vector `u_sigma`.
    pub fn at_edge(&self, edge: usize) -> Point {
        [self.components[0].values[edge], self.components[1].values[edge]]
    }

    pub fn eval_bary(&self, mesh: &Mesh, cell: usize, lam: [f64; 3]) -> [f64; 2] {
        [
            self.components[0].eval_bary(mesh, cell, lam),
            self.components[1].eval_bary(mesh, cell, lam),
        ]
    }

    pub fn scaled(&self, s: f64) -> Self {
        VelocityField { components: [self.components[0].scaled(s), self.components[1].scaled(s)] }
    }

    pub fn sub(&self, other: &VelocityField) -> Self {
        VelocityField {
            components: [
                self.components[0].sub(&other.components[0]),
                self.components[1].sub(&other.components[1]),
            ],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.values.iter().all(|v| v.is_finite()))
    }
}

/// Piecewise-constant field, one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
}

impl CellField {
    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        CellField { values: vec![c; mesh.n_cells()] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        CellField { values }
    }

    /// `int_Omega q`
    pub fn integral(&self, geo: &GeometryTables) -> f64 {
        self.values.iter().zip(&geo.cell_measure).map(|(q, a)| q * a).sum()
    }

    pub fn mean(&self, geo: &GeometryTables) -> f64 {
        self.integral(geo) / geo.domain_measure
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        CellField { values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn l2_norm(&self, geo: &GeometryTables) -> f64 {
        self.values.iter().zip(&geo.cell_measure).map(|(q, a)| q * q * a).sum::<f64>().sqrt()
    }
}

/// Degree-of-freedom numbering. Velocity unknowns live on interior edges only,
/// numbered component-major: `comp * n_free + free_index(edge)`.
#[derive(Debug, Clone)]
pub struct DofMap {
    free_index: Vec<Option<usize>>,
    free_edges: Vec<usize>,
    n_cells: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut free_index = vec![None; mesh.n_edges()];
        let mut free_edges = Vec::with_capacity(mesh.n_interior_edges());
        for e in mesh.interior_edges() {
            free_index[e] = Some(free_edges.len());
            free_edges.push(e);
        }
        DofMap { free_index, free_edges, n_cells: mesh.n_cells() }
    }

    /// Free scalar unknowns per component.
    pub fn n_free(&self) -> usize {
        self.free_edges.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.free_edges.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_cells
    }

    pub fn free_index(&self, edge: usize) -> Option<usize> {
        self.free_index[edge]
    }

    pub fn free_edges(&self) -> &[usize] {
        &self.free_edges
    }

    pub fn velocity_dof(&self, edge: usize, comp: usize) -> Option<usize> {
        self.free_index[edge].map(|i| comp * self.free_edges.len() + i)
    }

    /// Free-DOF vector of a field; boundary values are dropped.
    pub fn scatter_scalar(&self, v: &CRFunction) -> Vec<f64> {
        self.free_edges.iter().map(|&e| v.values[e]).collect()
    }

    pub fn gather_scalar(&self, x: &[f64]) -> CRFunction {
        let mut values = vec![0.0; self.free_index.len()];
        for (i, &e) in self.free_edges.iter().enumerate() {
            values[e] = x[i];
        }
        CRFunction { values }
    }

    pub fn scatter(&self, u: &VelocityField) -> Vec<f64> {
        let mut out = self.scatter_scalar(&u.components[0]);
        out.extend(self.scatter_scalar(&u.components[1]));
        out
    }

    pub fn gather(&self, x: &[f64]) -> VelocityField {
        let n = self.n_free();
        VelocityField {
            components: [self.gather_scalar(&x[..n]), self.gather_scalar(&x[n..2 * n])],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, Rect};

    #[test]
    fn dof_counts() {
        let m = build_structured(3, 3, Rect::unit()).unwrap();
        let d = DofMap::new(&m);
        assert_eq!(d.n_velocity(), 2 * m.n_interior_edges());
        assert_eq!(d.n_pressure(), m.n_cells());
        for e in 0..m.n_edges() {
            assert_eq!(d.free_index(e).is_none(), m.is_boundary(e));
        }
    }

    #[test]
    fn scatter_gather_zeroes_boundary() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        let d = DofMap::new(&m);
        let u = VelocityField {
            components: [
                CRFunction::from_values((0..m.n_edges()).map(|e| e as f64).collect()),
                CRFunction::from_values(vec![1.0; m.n_edges()]),
            ],
        };
        let back = d.gather(&d.scatter(&u));
        for e in 0..m.n_edges() {
            let expect = if m.is_boundary(e) { [0.0, 0.0] } else { u.at_edge(e) };
            assert_eq!(back.at_edge(e), expect);
        }
        assert_eq!(back.components[0].boundary_defect(&m), 0.0);
    }
}
