use std::f64::consts::PI;

use serde::Serialize;

use crate::cr_space::{broken_gradient_vec, CellField, VelocityField};
use crate::error::{invalid, Result};
use crate::fields::ScalarField;
use crate::mesh::{GeometryTables, Mesh, Point};
use crate::quadrature::{bary_to_point, triangle_rule};

/// Number of members of the default test family.
pub const PSI_FAMILY_SIZE: usize = 5;

/// `scale (s(1-s) t(1-t))^2 g(s, t)` in box coordinates `(s, t)`, with `g` one
/// of `1, cos pi s, cos pi t, cos pi s cos pi t, sin 2 pi s sin 2 pi t`.
/// Vanishes with its gradient on the box boundary.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub member: usize,
    pub scale: f64,
    pub lo: Point,
    pub hi: Point,
}

impl TestFunction {
    pub fn new(member: usize, lo: Point, hi: Point) -> Result<Self> {
        if member >= PSI_FAMILY_SIZE {
            return invalid(format!("test function index {member} out of range 0..{PSI_FAMILY_SIZE}"));
        }
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return invalid("degenerate box for test functions");
        }
        Ok(TestFunction { member, scale: 1.0, lo, hi })
    }

    fn eval(&self, x: Point) -> (f64, Point) {
        let w = [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]];
        let s = (x[0] - self.lo[0]) / w[0];
        let t = (x[1] - self.lo[1]) / w[1];
        // (s(1-s))^2 and its derivative
        let bs = (s * (1.0 - s)).powi(2);
        let dbs = 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        let bt = (t * (1.0 - t)).powi(2);
        let dbt = 2.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        let (ss, cs) = (PI * s).sin_cos();
        let (st, ct) = (PI * t).sin_cos();
        let (s2, c2) = (2.0 * PI * s).sin_cos();
        let (t2, d2) = (2.0 * PI * t).sin_cos();
        let (g, gs, gt) = match self.member {
            0 => (1.0, 0.0, 0.0),
            1 => (cs, -PI * ss, 0.0),
            2 => (ct, 0.0, -PI * st),
            3 => (cs * ct, -PI * ss * ct, -PI * cs * st),
            _ => (s2 * t2, 2.0 * PI * c2 * t2, 2.0 * PI * s2 * d2),
        };
        let v = self.scale * bs * bt * g;
        let ds = self.scale * bt * (dbs * g + bs * gs) / w[0];
        let dt = self.scale * bs * (dbt * g + bt * gt) / w[1];
        (v, [ds, dt])
    }
}

impl ScalarField for TestFunction {
    fn value(&self, x: Point) -> f64 {
        self.eval(x).0
    }
    fn gradient(&self, x: Point) -> Point {
        self.eval(x).1
    }
}

/// The default family over the box `[lo, hi]`.
pub fn default_psi_family(lo: Point, hi: Point) -> Result<Vec<TestFunction>> {
    (0..PSI_FAMILY_SIZE).map(|j| TestFunction::new(j, lo, hi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakResidual {
    /// `|int grad_h u : grad Psi - int p div Psi - int f . Psi|`
    pub momentum: f64,
    /// `|int p u . grad psi|`
    pub mass: f64,
    /// Integral of the absolute integrand of `momentum`; the rounding scale.
    pub momentum_scale: f64,
    pub mass_scale: f64,
}

/// Weak-form residuals of a discrete pair `(u, p)` against each test function.
/// The momentum residual uses the vector field `Psi = (psi_j, psi_{j+1})`
/// (indices mod the family size), the mass residual the scalar `psi_j`.
pub fn weak_residuals(
    mesh: &Mesh,
    geo: &GeometryTables,
    u: &VelocityField,
    p: &CellField,
    forcing: &dyn Fn(Point) -> [f64; 2],
    psi: &[TestFunction],
    quad_order: usize,
) -> Result<Vec<WeakResidual>> {
    if quad_order == 0 {
        return invalid("quadrature order must be at least 1");
    }
    let rule = triangle_rule(quad_order);
    let grads = broken_gradient_vec(mesh, geo, u);
    let n = psi.len();
    let mut acc = vec![[0.0; 4]; n];
    for k in 0..mesh.n_cells() {
        let pts = mesh.cell_points(k);
        let (area, pk, gu) = (geo.cell_measure[k], p.values[k], grads[k]);
        for &(lam, w) in &rule {
            let x = bary_to_point(&pts, lam);
            let f = forcing(x);
            let uh = u.eval_bary(mesh, k, lam);
            let vals: Vec<(f64, Point)> = psi.iter().map(|s| s.eval(x)).collect();
            for j in 0..n {
                let (v0, g0) = vals[j];
                let (v1, g1) = vals[(j + 1) % n];
                let grad_pair = gu[0][0] * g0[0] + gu[0][1] * g0[1] + gu[1][0] * g1[0] + gu[1][1] * g1[1];
                let div = g0[0] + g1[1];
                let wa = w * area;
                let m = [grad_pair, -pk * div, -f[0] * v0 - f[1] * v1];
                let r = pk * (uh[0] * g0[0] + uh[1] * g0[1]);
                acc[j][0] += wa * m.iter().sum::<f64>();
                acc[j][1] += wa * r;
                acc[j][2] += wa.abs() * m.iter().map(|x| x.abs()).sum::<f64>();
                acc[j][3] += wa.abs() * r.abs();
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|a| WeakResidual { momentum: a[0].abs(), mass: a[1].abs(), momentum_scale: a[2], mass_scale: a[3] })
        .collect())
}
