use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::fields::{ScalarField, VectorField};
use crate::mesh::Point;
use crate::quadrature::gauss_legendre;

/// Step of the fourth-order central differences used by [`ManufacturedCase::forcing_fd`].
/// Smaller steps lose more to cancellation than they gain in truncation error.
pub const FD_STEP: f64 = 1e-3;

/// Largest supported trigonometric mode.
pub const MAX_MODE: u32 = 8;

/// Value and first three derivatives of a function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

impl Jet {
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }
}

/// `s^2 (1 - s)^2`
fn bump(s: f64) -> Jet {
    Jet {
        v: s * s * (1.0 - s) * (1.0 - s),
        d1: 2.0 * s - 6.0 * s * s + 4.0 * s * s * s,
        d2: 2.0 - 12.0 * s + 12.0 * s * s,
        d3: -12.0 + 24.0 * s,
    }
}

/// `cos(k pi s)`; the constant one for `k = 0`.
fn cosine(k: u32, s: f64) -> Jet {
    let w = k as f64 * PI;
    let (sn, cs) = (w * s).sin_cos();
    Jet { v: cs, d1: -w * sn, d2: -w * w * cs, d3: w * w * w * sn }
}

/// Manufactured solution on the unit square built from the stream potential
/// `psi = X(x) Y(y)`, `X(s) = s^2 (1 - s)^2 cos(k pi s)`.
///
/// The momentum `m = curl psi = (X Y', -X' Y)` is divergence free and vanishes
/// with its normal derivative on the boundary; the velocity is `u = m / rho`
/// so `div(rho u) = 0` identically. The pressure is the constant
/// `p0 = M / (A |Omega|)` for mode 0, otherwise
/// `p0 (1 + cos(k pi x) cos(k pi y) / 2)`, which has mean `p0` and minimum `p0 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub a: f64,
    pub mass: f64,
    pub mode: u32,
    /// Factor multiplying the stream potential.
    pub amplitude: f64,
    p0: f64,
}

/// Evaluation of every exact quantity at one point.
#[derive(Debug, Clone, Copy)]
struct Pointwise {
    m: [f64; 2],
    /// `dm[i][j] = d m_i / d x_j`
    dm: [[f64; 2]; 2],
    lap_m: [f64; 2],
    p: f64,
    grad_p: [f64; 2],
    lap_p: f64,
}

pub fn stream_function_case(a: f64, mass: f64, mode: u32) -> Result<ManufacturedCase> {
    if !(a > 0.0 && a.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
        return invalid(format!("manufactured case needs A > 0 and M > 0, got A = {a}, M = {mass}"));
    }
    if mode > MAX_MODE {
        return invalid(format!("manufactured mode {mode} exceeds the supported maximum {MAX_MODE}"));
    }
    let case = ManufacturedCase { a, mass, mode, amplitude: 1.0, p0: mass / a };
    if !(case.min_pressure() > 0.0) {
        return invalid("manufactured pressure is not bounded away from zero");
    }
    let total = case.density_integral(12);
    if (total - mass).abs() > 1e-12 * mass {
        return invalid(format!("manufactured density integrates to {total}, expected {mass}"));
    }
    Ok(case)
}

impl ManufacturedCase {
    /// Same case with the stream potential scaled by `amplitude`.
    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude != 0.0) {
            return invalid(format!("stream amplitude must be finite and nonzero, got {amplitude}"));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    /// Mean pressure `M / (A |Omega|)`.
    pub fn mean_pressure(&self) -> f64 {
        self.p0
    }

    /// Lower bound of the exact pressure over the closed square.
    pub fn min_pressure(&self) -> f64 {
        if self.mode == 0 {
            self.p0
        } else {
            0.5 * self.p0
        }
    }

    fn eval(&self, x: Point) -> Pointwise {
        let t = [cosine(self.mode, x[0]), cosine(self.mode, x[1])];
        let mut xs = bump(x[0]).mul(t[0]);
        xs = Jet {
            v: self.amplitude * xs.v,
            d1: self.amplitude * xs.d1,
            d2: self.amplitude * xs.d2,
            d3: self.amplitude * xs.d3,
        };
        let ys = bump(x[1]).mul(t[1]);
        let m = [xs.v * ys.d1, -xs.d1 * ys.v];
        let dm = [[xs.d1 * ys.d1, xs.v * ys.d2], [-xs.d2 * ys.v, -xs.d1 * ys.d1]];
        let lap_m = [xs.d2 * ys.d1 + xs.v * ys.d3, -xs.d3 * ys.v - xs.d1 * ys.d2];
        let (p, grad_p, lap_p) = if self.mode == 0 {
            (self.p0, [0.0, 0.0], 0.0)
        } else {
            let h = 0.5 * self.p0;
            (
                self.p0 + h * t[0].v * t[1].v,
                [h * t[0].d1 * t[1].v, h * t[0].v * t[1].d1],
                h * (t[0].d2 * t[1].v + t[0].v * t[1].d2),
            )
        };
        Pointwise { m, dm, lap_m, p, grad_p, lap_p }
    }

    pub fn pressure(&self, x: Point) -> f64 {
        self.eval(x).p
    }

    pub fn pressure_gradient(&self, x: Point) -> Point {
        self.eval(x).grad_p
    }

    pub fn density(&self, x: Point) -> f64 {
        self.a * self.pressure(x)
    }

    /// `rho u = curl psi`
    pub fn momentum(&self, x: Point) -> [f64; 2] {
        self.eval(x).m
    }

    pub fn velocity(&self, x: Point) -> [f64; 2] {
        let e = self.eval(x);
        let rho = self.a * e.p;
        [e.m[0] / rho, e.m[1] / rho]
    }

    /// `jac[i][j] = d u_i / d x_j`
    pub fn velocity_jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let e = self.eval(x);
        let rho = self.a * e.p;
        let gr = [self.a * e.grad_p[0], self.a * e.grad_p[1]];
        let mut j = [[0.0; 2]; 2];
        for i in 0..2 {
            for d in 0..2 {
                j[i][d] = e.dm[i][d] / rho - e.m[i] * gr[d] / (rho * rho);
            }
        }
        j
    }

    /// `div(rho u)` from the analytic derivatives of the momentum.
    pub fn mass_flux_divergence(&self, x: Point) -> f64 {
        let e = self.eval(x);
        e.dm[0][0] + e.dm[1][1]
    }

    /// `f = -Laplace(u) + grad p` in closed form.
    pub fn forcing(&self, x: Point) -> [f64; 2] {
        let e = self.eval(x);
        let rho = self.a * e.p;
        let gr = [self.a * e.grad_p[0], self.a * e.grad_p[1]];
        let lap_rho = self.a * e.lap_p;
        let gr2 = gr[0] * gr[0] + gr[1] * gr[1];
        let mut f = [0.0; 2];
        for i in 0..2 {
            let cross = e.dm[i][0] * gr[0] + e.dm[i][1] * gr[1];
            let lap_u = e.lap_m[i] / rho - 2.0 * cross / (rho * rho)
                + e.m[i] * (2.0 * gr2 / (rho * rho * rho) - lap_rho / (rho * rho));
            f[i] = -lap_u + e.grad_p[i];
        }
        f
    }

    /// Same forcing from fourth-order central differences of `u` and `p` with step `h`.
    pub fn forcing_fd(&self, x: Point, h: f64) -> [f64; 2] {
        let shift = |d: usize, s: f64| {
            let mut y = x;
            y[d] += s;
            y
        };
        let second = |g: &dyn Fn(Point) -> f64, d: usize| {
            (-g(shift(d, 2.0 * h)) + 16.0 * g(shift(d, h)) - 30.0 * g(x) + 16.0 * g(shift(d, -h))
                - g(shift(d, -2.0 * h)))
                / (12.0 * h * h)
        };
        let first = |g: &dyn Fn(Point) -> f64, d: usize| {
            (-g(shift(d, 2.0 * h)) + 8.0 * g(shift(d, h)) - 8.0 * g(shift(d, -h)) + g(shift(d, -2.0 * h)))
                / (12.0 * h)
        };
        let p = |y: Point| self.pressure(y);
        let mut f = [0.0; 2];
        for (i, fi) in f.iter_mut().enumerate() {
            let ui = |y: Point| self.velocity(y)[i];
            *fi = -(second(&ui, 0) + second(&ui, 1)) + first(&p, i);
        }
        f
    }

    /// `int rho` over the unit square with an `n x n` tensor Gauss rule.
    pub fn density_integral(&self, n: usize) -> f64 {
        let g = gauss_legendre(n);
        let mut s = 0.0;
        for &(x, wx) in &g {
            for &(y, wy) in &g {
                s += wx * wy * self.density([x, y]);
            }
        }
        s
    }

    pub fn velocity_field(&self) -> ExactVelocity<'_> {
        ExactVelocity(self)
    }

    pub fn velocity_component(&self, i: usize) -> ExactVelocityComponent<'_> {
        assert!(i < 2);
        ExactVelocityComponent(self, i)
    }

    pub fn pressure_field(&self) -> ExactPressure<'_> {
        ExactPressure(self)
    }
}

pub struct ExactVelocity<'a>(&'a ManufacturedCase);

impl VectorField for ExactVelocity<'_> {
    fn value(&self, x: Point) -> [f64; 2] {
        self.0.velocity(x)
    }
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        self.0.velocity_jacobian(x)
    }
}

pub struct ExactVelocityComponent<'a>(&'a ManufacturedCase, usize);

impl ScalarField for ExactVelocityComponent<'_> {
    fn value(&self, x: Point) -> f64 {
        self.0.velocity(x)[self.1]
    }
    fn gradient(&self, x: Point) -> Point {
        self.0.velocity_jacobian(x)[self.1]
    }
}

pub struct ExactPressure<'a>(&'a ManufacturedCase);

impl ScalarField for ExactPressure<'_> {
    fn value(&self, x: Point) -> f64 {
        self.0.pressure(x)
    }
    fn gradient(&self, x: Point) -> Point {
        self.0.pressure_gradient(x)
    }
}
