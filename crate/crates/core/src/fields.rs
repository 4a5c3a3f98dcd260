//! Smooth analytic fields used as interpolation inputs, forcings, and test functions.

use std::f64::consts::PI;

use crate::mesh::Point;

pub trait ScalarField: Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;
}

/// Vector field on the plane. `jacobian(x)[i][j]` is `d v_i / d x_j`.
pub trait VectorField: Sync {
    fn value(&self, x: Point) -> [f64; 2];
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2];

    fn divergence(&self, x: Point) -> f64 {
        let j = self.jacobian(x);
        j[0][0] + j[1][1]
    }
}

/// Scalar field from a value closure and a gradient closure.
pub struct FnScalar<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F, G> ScalarField for FnScalar<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> Point + Sync,
{
    fn value(&self, x: Point) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: Point) -> Point {
        (self.grad)(x)
    }
}

/// Vector field from a value closure and a Jacobian closure.
pub struct FnVector<F, G> {
    pub f: F,
    pub jac: G,
}

impl<F, G> VectorField for FnVector<F, G>
where
    F: Fn(Point) -> [f64; 2] + Sync,
    G: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    fn value(&self, x: Point) -> [f64; 2] {
        (self.f)(x)
    }
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        (self.jac)(x)
    }
}

/// Both components of a vector field taken from scalar fields.
pub struct Componentwise<A, B>(pub A, pub B);

impl<A: ScalarField, B: ScalarField> VectorField for Componentwise<A, B> {
    fn value(&self, x: Point) -> [f64; 2] {
        [self.0.value(x), self.1.value(x)]
    }
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        [self.0.gradient(x), self.1.gradient(x)]
    }
}

/// `a + b . x`
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: f64,
    pub b: Point,
}

impl ScalarField for Affine {
    fn value(&self, x: Point) -> f64 {
        self.a + self.b[0] * x[0] + self.b[1] * x[1]
    }
    fn gradient(&self, _x: Point) -> Point {
        self.b
    }
}

/// `x(1-x) y(1-y)`, vanishing on the boundary of the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bubble;

impl ScalarField for Bubble {
    fn value(&self, x: Point) -> f64 {
        x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
    }
    fn gradient(&self, x: Point) -> Point {
        [
            (1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
            x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
        ]
    }
}

/// `sin(k pi x) sin(l pi y)`
#[derive(Debug, Clone, Copy)]
pub struct SinSin {
    pub k: f64,
    pub l: f64,
}

impl SinSin {
    pub fn fundamental() -> Self {
        SinSin { k: 1.0, l: 1.0 }
    }
}

impl ScalarField for SinSin {
    fn value(&self, x: Point) -> f64 {
        (self.k * PI * x[0]).sin() * (self.l * PI * x[1]).sin()
    }
    fn gradient(&self, x: Point) -> Point {
        [
            self.k * PI * (self.k * PI * x[0]).cos() * (self.l * PI * x[1]).sin(),
            self.l * PI * (self.k * PI * x[0]).sin() * (self.l * PI * x[1]).cos(),
        ]
    }
}

/// `x^2 + x y - y^2 / 2 + x`, a full quadratic used for exact-order checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl ScalarField for Quadratic {
    fn value(&self, x: Point) -> f64 {
        x[0] * x[0] + x[0] * x[1] - 0.5 * x[1] * x[1] + x[0]
    }
    fn gradient(&self, x: Point) -> Point {
        [2.0 * x[0] + x[1] + 1.0, x[0] - x[1]]
    }
}
