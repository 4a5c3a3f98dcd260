use crate::cr_space::{broken_h1_seminorm, CRFunction};
use crate::error::{invalid, Result};
use crate::mesh::{GeometryTables, Mesh, Point, PointLocator};

use super::bounding_box;

pub const DEFAULT_TRANSLATE_RESOLUTION: usize = 256;
pub const MIN_TRANSLATE_RESOLUTION: usize = 64;

/// `|v~(. + eta) - v~|_{L2(R^2)}` with `v~` the extension of `v` by zero,
/// by the midpoint rule on a `resolution x resolution` grid over a box
/// containing both `Omega` and `Omega - eta`. The integrand is piecewise
/// affine, so the sampling error is first order in the grid spacing.
pub fn translate_norm(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction, eta: Point, resolution: usize) -> Result<f64> {
    if resolution < MIN_TRANSLATE_RESOLUTION {
        return invalid(format!("translate sampling needs at least {MIN_TRANSLATE_RESOLUTION} points per axis, got {resolution}"));
    }
    if !(eta[0].is_finite() && eta[1].is_finite()) {
        return invalid("translation vector must be finite");
    }
    let (lo, hi) = bounding_box(mesh);
    let lo = [lo[0].min(lo[0] - eta[0]), lo[1].min(lo[1] - eta[1])];
    let hi = [hi[0].max(hi[0] - eta[0]), hi[1].max(hi[1] - eta[1])];
    let w = [hi[0] - lo[0], hi[1] - lo[1]];
    if !(w[0] > 0.0 && w[1] > 0.0) {
        return invalid("degenerate bounding box for translate sampling");
    }
    if eta == [0.0, 0.0] {
        return Ok(0.0);
    }
    let loc = PointLocator::new(mesh, geo);
    let eval = |x: Point| loc.locate(x).map_or(0.0, |(k, lam)| v.eval_bary(mesh, k, lam));
    let d = [w[0] / resolution as f64, w[1] / resolution as f64];
    let mut sum = 0.0;
    for j in 0..resolution {
        for i in 0..resolution {
            let x = [lo[0] + (i as f64 + 0.5) * d[0], lo[1] + (j as f64 + 0.5) * d[1]];
            let diff = eval([x[0] + eta[0], x[1] + eta[1]]) - eval(x);
            sum += diff * diff;
        }
    }
    Ok((sum * d[0] * d[1]).sqrt())
}

/// Empirical `c` in `|v~(. + eta) - v~|^2 <= c |eta| (|eta| + h) |v|_b^2`.
pub fn translate_constant(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction, eta: Point, resolution: usize) -> Result<f64> {
    let t = translate_norm(mesh, geo, v, eta, resolution)?;
    let vb = broken_h1_seminorm(mesh, geo, v);
    let e = eta[0].hypot(eta[1]);
    if vb == 0.0 || e == 0.0 {
        return invalid("translate constant needs a nonzero field and a nonzero shift");
    }
    Ok(t * t / (e * (e + geo.h) * vb * vb))
}
