//! Gauss-Legendre rules on segments and collapsed (Duffy) rules on triangles.

use crate::mesh::Point;

/// `n`-point Gauss-Legendre nodes and weights on `[0, 1]`; exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on the reference triangle as `(barycentric coordinates, weight)`
/// with weights summing to one, so `sum w f(x) * |K|` approximates the integral.
/// Built from `n x n` collapsed Gauss points; exact for total degree `2n - 2`.
pub fn triangle_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for &(s, ws) in &g {
        for &(t, wt) in &g {
            let x = s;
            let y = t * (1.0 - s);
            out.push(([1.0 - x - y, x, y], 2.0 * ws * wt * (1.0 - s)));
        }
    }
    out
}

/// Maps barycentric coordinates to a physical point.
pub fn bary_to_point(p: &[Point; 3], lam: [f64; 3]) -> Point {
    [
        lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
        lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
    ]
}

/// Integral of `f` over the segment `[a, b]` with an `n`-point rule.
pub fn integrate_segment(a: Point, b: Point, n: usize, mut f: impl FnMut(Point) -> f64) -> f64 {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    gauss_legendre(n)
        .iter()
        .map(|&(t, w)| w * f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]))
        .sum::<f64>()
        * len
}
