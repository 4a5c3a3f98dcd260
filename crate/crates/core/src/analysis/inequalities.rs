use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cr_space::{broken_gradient, broken_h1_seminorm, jump_sum, CRFunction};
use crate::error::{invalid, Result};
use crate::fields::{FnScalar, ScalarField};
use crate::mesh::{GeometryTables, Mesh, Point};
use crate::quadrature::{bary_to_point, integrate_segment, triangle_rule};

use super::bounding_box;

/// Measured ratios of the discrete functional inequalities on one mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityMeasures {
    /// `max (sum_sigma h_sigma^{-1} int_sigma [v]^2) / |v|_b^2` over the samples.
    pub jump_ratio: f64,
    /// Explicit constant of the jump bound, from [`jump_constant_bound`].
    pub jump_bound: f64,
    /// Largest `|v|_sigma / ((2 |sigma| / |K|)^{1/2} (|v|_K + h_K |grad v|_K))`.
    pub trace_ratio: f64,
    /// Largest `|v - v_K|_K / (h_K / pi |grad v|_K)` for affine `v`.
    pub poincare_ratio: f64,
    /// Empirical `c` in `sum_sigma |int_sigma a_sigma [v] f| <= c h |v|_b |f|_{H1}`.
    pub jump_pairing_constant: f64,
}

impl InequalityMeasures {
    pub fn holds(&self) -> bool {
        self.jump_ratio <= self.jump_bound * (1.0 + 1e-12)
            && self.trace_ratio <= 1.0 + 1e-12
            && self.poincare_ratio <= 1.0 + 1e-12
    }
}

/// `max_K |K|^{-1} sum_{sigma in E(K)} c_sigma h_sigma |sigma|` with `c_sigma = 2`
/// on interior and `1` on boundary edges. Bounds the jump sum by this times
/// the squared broken H1 seminorm.
pub fn jump_constant_bound(mesh: &Mesh, geo: &GeometryTables) -> f64 {
    (0..mesh.n_cells())
        .map(|k| {
            let s: f64 = mesh.cell_edges()[k]
                .iter()
                .map(|&e| {
                    let c = if mesh.is_boundary(e) { 1.0 } else { 2.0 };
                    c * geo.edge_diameter[e] * geo.edge_measure[e]
                })
                .sum();
            s / geo.cell_measure[k]
        })
        .fold(0.0, f64::max)
}

/// Random member of the discrete space: uniform `[-1, 1]` on interior edges,
/// zero on the boundary.
pub fn random_cr_function(mesh: &Mesh, rng: &mut ChaCha8Rng) -> CRFunction {
    let mut v = CRFunction::zeros(mesh);
    for e in mesh.interior_edges() {
        v.values[e] = rng.gen_range(-1.0..1.0);
    }
    v
}

/// Random sum of `sin(k pi s) sin(l pi t)`, `k, l <= 3`, in coordinates `(s, t)`
/// of the box `[lo, hi]`; vanishes on the box boundary.
pub fn random_smooth_field(lo: Point, hi: Point, rng: &mut ChaCha8Rng) -> impl ScalarField {
    let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = [hi[0] - lo[0], hi[1] - lo[1]];
    let terms = move |x: Point| {
        let s = [(x[0] - lo[0]) / w[0], (x[1] - lo[1]) / w[1]];
        (0..9).map(move |i| {
            let (k, l) = ((i / 3 + 1) as f64, (i % 3 + 1) as f64);
            let (sk, ck) = (k * PI * s[0]).sin_cos();
            let (sl, cl) = (l * PI * s[1]).sin_cos();
            (i, k, l, sk, ck, sl, cl)
        })
    };
    let c2 = c.clone();
    FnScalar {
        f: move |x: Point| terms(x).map(|(i, _, _, sk, _, sl, _)| c[i] * sk * sl).sum(),
        grad: move |x: Point| {
            terms(x).fold([0.0; 2], |g, (i, k, l, sk, ck, sl, cl)| {
                [g[0] + c2[i] * k * PI / w[0] * ck * sl, g[1] + c2[i] * l * PI / w[1] * sk * cl]
            })
        },
    }
}

fn h1_seminorm_of(mesh: &Mesh, geo: &GeometryTables, f: &dyn ScalarField, n: usize) -> f64 {
    let rule = triangle_rule(n);
    (0..mesh.n_cells())
        .map(|k| {
            let p = mesh.cell_points(k);
            geo.cell_measure[k] * rule
                .iter()
                .map(|&(lam, w)| {
                    let g = f.gradient(bary_to_point(&p, lam));
                    w * (g[0] * g[0] + g[1] * g[1])
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `sum_{sigma interior} |int_sigma a_sigma [v] f|`
pub fn jump_pairing(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction, a: &[f64], f: &dyn ScalarField) -> f64 {
    mesh.interior_edges()
        .map(|e| {
            let (k, l) = mesh.edge_cells()[e];
            let l = l.expect("interior edge");
            let [p, q] = mesh.edge_points(e);
            let s = integrate_segment(p, q, 4, |x| (v.eval(mesh, geo, k, x) - v.eval(mesh, geo, l, x)) * f.value(x));
            (a[e] * s).abs()
        })
        .sum()
}

fn trace_and_poincare(mesh: &Mesh, geo: &GeometryTables, v: &CRFunction) -> (f64, f64) {
    let rule = triangle_rule(2);
    let grads = broken_gradient(mesh, geo, v);
    let (mut trace, mut poincare) = (0.0f64, 0.0f64);
    for k in 0..mesh.n_cells() {
        let area = geo.cell_measure[k];
        let p = mesh.cell_points(k);
        let c = geo.cell_centroid[k];
        let g = grads[k];
        let grad_norm = (area * (g[0] * g[0] + g[1] * g[1])).sqrt();
        let (mut l2, mut dev) = (0.0, 0.0);
        for &(lam, w) in &rule {
            let x = bary_to_point(&p, lam);
            l2 += w * v.eval_bary(mesh, k, lam).powi(2);
            dev += w * (g[0] * (x[0] - c[0]) + g[1] * (x[1] - c[1])).powi(2);
        }
        let l2 = (area * l2).sqrt();
        let dev = (area * dev).sqrt();
        if grad_norm > 0.0 {
            poincare = poincare.max(dev / (geo.cell_diameter[k] / PI * grad_norm));
        }
        let traces = v.vertex_traces(mesh, k);
        let verts = mesh.cells()[k];
        for &e in &mesh.cell_edges()[k] {
            let [a, b] = mesh.edges()[e];
            let ta = traces[verts.iter().position(|&x| x == a).expect("edge vertex")];
            let tb = traces[verts.iter().position(|&x| x == b).expect("edge vertex")];
            let len = geo.edge_measure[e];
            let lhs = (len * (ta * ta + ta * tb + tb * tb) / 3.0).sqrt();
            let rhs = (2.0 * len / area).sqrt() * (l2 + geo.cell_diameter[k] * grad_norm);
            if rhs > 0.0 {
                trace = trace.max(lhs / rhs);
            }
        }
    }
    (trace, poincare)
}

/// Samples `n_random` discrete fields (and as many smooth test functions and
/// edge weights) and records the worst ratio of each inequality.
pub fn check_inequalities(mesh: &Mesh, geo: &GeometryTables, n_random: usize, seed: u64) -> Result<InequalityMeasures> {
    if n_random == 0 {
        return invalid("at least one random sample is required");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = bounding_box(mesh);
    let mut m = InequalityMeasures {
        jump_ratio: 0.0,
        jump_bound: jump_constant_bound(mesh, geo),
        trace_ratio: 0.0,
        poincare_ratio: 0.0,
        jump_pairing_constant: 0.0,
    };
    for _ in 0..n_random {
        let v = random_cr_function(mesh, &mut rng);
        let vb = broken_h1_seminorm(mesh, geo, &v);
        if vb == 0.0 {
            continue;
        }
        m.jump_ratio = m.jump_ratio.max(jump_sum(mesh, geo, &v) / (vb * vb));
        let (t, p) = trace_and_poincare(mesh, geo, &v);
        m.trace_ratio = m.trace_ratio.max(t);
        m.poincare_ratio = m.poincare_ratio.max(p);

        let f = random_smooth_field(lo, hi, &mut rng);
        let a: Vec<f64> = (0..mesh.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fh1 = h1_seminorm_of(mesh, geo, &f, 5);
        if fh1 > 0.0 {
            let c = jump_pairing(mesh, geo, &v, &a, &f) / (geo.h * vb * fh1);
            m.jump_pairing_constant = m.jump_pairing_constant.max(c);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_space::interpolate_rh;
    use crate::fields::Affine;
    use crate::mesh::{build_structured, compute_geometry, Rect};

    #[test]
    fn continuous_fields_have_no_jumps() {
        let m = build_structured(4, 4, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = interpolate_rh(&m, &Affine { a: 0.3, b: [1.0, -2.0] }, 2).unwrap();
        let interior: f64 = m
            .interior_edges()
            .map(|e| crate::cr_space::edge_jump_integrals(&m, &g, &v)[e].1)
            .sum();
        assert!(interior < 1e-28);
        let a = vec![1.0; m.n_edges()];
        let f = Affine { a: 1.0, b: [0.5, 0.5] };
        assert!(jump_pairing(&m, &g, &v, &a, &f) < 1e-14);
    }

    #[test]
    fn single_cell_trace_and_poincare() {
        let m = Mesh::from_cells(vec![[0.0, 0.0], [2.0, 0.0], [0.5, 1.0]], vec![[0, 1, 2]]).unwrap();
        let g = compute_geometry(&m).unwrap();
        let v = interpolate_rh(&m, &Affine { a: 1.0, b: [0.7, -0.4] }, 2).unwrap();
        let (t, p) = trace_and_poincare(&m, &g, &v);
        assert!(t > 0.0 && t <= 1.0);
        assert!(p > 0.0 && p <= 1.0);

        // direct evaluation on the bottom edge, y = 0: v = 1 + 0.7 x on [0, 2]
        let lhs = ((0..2000).map(|i| (1.0 + 0.7 * (i as f64 + 0.5) / 1000.0).powi(2)).sum::<f64>() / 1000.0).sqrt();
        let area: f64 = 1.0;
        let grad = (0.49f64 + 0.16).sqrt() * area.sqrt();
        let rhs = (2.0 * 2.0 / area).sqrt() * (crate::cr_space::l2_norm(&m, &g, &v) + g.cell_diameter[0] * grad);
        assert!(lhs / rhs <= t + 1e-6);
    }

    #[test]
    fn explicit_jump_constant_holds_on_random_fields() {
        for n in [2, 4, 8] {
            let m = build_structured(n, n, Rect::unit()).unwrap();
            let g = compute_geometry(&m).unwrap();
            let r = check_inequalities(&m, &g, 10, 3).unwrap();
            assert!(r.holds(), "{r:?}");
            assert!(r.jump_pairing_constant > 0.0);
        }
        // the bound does not depend on h for a uniform family
        let b: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&n| {
                let m = build_structured(n, n, Rect::unit()).unwrap();
                jump_constant_bound(&m, &compute_geometry(&m).unwrap())
            })
            .collect();
        assert!((b[0] - b[2]).abs() < 1e-12 * b[0]);
    }

    #[test]
    fn zero_samples_rejected() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        assert!(check_inequalities(&m, &g, 0, 0).is_err());
    }
}
