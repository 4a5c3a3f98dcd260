use super::{CRFunction, VelocityField};
use crate::error::{invalid, Result};
use crate::fields::{ScalarField, VectorField};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// Three Gauss points per edge: exact edge means for quintic traces.
pub const DEFAULT_EDGE_QUADRATURE: usize = 3;

/// Edge-mean interpolant: each edge value is `|sigma|^{-1} int_sigma f` computed
/// with `n_gauss` Gauss-Legendre points. Boundary edges receive the computed
/// mean as well; a nonzero [`CRFunction::boundary_defect`] marks inputs that do
/// not vanish on the boundary.
pub fn interpolate_rh(mesh: &Mesh, f: &dyn ScalarField, n_gauss: usize) -> Result<CRFunction> {
    if n_gauss == 0 {
        return invalid("edge quadrature needs at least one point");
    }
    let rule = gauss_legendre(n_gauss);
    let values = (0..mesh.n_edges())
        .map(|e| {
            let [a, b] = mesh.edge_points(e);
            rule.iter()
                .map(|&(t, w)| w * f.value([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]))
                .sum()
        })
        .collect();
    let out = CRFunction { values };
    let defect = out.boundary_defect(mesh);
    if defect > 1e-12 {
        log::debug!("interpolated field does not vanish on the boundary (max edge mean {defect:e})");
    }
    Ok(out)
}

/// Componentwise [`interpolate_rh`].
pub fn interpolate_rh_vec(mesh: &Mesh, v: &dyn VectorField, n_gauss: usize) -> Result<VelocityField> {
    struct Comp<'a>(&'a dyn VectorField, usize);
    impl ScalarField for Comp<'_> {
        fn value(&self, x: [f64; 2]) -> f64 {
            self.0.value(x)[self.1]
        }
        fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
            self.0.jacobian(x)[self.1]
        }
    }
    Ok(VelocityField {
        components: [
            interpolate_rh(mesh, &Comp(v, 0), n_gauss)?,
            interpolate_rh(mesh, &Comp(v, 1), n_gauss)?,
        ],
    })
}
