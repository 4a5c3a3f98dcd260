use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};

use crate::cr_space::DofMap;
use crate::error::{invalid, Error, Result};
use crate::mesh::{GeometryTables, Mesh};
use crate::scheme::assemble_momentum;
use crate::solver::linear::SpdFactor;

/// Above this many cells the dense eigensolve is refused.
pub const INFSUP_MAX_CELLS: usize = 4096;

/// Discrete inf-sup constant of the CR / P0 pair:
/// `min_q sup_v int q div_h v / (|v|_b |q - q_m|_{L2})`.
///
/// Computed as the square root of the smallest eigenvalue of the pressure
/// Schur complement `B A^{-1} B^T` taken relative to the pressure mass matrix
/// on mean-zero pressures.
pub fn infsup_constant(mesh: &Mesh, geo: &GeometryTables, dofs: &DofMap) -> Result<f64> {
    let nc = mesh.n_cells();
    if nc < 2 {
        return invalid("the inf-sup constant needs at least two cells");
    }
    if nc > INFSUP_MAX_CELLS {
        return invalid(format!("dense inf-sup eigensolve limited to {INFSUP_MAX_CELLS} cells, mesh has {nc}"));
    }
    let sys = assemble_momentum(mesh, geo, dofs, &|_| [0.0, 0.0], 1)?;
    let n = dofs.n_free();
    if n == 0 {
        return Err(Error::Eigen("no free velocity unknowns".into()));
    }
    let factor = SpdFactor::new(&sys.scalar_stiffness)?;
    let bt = sys.coupling.transpose();

    // column K of A^{-1} B^T, one scalar solve per component
    let mut s = Mat::<f64>::zeros(nc, nc);
    let mut col = vec![0.0; nc];
    for k in 0..nc {
        col.fill(0.0);
        col[k] = 1.0;
        let rhs = bt.mul_vec(&col);
        let mut x = factor.solve(&rhs[..n]);
        x.extend(factor.solve(&rhs[n..]));
        let sk = sys.coupling.mul_vec(&x);
        for j in 0..nc {
            s[(j, k)] = sk[j];
        }
    }

    // scale by the inverse square root of the mass matrix, deflate the constants
    let w: Vec<f64> = geo.cell_measure.iter().map(|a| a.sqrt()).collect();
    let w2: f64 = geo.cell_measure.iter().sum();
    let mut trace = 0.0;
    for i in 0..nc {
        for j in 0..nc {
            s[(i, j)] /= w[i] * w[j];
        }
        trace += s[(i, i)];
    }
    for i in 0..nc {
        for j in 0..i {
            let sym = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = sym;
            s[(j, i)] = sym;
        }
    }
    for i in 0..nc {
        for j in 0..nc {
            s[(i, j)] += trace * w[i] * w[j] / w2;
        }
    }
    // sequential so the result does not depend on the thread count
    let mut eig = Diag::<f64>::zeros(nc);
    let scratch = self_adjoint_evd_scratch::<f64>(nc, ComputeEigenvectors::No, Par::Seq, Default::default());
    self_adjoint_evd(
        s.as_ref(),
        eig.as_mut(),
        None,
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::Eigen(format!("symmetric eigensolve failed: {e:?}")))?;
    let lmin = eig.column_vector().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::Eigen(format!("smallest mean-zero Schur eigenvalue is {lmin:e}")));
    }
    Ok(lmin.sqrt())
}
