//! Crouzeix-Raviart / upwind finite-volume discretization of steady
//! barotropic compressible Stokes flow with a linear equation of state.

pub mod analysis;
pub mod cr_space;
pub mod error;
pub mod fields;
pub mod fit;
pub mod mesh;
pub mod mms;
pub mod quadrature;
pub mod scheme;
pub mod solver;
pub mod sparse;

pub use cr_space::{CRFunction, CellField, DofMap, VelocityField};
pub use error::{Error, Result};
pub use mesh::{GeometryTables, Mesh, Point};
pub use scheme::SchemeParams;
pub use sparse::{CsrMatrix, DofSpace, SparseSystem};
