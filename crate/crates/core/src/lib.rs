//! Logarithmic Neumann-to-Dirichlet maps for electrical impedance tomography
//! on the unit disk: P1 forward solver, Galerkin ND matrices, their
//! logarithms and fractional powers, Fréchet derivatives, and a harness of
//! numerical experiments checking the structural properties of these maps.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod calculus;
pub mod conductivity;
pub mod contour;
pub mod derivative;
pub mod divided;
pub mod error;
pub mod fem;
pub mod harness;
pub mod io;
pub mod mesh;
pub mod nd;
pub mod quadrature;
pub mod scalar;
pub mod skyline;
pub mod sobolev;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DiskMesh = mesh::DiskMesh<f64>;
pub type BoundaryBasis = basis::BoundaryBasis<f64>;
pub type BoundaryVector = basis::BoundaryVector<f64>;
pub type SobolevIndex = sobolev::SobolevIndex<f64>;
pub type SobolevOperator = sobolev::SobolevOperator<f64>;
pub type ConductivityField = conductivity::ConductivityField<f64>;
pub type FemSpace = fem::FemSpace<f64>;
pub type NdMatrix = nd::NdMatrix<f64>;
