//! Shared numerical kernels: tridiagonal solves, quadrature, derivative
//! stencils, a symmetric tridiagonal eigensolver, and small optimization
//! utilities.

pub mod eig;
pub mod optimize;
pub mod quad;
pub mod stencil;
pub mod tridiag;
