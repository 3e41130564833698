//! Forward solvers, small-p asymptotics, and order inversion for a
//! one-dimensional subdiffusion model whose fractional order is piecewise
//! constant in space.
//!
//! The model on (0, L) is
//!
//! ```text
//! rho(x) d_t^{alpha(x)} U - (sigma(x) U')' + q(x) U = 0,
//! ```
//!
//! driven by polynomial Dirichlet data g(t) on one boundary and homogeneous
//! data on the other. The crate provides:
//!
//! - [`laplace_domain`]: the Laplace-variable boundary value problem and its
//!   boundary flux;
//! - [`asymptotics`]: the small-p expansion of the flux, whose fractional
//!   exponents are exactly the distinct values of alpha;
//! - [`time_domain`]: contour inversion to the time domain and the numerical
//!   Laplace transform of measured series;
//! - [`inversion`]: recovery of the order (range, interfaces, and optionally
//!   a constant density) from one-sided flux data;
//! - [`sturm_liouville`]: the per-interval fundamental systems and Dirichlet
//!   eigenpairs underlying the expansion;
//! - [`model`]: problem description, validation, and (de)serialization.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod inversion;
pub mod laplace_domain;
pub mod model;
pub mod numerics;
pub mod specgen;
pub mod sturm_liouville;
pub mod time_domain;

pub use error::{Error, Result};
pub use model::{load_problem, parse_problem, save_problem, validate, ProblemSpec, Side};
