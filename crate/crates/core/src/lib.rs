//! Periodic homogenization of nondivergence-form elliptic equations in 2-D.
//!
//! The crate solves −A(x/ε):D²u^ε = f on the unit square with Dirichlet data,
//! computes the homogenization objects of the coefficient A on the unit torus
//! and measures how fast u^ε approaches its homogenized limit.
//!
//! - [`analytic`]: closed-form coefficients, correctors and solutions.
//! - [`cell`]: invariant measure, effective matrix, correctors, c-tensor.
//! - [`epssolve`]: Dirichlet solvers for the oscillatory and homogenized problems.
//! - [`rates`]: error functionals, ε sweeps and log-log rate fits.

pub mod analytic;
pub mod cell;
pub mod epssolve;
pub mod error;
pub mod linalg;
pub mod rates;
pub mod types;

pub use cell::{CellSolution, Classification, CoefficientSpec, TorusField};
pub use error::{Error, Result};
pub use types::{CTensor, Mat2, Pair};
