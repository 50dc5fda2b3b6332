//! Exact and numerical laboratory for functionals of the characteristic
//! polynomial of a Haar-distributed unitary matrix.
//!
//! The crate has two halves. The exact half evaluates finite-`N` moments
//! through symmetric-function identities (Jacobi–Trudi determinants, Kostka
//! numbers, bounded coefficient extraction). The numerical half evaluates
//! the limiting constants: sinc-type kernels, their closed forms, spline
//! calculus for one-dimensional reductions, and quadrature / quasi-Monte
//! Carlo for the rest. [`convergence_harness`] ties the two together.

pub mod convergence_harness;
pub mod cue_sampler;
pub mod error;
pub mod exact_functionals;
pub mod limit_constants;
pub mod limit_kernels;
pub mod partitions;
pub mod polytope_ehrhart;
pub mod quad;
pub mod report;
pub mod ring;
pub mod selftest;
pub mod symfun;

pub use error::{Error, Result};
pub use limit_constants::{FunctionalKind, LimitEstimate, LimitFunctionalSpec, Method};
pub use limit_kernels::{KernelSpec, PiecewisePoly};
pub use partitions::{CellData, Partition};
pub use polytope_ehrhart::{BoundedMultiPoly, EhrhartPolynomial};
pub use ring::{Q, C64};
pub use symfun::HSeries;
