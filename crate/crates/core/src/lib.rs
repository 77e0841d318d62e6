//! Robust matrix completion with adversarially corrupted columns.
//!
//! Recovers a low-rank matrix from a subset of its entries when some columns
//! are arbitrarily corrupted, by solving the convex program
//!
//! ```text
//! minimize   ||L||_* + lambda * ||C||_{1,2}
//! subject to P_Omega(L + C) = P_Omega(M)
//! ```
//!
//! with an augmented Lagrange multiplier loop ([`solver`]). Around the solver
//! the crate provides:
//!
//! * [`mat`] — dense matrices, the matrix norms used by the objective, and a
//!   from-scratch thin SVD;
//! * [`operators`] — entry/column/tangent-space projections, the restriction
//!   maps between full and clean-column shapes, and the three proximal
//!   shrinkage operators;
//! * [`synth`] — reproducible synthetic problem instances covering three
//!   corruption schemes and the observation sampling models;
//! * [`theory`] — numerical validators for the recovery conditions:
//!   incoherence, regularizer selectors, dual-certificate checks, the tangent
//!   sampling-gap operator, the golfing recursion, and Monte-Carlo checks of
//!   the concentration bounds;
//! * [`experiment`] — per-trial recovery scoring and seeded phase-diagram
//!   grids with CSV/PGM emission.
//!
//! The numeric core is generic over the scalar type via [`scalar::Scalar`];
//! `f64` aliases for the main types are exported at the crate root.

pub mod error;
pub mod experiment;
pub mod mat;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod solver;
mod svd;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` dense matrix.
pub type Mat64 = mat::DenseMatrix<f64>;
/// `f32` dense matrix.
pub type Mat32 = mat::DenseMatrix<f32>;
/// `f64` thin SVD factors.
pub type Svd64 = mat::SvdFactors<f64>;
/// `f64` tangent space.
pub type Tangent64 = operators::TangentSpace<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = solver::SolverConfig<f64>;
/// `f64` solver output.
pub type SolverResult64 = solver::SolverResult<f64>;
/// `f64` synthetic problem instance.
pub type Instance64 = synth::ProblemInstance<f64>;
