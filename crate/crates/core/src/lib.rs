//! Numerical verification of quasi-Einstein structures on `H^n x R`.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: scalar expressions, a parser, and second-order forward jets.
//! - [`geometry`]: coordinate tensor calculus (connection, curvature,
//!   Hessians, Lie derivatives) and the Bakry-Emery tensors.
//! - [`model_hnr`]: the hyperbolic product `H^n x R`, its orthonormal frame,
//!   the component PDE system, the two explicit potentials and a classifier.
//! - [`reduction_ode`]: the Riccati reduction `h' = h^2/m + lambda` and its
//!   solution branches.
//! - [`warped`]: the static/warped-product bridge.
//! - [`cli`]: manifest-driven runs and report output.

pub mod cli;
pub mod expr;
pub mod geometry;
pub mod model_hnr;
pub mod reduction_ode;
pub mod warped;
