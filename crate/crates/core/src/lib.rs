//! Curvature and torsion of metric connections with totally skew-symmetric
//! torsion, with a registry of algebraic and differential identities that
//! are checked on concrete geometries.

pub mod catalog;
pub mod chart;
pub mod classify;
pub mod curvature;
pub mod dd;
pub mod error;
pub mod expr;
pub mod fuzz;
pub mod geometry;
pub mod identities;
pub mod lie;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Rational, Real, Scalar};
