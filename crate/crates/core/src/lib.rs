//! Numerical laboratory for real-linear Cauchy-Riemann operators on the trivial
//! ℂ² bundle over the sphere.

pub mod error;
pub mod ambient;
pub mod cli;
pub mod counterexample;
pub mod cr;
pub mod family;
pub mod kahler;
pub mod linalg;
pub mod sphere;

pub use error::{CrError, Result};
