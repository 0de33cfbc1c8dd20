//! Numerical laboratory for periodic homogenization of energies depending
//! on the linearized strain: small symmetric tensor algebra, admissible
//! energy densities, discrete periodic cell structures, cell-problem
//! solvers, and the non-local limit of rigid-cylinder lattices.

pub mod error;
pub mod integrand;
pub mod nonlocal;
pub mod solver;
pub mod structure;
pub mod tensor;

pub use error::{Error, Result};
