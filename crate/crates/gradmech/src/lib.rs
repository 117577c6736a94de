//! Exact symbolic-numeric constrained Hamiltonian mechanics.
//!
//! Graded (boson/fermion) phase-space algebra, constraint analysis,
//! symmetries, time evolution and a finite-dimensional BRST operator.

pub mod brackets;
pub mod brst;
pub mod constraints;
pub mod dynamics;
pub mod random;
pub mod symmetry;
pub mod superalgebra;
pub mod symalg;
