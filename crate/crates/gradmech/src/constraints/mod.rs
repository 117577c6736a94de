//! Constrained graded mechanics: Legendre transform, primary constraints, the
//! Dirac–Bergmann consistency iteration, first/second-class split and the
//! total/extended Hamiltonians.
//!
//! Automatic analysis works with constraints affine in `(q, p)` with constant
//! Grassmann coefficients; weak equality is realised by pivot substitution.

mod dirac_bergmann;
mod legendre;
mod linear;
mod model;

pub use dirac_bergmann::{
    extended_hamiltonian, run_dirac_bergmann, total_hamiltonian, verify_constraint_set, ConstraintReport,
    MultiplierChoice, Verification,
};
pub use legendre::{hamiltonian_to_lagrangian, momenta, primary_constraints, PrimaryAnalysis};
pub use linear::{ideal_reduce, ConstraintBasis, Reduction};
pub use model::{HamiltonianModel, LagrangianModel};

use thiserror::Error;

use crate::brackets::BracketError;
use crate::superalgebra::SuperError;
use crate::symalg::SymError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("Lagrangian is not at most quadratic with a constant velocity map: {0}")]
    NonQuadratic(String),
    #[error("velocity map cannot be inverted without expanding in the Grassmann basis: {0}")]
    GrassmannBasisRequired(String),
    #[error("constraint is not affine in (q, p) with constant coefficients: {0}")]
    NonAffine(String),
    #[error("consistency condition leaves a non-affine residual (continue manually): {0}")]
    NonAffineResidual(String),
    #[error("constraint chain exceeded {0} tiers; the model is inconsistent")]
    IterationCapExceeded(u32),
    #[error("constraint {index} ({constraint}) is not preserved; residual {residual}")]
    NotPreserved { index: usize, constraint: String, residual: String },
    #[error("constraints are dependent (reducible): {0}")]
    Dependent(String),
    #[error("constraints are inconsistent: {0} = 0")]
    Inconsistent(String),
    #[error("bracket [{row}, {col}] = {expr} is not constant on the constraint surface")]
    NonConstantOmega { row: usize, col: usize, expr: String },
    #[error("unknown multiplier reference: {0}")]
    UnknownMultiplier(String),
    #[error("map (q, p_b, u) -> (q, q_dot) is not invertible: {0}")]
    NonInvertibleVelocityMap(String),
    #[error("Legendre consistency check failed: {0}")]
    LegendreCheck(String),
    #[error("bad model: {0}")]
    BadModel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error(transparent)]
    Super(#[from] SuperError),
}
