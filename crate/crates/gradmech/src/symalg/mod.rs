//! Graded expression engine: variable tables, normal-form expressions,
//! parsing/printing, graded derivatives and jet-space calculus.

mod expr;
mod jet;
mod parse;
mod print;
mod table;

pub use expr::{linear_form_of, ExpForm, GradedExpr, Monomial, TermKey};
pub use jet::{
    antiderivative, euler_lagrange, explicit_time_derivative, extract_total_derivative, prolong,
    total_time_derivative,
};
pub use parse::{parse_expr, parse_expr_with_warnings, ParseWarning};
pub use print::{render, render_grassmann};
pub use table::{jet_name, momentum_name, VarId, VarKind, Variable, VariableTable, DEFAULT_MAX_JET_ORDER};

use thiserror::Error;

use crate::superalgebra::SuperError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("duplicate variable name '{0}'")]
    DuplicateName(String),
    #[error("invalid variable name '{0}'")]
    BadName(String),
    #[error("jet order overflow: {0}")]
    JetOverflow(String),
    #[error("exponent argument is not a homogeneous linear form in even variables")]
    NonLinearExponent,
    #[error("expression has mixed parity")]
    MixedParity,
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Super(#[from] SuperError),
}
