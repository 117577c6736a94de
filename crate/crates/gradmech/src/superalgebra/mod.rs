//! Grassmann numbers, supermatrices and their canonical forms.

mod canonical;
mod grassmann;
pub mod ratmat;
mod supermatrix;

pub use canonical::{
    canonical_form_antihermitian, canonical_form_antisym, canonical_form_bosonic, canonical_form_generic,
    desoul, desoul_coefficients, orthogonalize_columns, BlockLayout, CanonicalFormResult, Orthogonalized,
    Symmetry,
};
pub use grassmann::{mask_to_subset, monomial_product_sign, rational_to_f64, GrassmannNumber, MAX_GENERATORS};
pub use supermatrix::{det_commuting, GMat, SuperMatrix};

use num_bigint::BigInt;
use thiserror::Error;

/// Exact rational scalar used throughout the crate.
pub type Rational = num_rational::BigRational;

/// Shorthand for the rational `n / d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Grassmann parity of a variable, index or homogeneous element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_count(n: usize) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn bit(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    /// Parity of a product.
    pub fn plus(self, other: Parity) -> Parity {
        Parity::from_count(self.bit() + other.bit())
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// `(-1)^n` as a boolean "is negative".
pub fn sign_negative(n: usize) -> bool {
    n % 2 == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuperError {
    #[error("generator-count mismatch: {left} vs {right}")]
    GeneratorMismatch { left: u32, right: u32 },
    #[error("element has zero body and is not invertible")]
    ZeroBody,
    #[error("generator index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("generator {0} repeated in a monomial")]
    RepeatedGenerator(usize),
    #[error("mixed-parity element where a definite parity is required")]
    MixedParity,
    #[error("entry ({row},{col}) has the wrong parity")]
    ParityViolation { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square with matching row/column parities")]
    NotSquare,
    #[error("a diagonal block has vanishing body determinant")]
    SingularBlock,
    #[error("body is singular; inverse does not exist")]
    SingularBody,
    #[error("symmetry property violated: {0}")]
    SymmetryViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
