//! Exact scalars, sparse polynomials, and rational functions.

mod exact;
mod gcd;
mod parse;
mod poly;
mod ratfunc;

pub use exact::{fmt_rational, parse_rational, rat, ExactScalar, Rational};
pub use gcd::{gcd, monic};
pub use parse::{parse_poly, parse_scalar};
pub use poly::{Mono, Poly, VarSet, MAX_VARS};
pub use ratfunc::RatFunc;

/// Failures of exact arithmetic and parsing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("polynomial division is not exact")]
    NotDivisible,
    #[error("variable {0:?} is missing from the target variable set")]
    IncompatibleVars(String),
    #[error("parse error: {0}")]
    Parse(String),
}
