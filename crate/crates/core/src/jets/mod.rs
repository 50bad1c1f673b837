//! Derivative oracles, exact polynomial jets with an expression reader, and
//! the `C^k`-norm calculus.

mod bounds;
mod norm;
mod oracle;
mod parse;
mod polynomial;
mod tensor;

pub use bounds::{compose_bound, inverse_bound, inverse_bound_narrow};
pub use norm::{estimate_ck_norm, pointwise_ck_norm, Ball, CkNormBound};
pub use oracle::{FiniteDifferenceOracle, JetOracle, Reparametrized, SumOracle};
#[allow(unused_imports)]
pub(crate) use oracle::check_query;
pub use parse::{max_variable_index, parse_polynomial_map};
pub use polynomial::{Polynomial, PolynomialMap, Term};
pub use tensor::DerivativeTensor;
