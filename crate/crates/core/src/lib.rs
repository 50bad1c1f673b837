//! Certified numerics for the inverse, implicit and rank theorems, the
//! splitting and Morse lemmas, and the density/openness of Morse functions.
//!
//! The arithmetic layers ([`spectral`], [`jets`]) are generic over the scalar
//! type; the certificate pipelines run in `f64`. Aliases for the `f64`
//! instantiations live at the crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod catalog;
pub mod certified_implicit;
pub mod certified_inverse;
pub mod error;
pub mod jets;
pub mod morse_suite;
mod newton;
pub mod rank_charts;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod splitting;
pub mod spectral;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use scalar::Scalar;

pub type Matrix = spectral::Matrix<f64>;
pub type PolynomialMap = jets::PolynomialMap<f64>;
pub type Polynomial = jets::Polynomial<f64>;
pub type CkNormBound = jets::CkNormBound<f64>;
pub type Ball = jets::Ball<f64>;
pub type DerivativeTensor = jets::DerivativeTensor<f64>;
pub type SignatureFactorization = spectral::SignatureFactorization<f64>;
pub type InverseCertificate = certified_inverse::InverseCertificate;
pub type ImplicitCertificate = certified_implicit::ImplicitCertificate;
pub type RankCertificate = rank_charts::RankCertificate;
