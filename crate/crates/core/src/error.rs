use std::fmt;

use thiserror::Error;

/// What went wrong while reading a polynomial expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    ExpectedToken(&'static str),
    UnknownVariable(String),
    NegativeExponent,
    FractionalExponent,
    BadNumber(String),
    DivisionByNonConstant,
    DivisionByZero,
    ExponentTooLarge,
}

/// Parse failure with the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        write!(f, "at position {}: ", self.position)?;
        match &self.kind {
            UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            UnexpectedEnd => write!(f, "unexpected end of input"),
            ExpectedToken(t) => write!(f, "expected {t}"),
            UnknownVariable(v) => write!(f, "unknown variable '{v}'"),
            NegativeExponent => write!(f, "negative exponent"),
            FractionalExponent => write!(f, "fractional exponent"),
            BadNumber(s) => write!(f, "malformed number '{s}'"),
            DivisionByNonConstant => write!(f, "division by a non-constant expression"),
            DivisionByZero => write!(f, "division by zero"),
            ExponentTooLarge => write!(f, "exponent too large"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error {0}")]
    Parse(#[from] ParseError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("derivative order {requested} exceeds oracle maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("oracle evaluation failed: {0}")]
    Oracle(String),
    #[error("matrix is numerically singular (sigma_min = {sigma:e}, tol = {tol:e})")]
    NearSingular { sigma: f64, tol: f64 },
    #[error("Jacobian at the base point is singular (sigma_min = {sigma:e})")]
    SingularJacobian { sigma: f64 },
    #[error("norm bound ball does not contain the required ball (needs radius {required:e} around the base point, ball offers {available:e})")]
    DomainTooSmall { required: f64, available: f64 },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iterate left the certified ball (distance {distance:e}, radius {radius:e})")]
    StepLeftDomain { distance: f64, radius: f64 },
    #[error("point lies outside the certified ball (distance {distance:e}, radius {radius:e})")]
    OutsideCertifiedBall { distance: f64, radius: f64 },
    #[error("base point is not on the zero set (residual {residual:e})")]
    NotOnZeroSet { residual: f64 },
    #[error("partial derivative in y is singular (sigma_min = {sigma:e})")]
    SingularPartial { sigma: f64 },
    #[error("continuation path left the certified domain (distance {distance:e}, radius {radius:e})")]
    PathLeftDomain { distance: f64, radius: f64 },
    #[error("leading {p}x{p} block is singular (sigma_min = {sigma:e})")]
    SingularLeadingBlock { p: usize, sigma: f64 },
    #[error("sampled rank {found} differs from declared rank {expected}")]
    RankDrift { expected: usize, found: usize },
    #[error("signed factorization broke down at pivot {index} (value {pivot:e})")]
    SignBreakdown { index: usize, pivot: f64 },
    #[error("point is not critical (gradient norm {gradient_norm:e})")]
    NotCritical { gradient_norm: f64 },
    #[error("Hessian rank gap is not resolved (sigma_p = {sigma_p:e}, tol = {tol:e})")]
    DegenerateBeyondRank { sigma_p: f64, tol: f64 },
    #[error("two critical points share the same critical value")]
    DuplicateCriticalValues,
    #[error("a critical point is degenerate")]
    NonMorse,
    #[error("critical points are missing or lie on the boundary of the unit ball")]
    CriticalLocusNotInterior,
    #[error("certified gradient lower bound is not positive ({bound:e}); refine the grid")]
    EtaNotPositive { bound: f64 },
    #[error("perturbation too large: sampled C^k distance {distance:e} >= epsilon {epsilon:e}")]
    PerturbationTooLarge { distance: f64, epsilon: f64 },
    #[error("no admissible tilt found after {tries} tries")]
    SearchExhausted { tries: usize },
}

impl Error {
    /// True for errors that mean "this certificate cannot be issued" rather
    /// than bad input.
    pub fn is_refusal(&self) -> bool {
        !matches!(
            self,
            Error::Parse(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::OrderTooHigh { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
