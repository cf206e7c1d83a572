use thiserror::Error;

use crate::expr::{EvalError, SyntaxError};
use crate::problem::Piece;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),

    #[error("coefficient evaluation failed: {0}")]
    Coefficient(#[from] EvalError),

    #[error("breakpoints must satisfy -1 < h1 < h2 < 1, got h1 = {h1}, h2 = {h2}")]
    BreakpointOrder { h1: f64, h2: f64 },

    #[error("coefficient {name} must be positive, but {name}({x}) = {value} on piece {piece}")]
    NonPositiveCoefficient {
        name: &'static str,
        piece: Piece,
        x: f64,
        value: f64,
    },

    #[error("rho = alpha1*beta2 - alpha2*beta1 must be positive, got {rho}")]
    RhoNotPositive { rho: f64 },

    #[error("transmission coefficient {name}{index} must be nonzero")]
    ZeroTransmissionCoefficient { name: &'static str, index: usize },

    #[error("beta1 and beta2 cannot both be zero")]
    BetaBothZero,

    #[error("parameter {0} is not a finite number")]
    NonFiniteParameter(&'static str),

    #[error("integration step size underflow at x = {x} (h = {h:e})")]
    StepFailure { x: f64, h: f64 },

    #[error("x = {x} lies outside the trajectory span [{start}, {end}]")]
    OutOfSpan { x: f64, start: f64, end: f64 },

    #[error("x = {x} is a breakpoint; a side must be given")]
    BreakpointWithoutSide { x: f64 },

    #[error(
        "bracket [{a}, {b}] does not enclose a sign change of D (D(a) = {da:e}, D(b) = {db:e})"
    )]
    BracketInvalid { a: f64, b: f64, da: f64, db: f64 },

    #[error("eigenfunction at lambda = {lambda} has zero norm")]
    ZeroNorm { lambda: f64 },

    #[error("complex sample {re} + {im}i is too close to the real axis (|Im| < {min_imag})")]
    RealSample { re: f64, im: f64, min_imag: f64 },

    #[error("adaptive quadrature on [{a}, {b}] did not converge")]
    QuadratureNonConvergence { a: f64, b: f64 },

    #[error("scalar slot {scalar} differs from the boundary form (u)'_1 = {expected}")]
    DomainMismatch { scalar: f64, expected: f64 },

    #[error("element is not in the operator domain: {0}")]
    NotInDomain(String),

    #[error("lambda = {lambda} is too close to an eigenvalue (D = {d:e})")]
    NearEigenvalue { lambda: f64, d: f64 },

    #[error("discrete eigensolver failed: {0}")]
    EigSolveFailure(String),

    #[error("expected at least {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem file: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax(_)
                | Error::BreakpointOrder { .. }
                | Error::NonPositiveCoefficient { .. }
                | Error::RhoNotPositive { .. }
                | Error::ZeroTransmissionCoefficient { .. }
                | Error::BetaBothZero
                | Error::NonFiniteParameter(_)
                | Error::BreakpointWithoutSide { .. }
                | Error::InvalidArgument(_)
                | Error::Config(_)
        )
    }
}
