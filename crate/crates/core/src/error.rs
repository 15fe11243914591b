use alloc::string::String;
use core::fmt;

/// Which end of a radial integration range a tail estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailEnd {
    Inner,
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function (e.g. the origin
    /// for the gradient of the Lyapunov function).
    Domain(&'static str),
    /// A parameter violates a documented range.
    InvalidParameter { name: &'static str, reason: String },
    DimensionMismatch { expected: usize, found: usize },
    /// A degenerate geometric configuration, e.g. `Φ(x)u = 0`.
    Degenerate(&'static str),
    /// A cone is numerically empty at the given state.
    EmptyCone(&'static str),
    /// Nested cubature did not reach the requested tolerance.
    NonConvergence {
        what: &'static str,
        value: f64,
        est_error: f64,
        level: u32,
    },
    /// The integrand's radial profile does not decay fast enough for the
    /// integral to exist.
    Integrability { end: TailEnd, exponent: f64 },
    /// A requested operation is not available for this kernel family.
    UnsupportedFamily(&'static str),
    /// A precondition of the operation is not met.
    Precondition(String),
    /// A sign or regime decision could not be made reliably.
    Inconclusive(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Degenerate(what) => write!(f, "degenerate configuration: {what}"),
            Error::EmptyCone(which) => write!(f, "cone {which} is numerically empty"),
            Error::NonConvergence {
                what,
                value,
                est_error,
                level,
            } => write!(
                f,
                "cubature for {what} did not converge (value {value:e}, est. error {est_error:e}, level {level})"
            ),
            Error::Integrability { end, exponent } => write!(
                f,
                "integrability violated at {} end: radial profile exponent {exponent:.4}",
                match end {
                    TailEnd::Inner => "inner",
                    TailEnd::Outer => "outer",
                }
            ),
            Error::UnsupportedFamily(what) => write!(f, "unsupported kernel family: {what}"),
            Error::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            Error::Inconclusive(msg) => write!(f, "inconclusive: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
