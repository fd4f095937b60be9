use alloc::string::String;
use core::fmt;

/// Errors reported by the library.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// A rational literal could not be parsed.
    Parse(String),
    /// The error budget must be finite and strictly positive.
    InvalidEps,
    /// Instance parameters violate `0 < a < b`.
    InvalidParams(&'static str),
    /// `x` must be strictly positive.
    NonPositiveX,
    /// A closed form was requested outside the range where it holds.
    Domain(String),
    /// A periodic function whose values over one period do not sum to zero.
    NotMeanZero,
    /// Not enough usable points for a regression.
    TooFewPoints { usable: usize, required: usize },
    /// Every residual sits below the noise floor.
    DegenerateResiduals,
    /// Generic precondition violation.
    Precondition(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(s) => write!(f, "cannot parse rational: {s}"),
            Error::InvalidEps => f.write_str("eps must be finite and > 0"),
            Error::InvalidParams(why) => write!(f, "invalid parameters: {why}"),
            Error::NonPositiveX => f.write_str("requires x > 0"),
            Error::Domain(why) => write!(f, "outside the domain of the closed form: {why}"),
            Error::NotMeanZero => f.write_str("periodic function must have mean zero"),
            Error::TooFewPoints { usable, required } => {
                write!(f, "too few usable points: {usable} < {required}")
            }
            Error::DegenerateResiduals => {
                f.write_str("all residuals are zero or below the noise floor")
            }
            Error::Precondition(why) => write!(f, "precondition violated: {why}"),
        }
    }
}

impl core::error::Error for Error {}
