use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `N = 0` where a positive limit is required.
    ZeroLimit,
    /// A limit beyond what the sieve (or enumeration) is allowed to build.
    LimitAboveCap { what: &'static str, limit: u64, cap: u64 },
    OutOfRange { n: u64, limit: u64 },
    LimitMismatch { expected: u32, found: u32 },
    InvalidDensity(f64),
    InvalidParameter(String),
    /// A normalizer evaluated to zero.
    DivisionGuard(&'static str),
    /// Requested work exceeds the configured guard.
    WorkLimit { work: u128, limit: u128 },
    EmptyInput,
    NonPositive(f64),
}

impl Error {
    /// True for errors raised by size/work guards rather than bad input.
    pub fn is_resource_guard(&self) -> bool {
        matches!(self, Error::LimitAboveCap { .. } | Error::WorkLimit { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroLimit => write!(f, "limit N must be at least 1"),
            Error::LimitAboveCap { what, limit, cap } => write!(
                f,
                "{what}: N = {limit} exceeds the cap of {cap}; raise the cap explicitly to go beyond it"
            ),
            Error::OutOfRange { n, limit } => {
                write!(f, "n = {n} is outside the table range [1, {limit}]")
            }
            Error::LimitMismatch { expected, found } => {
                write!(f, "limit mismatch: expected N = {expected}, found N = {found}")
            }
            Error::InvalidDensity(rho) => write!(f, "density rho = {rho} is not in [0, 1]"),
            Error::InvalidParameter(msg) => f.write_str(msg),
            Error::DivisionGuard(msg) => write!(f, "normalizer is zero: {msg}"),
            Error::WorkLimit { work, limit } => write!(
                f,
                "requested work of {work} term evaluations exceeds the limit of {limit}"
            ),
            Error::EmptyInput => write!(f, "input sample is empty"),
            Error::NonPositive(v) => write!(f, "value {v} must be strictly positive"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_density(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidDensity(rho))
    }
}
