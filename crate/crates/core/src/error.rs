use alloc::string::String;

use crate::Nat;

/// Failure modes shared by every evaluator.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("positions start at 1; index 0 requested")]
    IndexZero,
    #[error("base {value} at position {index} is below 2")]
    BaseBelowTwo { index: u64, value: Nat },
    #[error("digit {digit} at position {index} is not below the base {base}")]
    DigitOutOfRange { index: u64, digit: Nat, base: Nat },
    #[error("position {index} lies beyond the defined length {len}")]
    OutOfRange { index: Nat, len: Nat },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
