//! Exact evaluators for Cantor series expansions.
//!
//! A basic sequence `Q = (q_n)` (every `q_n >= 2`) acts as a varying radix and a
//! real number is written `x = E_0 + sum E_n / (q_1 ... q_n)`. This crate provides
//! lazily evaluated bases and digit streams, the digit map
//! `psi_{P,Q}: E_n -> min(E_n, q_n - 1)` with its continuity, variation and
//! Hölder evaluators, block statistics and star discrepancy, the explicit
//! normal-number constructions built from `V_{b,w}`, and finite-horizon
//! estimators for the Hausdorff-dimension and measure formulas attached to them.
//!
//! Everything is exact (big integers and rationals) except the log-ratio
//! estimates in [`dim`], which carry certified error brackets.
#![no_std]

extern crate alloc;

pub mod digits;
pub mod dim;
pub mod error;
pub mod foundry;
pub mod logs;
pub mod normal;
pub mod psi;
pub mod seq;

pub use digits::{Canonicity, DigitRule, DigitStream, Enclosure};
pub use error::{Error, Result};
pub use seq::{BasicSeq, MeasureSpec, SeqRule};

/// Arbitrary-precision natural number used for bases and digits.
pub type Nat = num_bigint::BigUint;
/// Exact rational used for real values.
pub type Rat = num_rational::BigRational;
