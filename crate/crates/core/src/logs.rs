//! Certified `f64` brackets for logarithms of big integers.
//!
//! Products such as `q_1 ... q_n` grow far beyond `f64`, so log-ratio estimates
//! are accumulated as sums of per-factor logarithms. Each value carries a radius
//! that bounds the accumulated rounding error.

use core::fmt;

use libm::{floor, log, log10, pow};
use num_traits::ToPrimitive;

use crate::Nat;

const EPS: f64 = f64::EPSILON;

/// A real number known to lie in `[mid - rad, mid + rad]`.
///
/// `mid = -inf` (with `rad = 0`) stands for the logarithm of zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub mid: f64,
    pub rad: f64,
}

impl Bracket {
    pub const ZERO: Bracket = Bracket { mid: 0.0, rad: 0.0 };
    pub const NEG_INFINITY: Bracket = Bracket { mid: f64::NEG_INFINITY, rad: 0.0 };

    pub const fn exact(v: f64) -> Self {
        Bracket { mid: v, rad: 0.0 }
    }

    fn settle(mid: f64, rad: f64) -> Self {
        if mid.is_finite() {
            Bracket { mid, rad }
        } else {
            Bracket { mid, rad: 0.0 }
        }
    }

    pub fn lo(&self) -> f64 {
        self.mid - self.rad
    }

    pub fn hi(&self) -> f64 {
        self.mid + self.rad
    }

    pub fn is_neg_infinite(&self) -> bool {
        self.mid == f64::NEG_INFINITY
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo() <= v && v <= self.hi()
    }

    pub fn add(self, o: Bracket) -> Bracket {
        let s = self.mid + o.mid;
        Bracket::settle(s, self.rad + o.rad + EPS * s.abs())
    }

    pub fn sub(self, o: Bracket) -> Bracket {
        self.add(Bracket { mid: -o.mid, rad: o.rad })
    }

    /// Multiplies by an exactly representable factor.
    pub fn scale(self, k: f64) -> Bracket {
        let m = self.mid * k;
        Bracket::settle(m, self.rad * k.abs() + EPS * m.abs())
    }

    /// Interval quotient; `None` when the denominator bracket touches zero.
    pub fn div(self, o: Bracket) -> Option<Bracket> {
        if o.lo() <= 0.0 && o.hi() >= 0.0 {
            return None;
        }
        if self.is_neg_infinite() {
            return Some(if o.mid > 0.0 { Bracket::NEG_INFINITY } else { Bracket::exact(f64::INFINITY) });
        }
        let c = [self.lo() / o.lo(), self.lo() / o.hi(), self.hi() / o.lo(), self.hi() / o.hi()];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        Some(Bracket { mid, rad: 0.5 * (hi - lo) + 2.0 * EPS * mid.abs().max(hi.abs()) })
    }

    /// Converts a natural logarithm into a base-10 one.
    pub fn to_log10(self) -> Bracket {
        let m = self.mid * core::f64::consts::LOG10_E;
        Bracket::settle(m, self.rad * core::f64::consts::LOG10_E + 2.0 * EPS * m.abs())
    }
}

/// Natural logarithm of a big integer, `-inf` for zero.
pub fn ln_nat(n: &Nat) -> Bracket {
    let bits = n.bits();
    if bits == 0 {
        return Bracket::NEG_INFINITY;
    }
    if bits <= 53 {
        let m = log(n.to_u64().unwrap_or(0) as f64);
        return Bracket { mid: m, rad: 2.0 * EPS * m.abs() + f64::MIN_POSITIVE };
    }
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    let lt = log(top);
    let ls = shift as f64 * core::f64::consts::LN_2;
    let m = lt + ls;
    // Truncating to the top 64 bits and rounding to f64 both perturb the
    // argument by a relative 2^-53 at most.
    Bracket { mid: m, rad: 2.0 * EPS + 2.0 * EPS * (lt.abs() + ls.abs() + m.abs()) }
}

/// Natural logarithm of `num / den`.
pub fn ln_ratio(num: &Nat, den: &Nat) -> Bracket {
    ln_nat(num).sub(ln_nat(den))
}

/// Compensated (Neumaier) summation of brackets.
#[derive(Clone, Debug, Default)]
pub struct LogSum {
    sum: f64,
    comp: f64,
    rad: f64,
    abs_total: f64,
    terms: u64,
    neg_inf: bool,
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, b: Bracket) {
        if b.is_neg_infinite() {
            self.neg_inf = true;
            return;
        }
        let x = b.mid;
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.rad += b.rad;
        self.abs_total += x.abs();
        self.terms += 1;
    }

    pub fn value(&self) -> Bracket {
        if self.neg_inf {
            return Bracket::NEG_INFINITY;
        }
        let s = self.sum + self.comp;
        let n = self.terms as f64;
        Bracket { mid: s, rad: self.rad + 2.0 * EPS * s.abs() + 4.0 * n * EPS * EPS * self.abs_total }
    }
}

/// A signed real stored as `sign * 10^log10_abs`, for magnitudes beyond `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sci {
    pub sign: i8,
    pub log10_abs: Bracket,
}

impl Sci {
    pub const ZERO: Sci = Sci { sign: 0, log10_abs: Bracket::NEG_INFINITY };

    /// Wraps an ordinary bracketed value.
    pub fn from_bracket(v: Bracket) -> Sci {
        if v.mid == 0.0 {
            return Sci::ZERO;
        }
        let a = v.mid.abs();
        Sci {
            sign: if v.mid < 0.0 { -1 } else { 1 },
            log10_abs: Bracket { mid: log10(a), rad: v.rad / a * core::f64::consts::LOG10_E + 2.0 * EPS },
        }
    }

    /// `sign * m * 10^e` with `1 <= m < 10`.
    pub fn mantissa_exponent(&self) -> (f64, i64) {
        if self.sign == 0 {
            return (0.0, 0);
        }
        let e = floor(self.log10_abs.mid);
        (self.sign as f64 * pow(10.0, self.log10_abs.mid - e), e as i64)
    }

    /// Relative error bound on the magnitude.
    pub fn rel_err(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            pow(10.0, self.log10_abs.rad) - 1.0
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * pow(10.0, self.log10_abs.mid)
        }
    }

    /// Sum of same-signed terms by log-sum-exp.
    ///
    /// Returns `None` when the terms carry mixed signs.
    pub fn sum_same_sign(terms: &[Sci]) -> Option<Sci> {
        let nz: alloc::vec::Vec<&Sci> = terms.iter().filter(|t| t.sign != 0).collect();
        let Some(first) = nz.first() else { return Some(Sci::ZERO) };
        if nz.iter().any(|t| t.sign != first.sign) {
            return None;
        }
        let top = nz.iter().map(|t| t.log10_abs.mid).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        let mut rad = 0.0f64;
        for t in &nz {
            acc += pow(10.0, t.log10_abs.mid - top);
            rad = rad.max(t.log10_abs.rad);
        }
        Some(Sci {
            sign: first.sign,
            log10_abs: Bracket { mid: top + log10(acc), rad: rad + 4.0 * EPS * (top.abs() + 1.0) },
        })
    }
}

impl fmt::Display for Sci {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, e) = self.mantissa_exponent();
        write!(f, "{m:.13}e{e}")
    }
}
