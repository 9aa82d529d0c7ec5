//! Digit streams `x = E_0 + sum E_n / (q_1 ... q_n)` with lazy digit access.

use alloc::{collections::BTreeMap, format, string::String, sync::Arc, vec::Vec};
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::seq::{rat, BasicSeq};
use crate::{Nat, Rat};

/// Lazily evaluated digit rule for constructions defined digit by digit.
pub trait DigitRule: Send + Sync + fmt::Debug {
    /// `E_n` for `n >= 1`.
    fn digit(&self, n: u64) -> Result<Nat>;

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        (from..from + count as u64).map(|n| self.digit(n)).collect()
    }
}

/// What is known about the representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Canonicity {
    /// `E_n != q_n - 1` infinitely often and the digits do not end in zeros,
    /// as far as the evidence goes.
    Canonical,
    /// All digits after `last_nonzero` vanish (`0` for an integer).
    Terminating { last_nonzero: u64 },
    /// `E_n = q_n - 1` for every `n >= from`: the non-canonical form of a terminating point.
    MaxTail { from: u64 },
    Unknown,
}

/// Digits after an explicit finite list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Zeros,
    Max,
}

#[derive(Debug)]
enum Source {
    Finite { digits: Vec<Nat>, tail: Tail },
    Periodic { prefix: Vec<Nat>, cycle: Vec<Nat> },
    /// Fractional part `num / den` expanded greedily; `cache` holds the first
    /// digits and `num_end` the numerator of the remainder after them.
    Rational { num: Nat, den: Nat, cache: Vec<Nat>, num_end: Nat },
    Rule(Arc<dyn DigitRule>),
}

/// A real number given by its integer part and a lazily evaluated digit stream.
#[derive(Clone, Debug)]
pub struct DigitStream {
    base: BasicSeq,
    int_part: BigInt,
    src: Arc<Source>,
    canon: Canonicity,
}

/// A closed interval `[lo, hi]` of rationals known to contain a real.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl Enclosure {
    pub fn point(x: Rat) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(BigInt::from(2))
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64().unwrap_or(f64::NAN)
    }
}

fn int(v: &Nat) -> BigInt {
    BigInt::from(v.clone())
}

impl DigitStream {
    fn new(base: BasicSeq, int_part: BigInt, src: Source, canon: Canonicity) -> Self {
        DigitStream { base, int_part, src: Arc::new(src), canon }
    }

    /// Finitely many digits followed by an all-zero or all-maximal tail.
    pub fn from_digits(base: BasicSeq, int_part: BigInt, digits: Vec<Nat>, tail: Tail) -> Result<Self> {
        let q = base.prefix(digits.len() as u64)?;
        for (i, (d, b)) in digits.iter().zip(&q).enumerate() {
            if d >= b {
                return Err(Error::DigitOutOfRange { index: i as u64 + 1, digit: d.clone(), base: b.clone() });
            }
        }
        let canon = match tail {
            Tail::Zeros => {
                Canonicity::Terminating { last_nonzero: digits.iter().rposition(|d| !d.is_zero()).map_or(0, |i| i as u64 + 1) }
            }
            Tail::Max => {
                let mut from = digits.len();
                while from > 0 && &digits[from - 1] + 1u8 == q[from - 1] {
                    from -= 1;
                }
                Canonicity::MaxTail { from: from as u64 + 1 }
            }
        };
        Ok(Self::new(base, int_part, Source::Finite { digits, tail }, canon))
    }

    /// Digits `prefix` followed by `cycle` repeated forever.
    ///
    /// The canonicity tag is exact when the base is eventually periodic.
    pub fn from_periodic_digits(base: BasicSeq, int_part: BigInt, prefix: Vec<Nat>, cycle: Vec<Nat>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(invalid("periodic digits need a nonempty cycle"));
        }
        let check = prefix.len() + cycle.len();
        let s = Self::new(base.clone(), int_part, Source::Periodic { prefix, cycle }, Canonicity::Unknown);
        let d = s.digits(1, check)?;
        let q = base.prefix(check as u64)?;
        for (i, (d, b)) in d.iter().zip(&q).enumerate() {
            if d >= b {
                return Err(Error::DigitOutOfRange { index: i as u64 + 1, digit: d.clone(), base: b.clone() });
            }
        }
        let canon = s.periodic_canonicity()?;
        Ok(DigitStream { canon, ..s })
    }

    /// A stream given by a digit rule; canonicity starts as `Unknown`.
    pub fn from_rule(base: BasicSeq, rule: Arc<dyn DigitRule>) -> Self {
        Self::new(base, BigInt::zero(), Source::Rule(rule), Canonicity::Unknown)
    }

    /// A stream whose `n`-th digit is `f(n)`.
    pub fn from_fn<F>(base: BasicSeq, name: &'static str, f: F) -> Self
    where
        F: Fn(u64) -> Nat + Send + Sync + 'static,
    {
        Self::from_rule(base, Arc::new(FnRule { name, f }))
    }

    pub fn base(&self) -> &BasicSeq {
        &self.base
    }

    pub fn int_part(&self) -> &BigInt {
        &self.int_part
    }

    pub fn canonicity(&self) -> &Canonicity {
        &self.canon
    }

    pub fn with_canonicity(mut self, c: Canonicity) -> Self {
        self.canon = c;
        self
    }

    pub fn with_int_part(mut self, e0: BigInt) -> Self {
        self.int_part = e0;
        self
    }

    /// Number of digits held in memory.
    pub fn known_prefix_len(&self) -> u64 {
        match &*self.src {
            Source::Finite { digits, .. } => digits.len() as u64,
            Source::Periodic { prefix, cycle } => (prefix.len() + cycle.len()) as u64,
            Source::Rational { cache, .. } => cache.len() as u64,
            Source::Rule(_) => 0,
        }
    }

    /// `E_n` for `n >= 1`.
    pub fn digit(&self, n: u64) -> Result<Nat> {
        if n == 0 {
            return Err(Error::IndexZero);
        }
        match &*self.src {
            Source::Finite { digits, tail } => {
                if n <= digits.len() as u64 {
                    Ok(digits[(n - 1) as usize].clone())
                } else {
                    match tail {
                        Tail::Zeros => Ok(Nat::zero()),
                        Tail::Max => Ok(self.base.q_at(n)? - 1u8),
                    }
                }
            }
            Source::Periodic { prefix, cycle } => Ok(periodic_at(prefix, cycle, n).clone()),
            Source::Rational { cache, .. } if n <= cache.len() as u64 => Ok(cache[(n - 1) as usize].clone()),
            Source::Rational { .. } => Ok(self.digits(n, 1)?.pop().unwrap_or_default()),
            Source::Rule(r) => r.digit(n),
        }
    }

    /// `E_from, ..., E_{from+count-1}`.
    pub fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        if from == 0 {
            return Err(Error::IndexZero);
        }
        let end = from + count as u64;
        match &*self.src {
            Source::Finite { digits, tail } => {
                let mut out = Vec::with_capacity(count);
                let l = digits.len() as u64;
                for n in from..end.min(l + 1) {
                    out.push(digits[(n - 1) as usize].clone());
                }
                if end > l + 1 {
                    let s = from.max(l + 1);
                    match tail {
                        Tail::Zeros => out.resize(count, Nat::zero()),
                        Tail::Max => out.extend(self.base.values(s, (end - s) as usize)?.into_iter().map(|q| q - 1u8)),
                    }
                }
                Ok(out)
            }
            Source::Periodic { prefix, cycle } => Ok((from..end).map(|n| periodic_at(prefix, cycle, n).clone()).collect()),
            Source::Rational { den, cache, num_end, .. } => {
                let l = cache.len() as u64;
                let mut out: Vec<Nat> = (from..end.min(l + 1)).map(|n| cache[(n - 1) as usize].clone()).collect();
                if end > l + 1 {
                    let q = self.base.values(l + 1, (end - l - 1) as usize)?;
                    let mut a = num_end.clone();
                    for (i, qn) in q.iter().enumerate() {
                        let (e, r) = (a * qn).div_rem(den);
                        a = r;
                        if l + 1 + i as u64 >= from {
                            out.push(e);
                        }
                    }
                }
                Ok(out)
            }
            Source::Rule(r) => r.digits(from, count),
        }
    }

    pub fn prefix(&self, n: u64) -> Result<Vec<Nat>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.digits(1, n as usize)
    }

    /// Checks `E_j < q_j` for `j <= n`.
    pub fn validate(&self, n: u64) -> Result<()> {
        let d = self.prefix(n)?;
        let q = self.base.prefix(n)?;
        for (i, (d, b)) in d.iter().zip(&q).enumerate() {
            if d >= b {
                return Err(Error::DigitOutOfRange { index: i as u64 + 1, digit: d.clone(), base: b.clone() });
            }
        }
        Ok(())
    }

    /// Upgrades an `Unknown` tag to `Canonical` when every window of `window`
    /// consecutive digits among the first `n` holds a digit other than `q_j - 1`.
    /// The tag is evidence at the horizon, not a proof.
    pub fn with_window_evidence(self, n: u64, window: u64) -> Result<Self> {
        if self.canon != Canonicity::Unknown || window == 0 || n < window {
            return Ok(self);
        }
        let d = self.prefix(n)?;
        let q = self.base.prefix(n)?;
        let mut run = 0u64;
        let mut zrun = 0u64;
        for (d, b) in d.iter().zip(&q) {
            run = if d + 1u8 == *b { run + 1 } else { 0 };
            zrun = if d.is_zero() { zrun + 1 } else { 0 };
            if run >= window {
                return Ok(self);
            }
        }
        if zrun >= window {
            return Ok(self);
        }
        Ok(self.with_canonicity(Canonicity::Canonical))
    }

    /// Exact `T_{Q,n}(x)` for rational streams: the greedy remainder after `n` digits.
    pub fn remainder(&self, n: u64) -> Option<Rat> {
        let Source::Rational { num, den, .. } = &*self.src else { return None };
        let q = self.base.prefix(n).ok()?;
        let mut a = num.clone();
        for qn in &q {
            a = (a * qn) % den;
        }
        Some(rat(&a, den))
    }

    /// Exact value when the representation is known to be eventually periodic
    /// (with an eventually periodic base) or terminating.
    pub fn value_exact(&self) -> Option<Rat> {
        let e0 = Rat::from_integer(self.int_part.clone());
        match &*self.src {
            Source::Rational { num, den, .. } => Some(e0 + rat(num, den)),
            Source::Finite { digits, tail } => {
                let q = self.base.prefix(digits.len() as u64).ok()?;
                let (a, qq) = horner(digits, &q);
                let extra = if *tail == Tail::Max { Nat::one() } else { Nat::zero() };
                Some(e0 + rat(&(a + extra), &qq))
            }
            Source::Periodic { .. } => {
                let (start, period) = self.joint_period(&[], 0)?;
                let total = start + period;
                let d = self.prefix(total).ok()?;
                let q = self.base.prefix(total).ok()?;
                let (a, qs) = horner(&d[..start as usize], &q[..start as usize]);
                let (c, cp) = horner(&d[start as usize..], &q[start as usize..]);
                // tail y satisfies y = (c + y) / cp
                let y = rat(&c, &(cp - 1u8));
                Some(e0 + (Rat::from_integer(int(&a)) + y) / Rat::from_integer(int(&qs)))
            }
            Source::Rule(_) => None,
        }
    }

    /// `(start, period)` such that, for every `j > start`, the digits and each
    /// of the listed bases (and the stream's own base) repeat with `period`.
    ///
    /// Rational streams are searched for a repeated remainder state for at most
    /// `budget` steps.
    pub fn joint_period(&self, extra: &[&BasicSeq], budget: u64) -> Option<(u64, u64)> {
        let mut s0 = 0u64;
        let mut l0 = 1u64;
        for b in core::iter::once(&self.base).chain(extra.iter().copied()) {
            let ep = b.eventual_period()?;
            s0 = s0.max(ep.prefix.len() as u64);
            l0 = l0.lcm(&(ep.cycle.len() as u64));
        }
        match &*self.src {
            Source::Finite { digits, .. } => Some((s0.max(digits.len() as u64), l0)),
            Source::Periodic { prefix, cycle } => Some((s0.max(prefix.len() as u64), l0.lcm(&(cycle.len() as u64)))),
            Source::Rational { num, den, .. } => {
                let q = self.base.prefix(s0).ok()?;
                let mut a = num.clone();
                for qn in &q {
                    a = (a * qn) % den;
                }
                let mut seen: BTreeMap<(Nat, u64), u64> = BTreeMap::new();
                let mut m = s0;
                loop {
                    let key = (a.clone(), (m - s0) % l0);
                    if let Some(&m1) = seen.get(&key) {
                        return Some((m1, m - m1));
                    }
                    if m - s0 > budget {
                        return None;
                    }
                    seen.insert(key, m);
                    let qn = self.base.q_at(m + 1).ok()?;
                    a = (a * qn) % den;
                    m += 1;
                }
            }
            Source::Rule(_) => None,
        }
    }

    fn periodic_canonicity(&self) -> Result<Canonicity> {
        let Some((start, period)) = self.joint_period(&[], 0) else { return Ok(Canonicity::Unknown) };
        let total = start + period;
        let d = self.prefix(total)?;
        let q = self.base.prefix(total)?;
        let cyc = start as usize..total as usize;
        if d[cyc.clone()].iter().all(Zero::is_zero) {
            let last = d[..start as usize].iter().rposition(|v| !v.is_zero()).map_or(0, |i| i as u64 + 1);
            return Ok(Canonicity::Terminating { last_nonzero: last });
        }
        if cyc.clone().all(|i| d[i].clone() + 1u8 == q[i]) {
            let mut from = start as usize;
            while from > 0 && d[from - 1].clone() + 1u8 == q[from - 1] {
                from -= 1;
            }
            return Ok(Canonicity::MaxTail { from: from as u64 + 1 });
        }
        Ok(Canonicity::Canonical)
    }
}

fn periodic_at<'a>(prefix: &'a [Nat], cycle: &'a [Nat], n: u64) -> &'a Nat {
    let i = (n - 1) as usize;
    if i < prefix.len() {
        &prefix[i]
    } else {
        &cycle[(i - prefix.len()) % cycle.len()]
    }
}

/// `(A, q_1...q_n)` with `A / (q_1...q_n) = sum E_j / (q_1...q_j)`.
pub(crate) fn horner(d: &[Nat], q: &[Nat]) -> (Nat, Nat) {
    let mut a = Nat::zero();
    let mut p = Nat::one();
    for (e, b) in d.iter().zip(q) {
        a = a * b + e;
        p *= b;
    }
    (a, p)
}

struct FnRule<F> {
    name: &'static str,
    f: F,
}

impl<F> fmt::Debug for FnRule<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl<F> DigitRule for FnRule<F>
where
    F: Fn(u64) -> Nat + Send + Sync,
{
    fn digit(&self, n: u64) -> Result<Nat> {
        Ok((self.f)(n))
    }
}

/// Greedy expansion of `x` in base `q`; the first `n` digits are cached.
///
/// Greedy digits never end in an all-maximal tail, so the result is canonical;
/// it is tagged `Terminating` when the remainder vanishes within the horizon.
pub fn expand_rational(x: &Rat, q: &BasicSeq, n: u64) -> Result<DigitStream> {
    let e0 = x.floor().to_integer();
    let den = x.denom().magnitude().clone();
    let num = (x.numer() - &e0 * x.denom()).magnitude().clone();
    let qs = q.prefix(n)?;
    let mut cache = Vec::with_capacity(n as usize);
    let mut a = num.clone();
    for qn in &qs {
        if a.is_zero() {
            break;
        }
        let (e, r) = (a * qn).div_rem(&den);
        cache.push(e);
        a = r;
    }
    if a.is_zero() {
        return DigitStream::from_digits(q.clone(), e0, trim_zeros(cache), Tail::Zeros);
    }
    Ok(DigitStream::new(q.clone(), e0, Source::Rational { num, den, cache, num_end: a }, Canonicity::Canonical))
}

fn trim_zeros(mut d: Vec<Nat>) -> Vec<Nat> {
    while d.last().is_some_and(Zero::is_zero) {
        d.pop();
    }
    d
}

/// `[lo, hi]` with `lo = E_0 + sum_{j<=n} E_j / (q_1...q_j)` and `hi = lo + 1/(q_1...q_n)`,
/// collapsed to the exact value when the tail is known.
pub fn enclose_prefix(d: &DigitStream, n: u64) -> Result<Enclosure> {
    let digits = d.prefix(n)?;
    let q = d.base.prefix(n)?;
    let (a, qq) = horner(&digits, &q);
    let lo = Rat::from_integer(d.int_part.clone()) + rat(&a, &qq);
    let hi = &lo + rat(&Nat::one(), &qq);
    Ok(match d.canon {
        Canonicity::Terminating { last_nonzero } if last_nonzero <= n => Enclosure::point(lo),
        Canonicity::MaxTail { from } if from <= n + 1 => Enclosure::point(hi),
        _ => Enclosure { lo, hi },
    })
}

/// Result of [`canonicalize`].
#[derive(Clone, Debug)]
pub struct Canonicalized {
    pub stream: DigitStream,
    pub diagnostic: Option<String>,
}

/// Swaps the two representations of a terminating point: the finite form
/// becomes the all-`(q_j - 1)` tail form and vice versa. Other streams are
/// returned unchanged with a diagnostic.
pub fn canonicalize(d: &DigitStream) -> Result<Canonicalized> {
    match d.canon {
        Canonicity::Terminating { last_nonzero } => {
            let t = last_nonzero;
            if t == 0 {
                let s = DigitStream::from_digits(d.base.clone(), &d.int_part - 1, Vec::new(), Tail::Max)?;
                return Ok(Canonicalized { stream: s, diagnostic: None });
            }
            let mut digits = d.prefix(t)?;
            digits[(t - 1) as usize] -= 1u8;
            let s = DigitStream::from_digits(d.base.clone(), d.int_part.clone(), digits, Tail::Max)?;
            Ok(Canonicalized { stream: s.with_canonicity(Canonicity::MaxTail { from: t + 1 }), diagnostic: None })
        }
        Canonicity::MaxTail { from } => {
            let mut e0 = d.int_part.clone();
            let mut digits = d.prefix(from - 1)?;
            let q = d.base.prefix(from - 1)?;
            let mut i = digits.len();
            loop {
                if i == 0 {
                    e0 += 1;
                    break;
                }
                digits[i - 1] += 1u8;
                if digits[i - 1] < q[i - 1] {
                    break;
                }
                digits[i - 1] = Nat::zero();
                i -= 1;
            }
            let s = DigitStream::from_digits(d.base.clone(), e0, trim_zeros(digits), Tail::Zeros)?;
            Ok(Canonicalized { stream: s, diagnostic: None })
        }
        Canonicity::Canonical => Ok(Canonicalized { stream: d.clone(), diagnostic: None }),
        Canonicity::Unknown => Ok(Canonicalized {
            stream: d.clone(),
            diagnostic: Some(String::from("canonicity unknown and no all-maximal tail detected; stream unchanged")),
        }),
    }
}

/// Default number of tail digits used by [`shift_T`].
pub const SHIFT_DEPTH: u64 = 40;

/// Encloses `T_{Q,n}(x) = sum_{j>n} E_j / (q_{n+1} ... q_j)` from `depth` tail digits.
///
/// The value is the digit sum of the given representation, so an all-maximal
/// tail yields exactly 1.
#[allow(non_snake_case)]
pub fn shift_T(d: &DigitStream, n: u64, depth: u64) -> Result<Enclosure> {
    if let Some(r) = d.remainder(n) {
        return Ok(Enclosure::point(r));
    }
    let digits = d.digits(n + 1, depth as usize)?;
    let q = d.base.values(n + 1, depth as usize)?;
    let (a, qq) = horner(&digits, &q);
    let lo = rat(&a, &qq);
    let hi = &lo + rat(&Nat::one(), &qq);
    Ok(match d.canon {
        Canonicity::Terminating { last_nonzero } if last_nonzero <= n + depth => Enclosure::point(lo),
        Canonicity::MaxTail { from } if from <= n + 1 + depth => Enclosure::point(hi),
        _ => Enclosure { lo, hi },
    })
}

/// Finite-horizon verdict for membership in `Z_{P,Q}(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZVerdict {
    Consistent,
    Violated(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoReport {
    /// Longest run of digits in `{0, p_j - 1}` among the first `n`.
    pub rho_prefix: u64,
    /// The same statistic for the image digits against `{0, q_j - 1}`.
    pub image_rho_prefix: u64,
    pub verdict: ZVerdict,
}

/// Longest run of indices `j` where the digit is `0` or `base_j - 1`.
pub fn longest_extreme_run(d: &[Nat], base: &[Nat]) -> u64 {
    let mut best = 0u64;
    let mut run = 0u64;
    for (e, b) in d.iter().zip(base) {
        if e.is_zero() || e + 1u8 == *b {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Run statistic `rho_P` on the first `n` digits and the `Z_{P,Q}(k)` conditions
/// on both sides of `psi_{P,Q}`.
pub fn rho_and_zmembership(d: &DigitStream, p: &BasicSeq, q: &BasicSeq, k: u64, n: u64) -> Result<RhoReport> {
    let e = d.prefix(n)?;
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let rho = longest_extreme_run(&e, &pv);
    let img: Vec<Nat> = e.iter().zip(&qv).map(|(e, q)| e.min(&(q - 1u8)).clone()).collect();
    let irho = longest_extreme_run(&img, &qv);
    let verdict = if let Some(j) = (0..e.len()).find(|&j| e[j] >= pv[j].clone().min(qv[j].clone())) {
        ZVerdict::Violated(format!("digit {} at position {} is not below min(p, q)", e[j], j + 1))
    } else if rho > k {
        ZVerdict::Violated(format!("run of {rho} extreme digits exceeds {k}"))
    } else if irho > k {
        ZVerdict::Violated(format!("image run of {irho} extreme digits exceeds {k}"))
    } else {
        ZVerdict::Consistent
    };
    Ok(RhoReport { rho_prefix: rho, image_rho_prefix: irho, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn n(v: u64) -> Nat {
        Nat::from(v)
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    fn c(b: u64) -> BasicSeq {
        BasicSeq::constant(b).unwrap()
    }

    #[test]
    fn seven_eighths_in_base_three() {
        let d = expand_rational(&r(7, 8), &c(3), 10).unwrap();
        assert_eq!(d.prefix(6).unwrap(), [2u64, 1, 2, 1, 2, 1].map(n).to_vec());
        assert_eq!(d.canonicity(), &Canonicity::Canonical);
        assert_eq!(d.digits(1001, 2).unwrap(), vec![n(2), n(1)]);
        assert_eq!(d.joint_period(&[], 100), Some((0, 2)));
        assert_eq!(d.value_exact(), Some(r(7, 8)));
    }

    #[test]
    fn dyadic_half_terminates() {
        let d = expand_rational(&r(1, 2), &c(2), 10).unwrap();
        assert_eq!(d.canonicity(), &Canonicity::Terminating { last_nonzero: 1 });
        assert_eq!(d.prefix(3).unwrap(), vec![n(1), n(0), n(0)]);
        let f = expand_rational(&r(1, 2), &BasicSeq::affine(1, 1u8).unwrap(), 10).unwrap();
        assert_eq!(f.prefix(3).unwrap(), vec![n(1), n(0), n(0)]);
    }

    #[test]
    fn negative_and_integer_inputs() {
        let d = expand_rational(&r(-1, 3), &c(3), 5).unwrap();
        assert_eq!(d.int_part(), &BigInt::from(-1));
        assert_eq!(d.prefix(2).unwrap(), vec![n(2), n(0)]);
        let z = expand_rational(&r(4, 1), &c(3), 5).unwrap();
        assert_eq!(z.canonicity(), &Canonicity::Terminating { last_nonzero: 0 });
        assert_eq!(enclose_prefix(&z, 3).unwrap(), Enclosure::point(r(4, 1)));
    }

    #[test]
    fn enclosure_examples() {
        let d = expand_rational(&r(7, 8), &c(3), 10).unwrap();
        let e = enclose_prefix(&d, 2).unwrap();
        assert_eq!(e, Enclosure { lo: r(7, 9), hi: r(8, 9) });
        assert!(e.contains(&r(7, 8)));
        let zero = DigitStream::from_fn(c(5), "zero", |_| Nat::zero());
        let e = enclose_prefix(&zero, 3).unwrap();
        assert_eq!(e, Enclosure { lo: r(0, 1), hi: r(1, 125) });
        let x = r(1, 3);
        let d = expand_rational(&x, &c(2), 60).unwrap();
        let e = enclose_prefix(&d, 60).unwrap();
        assert!(e.contains(&x));
        assert!(e.width() <= Rat::new(1.into(), BigInt::from(1u64 << 60)));
    }

    #[test]
    fn canonicalize_swaps_forms() {
        let half = expand_rational(&r(1, 2), &c(2), 10).unwrap();
        let t = canonicalize(&half).unwrap().stream;
        assert_eq!(t.canonicity(), &Canonicity::MaxTail { from: 2 });
        assert_eq!(t.prefix(4).unwrap(), [0u64, 1, 1, 1].map(n).to_vec());
        assert_eq!(t.value_exact(), Some(r(1, 2)));
        let back = canonicalize(&t).unwrap().stream;
        assert_eq!(back.canonicity(), half.canonicity());
        assert_eq!(back.prefix(5).unwrap(), half.prefix(5).unwrap());

        let q = BasicSeq::periodic(vec![n(3), n(2)]).unwrap();
        let tail = DigitStream::from_periodic_digits(q, BigInt::zero(), vec![], vec![n(2), n(1)]).unwrap();
        assert_eq!(tail.canonicity(), &Canonicity::MaxTail { from: 1 });
        assert_eq!(tail.value_exact(), Some(r(1, 1)));
        let one = canonicalize(&tail).unwrap().stream;
        assert_eq!(one.int_part(), &BigInt::from(1));
        assert_eq!(one.canonicity(), &Canonicity::Terminating { last_nonzero: 0 });

        let x = DigitStream::from_digits(c(5), BigInt::zero(), vec![n(0)], Tail::Max).unwrap();
        let y = canonicalize(&x).unwrap().stream;
        assert_eq!(y.value_exact(), Some(r(1, 5)));

        let third = expand_rational(&r(1, 3), &c(2), 10).unwrap();
        let same = canonicalize(&third).unwrap();
        assert!(same.diagnostic.is_none());
        let unk = DigitStream::from_fn(c(2), "ones", |_| n(1));
        assert!(canonicalize(&unk).unwrap().diagnostic.is_some());
    }

    #[test]
    fn shift_examples() {
        let d = expand_rational(&r(7, 8), &c(10), 10).unwrap();
        assert_eq!(d.prefix(3).unwrap(), [8u64, 7, 5].map(n).to_vec());
        assert_eq!(shift_T(&d, 1, 3).unwrap(), Enclosure::point(r(3, 4)));
        let d = expand_rational(&r(7, 8), &c(3), 10).unwrap();
        assert_eq!(shift_T(&d, 1, SHIFT_DEPTH).unwrap(), Enclosure::point(r(5, 8)));
        let zero = DigitStream::from_fn(c(7), "zero", |_| Nat::zero());
        let e = shift_T(&zero, 4, 5).unwrap();
        assert_eq!(e.lo, r(0, 1));
        let z = DigitStream::from_digits(c(7), BigInt::zero(), vec![], Tail::Zeros).unwrap();
        assert_eq!(shift_T(&z, 4, 5).unwrap(), Enclosure::point(r(0, 1)));
    }

    #[test]
    fn shift_of_the_two_representations() {
        let half = expand_rational(&r(1, 2), &c(2), 10).unwrap();
        let tail = canonicalize(&half).unwrap().stream;
        for m in 1..6 {
            assert_eq!(shift_T(&half, m, 10).unwrap(), Enclosure::point(r(0, 1)));
            assert_eq!(shift_T(&tail, m, 10).unwrap(), Enclosure::point(r(1, 1)));
        }
    }

    #[test]
    fn window_evidence() {
        let ones = DigitStream::from_fn(c(3), "ones", |_| n(1));
        let up = ones.with_window_evidence(2000, 1000).unwrap();
        assert_eq!(up.canonicity(), &Canonicity::Canonical);
        let max = DigitStream::from_fn(c(3), "twos", |_| n(2));
        assert_eq!(max.with_window_evidence(2000, 1000).unwrap().canonicity(), &Canonicity::Unknown);
    }

    #[test]
    fn rho_examples() {
        let p = c(3);
        let ones = DigitStream::from_fn(p.clone(), "ones", |_| n(1));
        for k in 0..3 {
            let rep = rho_and_zmembership(&ones, &p, &c(4), k, 200).unwrap();
            assert_eq!(rep.rho_prefix, 0);
            assert_eq!(rep.verdict, ZVerdict::Consistent);
        }
        let zz = DigitStream::from_fn(p.clone(), "zzz", |m| if m <= 3 { n(0) } else { n(1) });
        let rep = rho_and_zmembership(&zz, &p, &c(4), 2, 50).unwrap();
        assert_eq!(rep.rho_prefix, 3);
        assert!(matches!(rep.verdict, ZVerdict::Violated(_)));
        let x = expand_rational(&r(7, 8), &p, 10).unwrap();
        assert_eq!(rho_and_zmembership(&x, &p, &c(5), 5, 100).unwrap().rho_prefix, 1);
        let big = rho_and_zmembership(&x, &p, &c(2), 5, 10).unwrap();
        assert!(matches!(big.verdict, ZVerdict::Violated(_)));
    }

    #[test]
    fn digit_range_checked() {
        assert!(DigitStream::from_digits(c(3), BigInt::zero(), vec![n(3)], Tail::Zeros).is_err());
        let bad = DigitStream::from_fn(c(3), "bad", |_| n(7));
        assert!(bad.validate(3).is_err());
    }
}
