//! The digit map `psi_{P,Q}` and its analytic evaluators.
//!
//! `psi_{P,Q}` sends the `P`-digits `E_n` of `x` to the `Q`-digits
//! `min(E_n, q_n - 1)`. It forgets the integer part, so `psi_{P,P}(x) = {x}`.

use alloc::{format, string::String, sync::Arc, vec, vec::Vec};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::digits::{horner, DigitRule, DigitStream};
use crate::error::{invalid, Error, Result};
use crate::logs::{ln_nat, Bracket, LogSum};
use crate::seq::{rat, BasicSeq};
use crate::{Canonicity, Nat, Rat};

const PERIOD_BUDGET: u64 = 1 << 16;
const MATERIALIZE_LIMIT: u64 = 1 << 20;

#[derive(Debug)]
struct PsiRule {
    inner: DigitStream,
    q: BasicSeq,
}

impl DigitRule for PsiRule {
    fn digit(&self, n: u64) -> Result<Nat> {
        let e = self.inner.digit(n)?;
        let top = self.q.q_at(n)? - 1u8;
        Ok(e.min(top))
    }

    fn digits(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        let e = self.inner.digits(from, count)?;
        let q = self.q.values(from, count)?;
        Ok(psi_digits(&e, &q))
    }
}

/// `min(E_j, q_j - 1)` elementwise.
pub fn psi_digits(e: &[Nat], q: &[Nat]) -> Vec<Nat> {
    e.iter().zip(q).map(|(e, q)| e.min(&(q - 1u8)).clone()).collect()
}

/// `sum_j d_j / (q_1 ... q_j)` over a finite digit list.
pub fn value_of(d: &[Nat], q: &[Nat]) -> Rat {
    let (a, qq) = horner(d, q);
    rat(&a, &qq)
}

/// Digit-wise image of `d` (over `P`) as a stream over `q`.
///
/// Eventually periodic inputs over eventually periodic bases are materialized,
/// so the image carries an exact canonicity tag (it may acquire an all-maximal
/// tail). Otherwise the image is lazy and tagged from the input.
pub fn psi_map(d: &DigitStream, q: &BasicSeq) -> Result<DigitStream> {
    if let Some((start, period)) = d.joint_period(&[q], PERIOD_BUDGET) {
        let total = start + period;
        if total <= MATERIALIZE_LIMIT {
            let img = psi_digits(&d.prefix(total)?, &q.prefix(total)?);
            let (pre, cyc) = img.split_at(start as usize);
            return DigitStream::from_periodic_digits(q.clone(), BigInt::zero(), pre.to_vec(), cyc.to_vec());
        }
    }
    let canon = match d.canonicity() {
        Canonicity::Terminating { last_nonzero } => Canonicity::Terminating { last_nonzero: *last_nonzero },
        _ => Canonicity::Unknown,
    };
    Ok(DigitStream::from_rule(q.clone(), Arc::new(PsiRule { inner: d.clone(), q: q.clone() })).with_canonicity(canon))
}

/// `Psi_j = psi_{Q_{j-1},Q_j} o ... o psi_{Q_1,Q_2}` applied to `d` (over `qs[0]`).
pub fn compose_chain(qs: &[BasicSeq], d: &DigitStream) -> Result<DigitStream> {
    if qs.len() < 2 {
        return Err(invalid("a chain needs at least two bases"));
    }
    let mut cur = d.clone();
    for q in &qs[1..] {
        cur = psi_map(&cur, q)?;
    }
    Ok(cur)
}

/// `psi_{P,Q}` restricted to `Z_{P,Q}(k)`.
#[derive(Clone, Debug)]
pub struct PsiMap {
    pub p: BasicSeq,
    pub q: BasicSeq,
    pub k: Option<u64>,
}

impl PsiMap {
    /// Applies the map; with a restriction level, the first `horizon` digits
    /// must pass the `Z_{P,Q}(k)` checks.
    pub fn apply(&self, d: &DigitStream, horizon: u64) -> Result<DigitStream> {
        if let Some(k) = self.k {
            let rep = crate::digits::rho_and_zmembership(d, &self.p, &self.q, k, horizon)?;
            if let crate::digits::ZVerdict::Violated(why) = rep.verdict {
                return Err(Error::Hypothesis(format!("input outside Z(k): {why}")));
            }
        }
        psi_map(d, &self.q)
    }
}

/// `psi_{P_t,Q_t}(x)` with `P_t = (p_1, ..., p_t, 2, 2, ...)`.
///
/// The first `t` digits of `{x}` are taken in base `P`; the remainder `r_t`
/// is read identically in base 2 on both sides, giving `beta + r_t / (q_1...q_t)`.
pub fn approximant_eval(p: &BasicSeq, q: &BasicSeq, t: u64, x: &Rat) -> Result<Rat> {
    let pv = p.prefix(t)?;
    let qv = q.prefix(t)?;
    approximant_eval_with(&pv, &qv, x)
}

pub(crate) fn approximant_eval_with(pv: &[Nat], qv: &[Nat], x: &Rat) -> Result<Rat> {
    let den = x.denom().magnitude().clone();
    let e0 = x.floor().to_integer();
    let mut a = (x.numer() - &e0 * x.denom()).magnitude().clone();
    let mut beta = Nat::zero();
    let mut qq = Nat::one();
    for (pn, qn) in pv.iter().zip(qv) {
        let (e, r) = (a * pn).div_rem(&den);
        a = r;
        beta = beta * qn + e.min(qn - 1u8);
        qq *= qn;
    }
    Ok(rat(&beta, &qq) + rat(&a, &(qq * den)))
}

/// Left-continuity status at a terminating point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Continuous,
    Jump,
    /// The tail bracket still contains the continuity value at the horizon.
    Undecided,
}

/// Which part of the left-discontinuity set the point belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetTag {
    /// Last nonzero digit `E_t >= q_t`.
    A { t: u64 },
    /// `E_t < q_t` and `p_s < q_s` for the given `s > t`.
    B { s: u64 },
    /// `x` is an integer: `psi` reads only fractional digits, so `psi(x) = 0`
    /// while the left limit is positive.
    IntegerPoint,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuityReport {
    /// Index of the last nonzero digit (0 for integers).
    pub t: u64,
    pub side: Side,
    pub status: Status,
    /// `psi(x) - psi(x^-)` when the tail sum is known exactly.
    pub jump: Option<Rat>,
    /// Always contains the jump.
    pub jump_bracket: (Rat, Rat),
    pub set_tag: SetTag,
}

/// Exact or bracketed `S = sum_{j>t} min(p_j-1, q_j-1) / (q_{t+1} ... q_j)`.
fn tail_series(p: &BasicSeq, q: &BasicSeq, t: u64, horizon: u64) -> Result<(Rat, Rat)> {
    if let (Some(ep), Some(eq)) = (p.eventual_period(), q.eventual_period()) {
        let s0 = (ep.prefix.len().max(eq.prefix.len()) as u64).max(t);
        let l = (ep.cycle.len() as u64).lcm(&(eq.cycle.len() as u64));
        let pv = p.values(t + 1, (s0 - t + l) as usize)?;
        let qv = q.values(t + 1, (s0 - t + l) as usize)?;
        let m = tail_numerators(&pv, &qv);
        let h = (s0 - t) as usize;
        let (a, qh) = horner(&m[..h], &qv[..h]);
        let (c, cp) = horner(&m[h..], &qv[h..]);
        let s = (Rat::from_integer(BigInt::from(a)) + rat(&c, &(cp - 1u8))) / Rat::from_integer(BigInt::from(qh));
        return Ok((s.clone(), s));
    }
    let pv = p.values(t + 1, horizon as usize)?;
    let qv = q.values(t + 1, horizon as usize)?;
    let (a, qh) = horner(&tail_numerators(&pv, &qv), &qv);
    let lo = rat(&a, &qh);
    Ok((lo.clone(), lo + rat(&Nat::one(), &qh)))
}

fn tail_numerators(pv: &[Nat], qv: &[Nat]) -> Vec<Nat> {
    pv.iter().zip(qv).map(|(p, q)| (p - 1u8).min(q - 1u8)).collect()
}

/// Decides left continuity of `psi_{P,Q}` at a terminating point `x` (over `P`).
///
/// The jump is `(delta - S) / (q_1...q_t)` with
/// `delta = min(E_t, q_t-1) - min(E_t-1, q_t-1)`. `S` is exact for eventually
/// periodic bases and bracketed by `tail_horizon` terms otherwise. Right
/// continuity always holds, so only the left side is reported.
pub fn classify_continuity(p: &BasicSeq, q: &BasicSeq, x: &DigitStream, tail_horizon: u64) -> Result<ContinuityReport> {
    let Canonicity::Terminating { last_nonzero: t } = *x.canonicity() else {
        return Err(invalid("continuity is classified at terminating points only"));
    };
    let e = x.prefix(t)?;
    let pv = p.prefix(t)?;
    for (i, (d, b)) in e.iter().zip(&pv).enumerate() {
        if d >= b {
            return Err(Error::DigitOutOfRange { index: i as u64 + 1, digit: d.clone(), base: b.clone() });
        }
    }
    let qv = q.prefix(t)?;
    let qt: Nat = qv.iter().product();
    let (s_lo, s_hi) = tail_series(p, q, t, tail_horizon.max(1))?;
    let (delta, tag_a) = if t == 0 {
        (Rat::zero(), false)
    } else {
        let et = &e[(t - 1) as usize];
        let top = &qv[(t - 1) as usize] - 1u8;
        let d = et.min(&top).clone() - (et - 1u8).min(top.clone());
        (Rat::from_integer(BigInt::from(d)), et >= &qv[(t - 1) as usize])
    };
    let scale = Rat::from_integer(BigInt::from(qt));
    let j_lo = (&delta - &s_hi) / &scale;
    let j_hi = (&delta - &s_lo) / &scale;
    let status = if j_lo.is_zero() && j_hi.is_zero() {
        Status::Continuous
    } else if j_lo.is_positive() || j_hi.is_negative() {
        Status::Jump
    } else {
        Status::Undecided
    };
    let jump = (j_lo == j_hi).then(|| j_lo.clone());
    let set_tag = if t == 0 {
        SetTag::IntegerPoint
    } else if tag_a {
        SetTag::A { t }
    } else if status == Status::Continuous {
        SetTag::None
    } else {
        match first_smaller(p, q, t, tail_horizon.max(1))? {
            Some(s) => SetTag::B { s },
            None => SetTag::None,
        }
    };
    Ok(ContinuityReport { t, side: Side::Left, status, jump, jump_bracket: (j_lo, j_hi), set_tag })
}

fn first_smaller(p: &BasicSeq, q: &BasicSeq, t: u64, horizon: u64) -> Result<Option<u64>> {
    let span = match (p.eventual_period(), q.eventual_period()) {
        (Some(ep), Some(eq)) => {
            (ep.prefix.len().max(eq.prefix.len()) as u64) + (ep.cycle.len() as u64).lcm(&(eq.cycle.len() as u64))
        }
        _ => horizon,
    };
    let pv = p.values(t + 1, span as usize)?;
    let qv = q.values(t + 1, span as usize)?;
    Ok(pv.iter().zip(&qv).position(|(a, b)| a < b).map(|i| t + 1 + i as u64))
}

/// How [`variation_exact`] obtained its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariationMethod {
    Formula,
    Breakpoints,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariationReport {
    pub v: Rat,
    pub upper_bound: Rat,
    pub method: VariationMethod,
}

/// Largest cell count for which the breakpoint enumeration is used when `p_t = q_t`.
pub const BREAKPOINT_LIMIT: u64 = 1 << 20;

/// Total variation of `psi_{P_t,Q_t}` on `[0, 1]`.
///
/// Every point whose last nonzero `P`-digit sits at position `k <= t` is a
/// breakpoint; there are `p_1...p_{k-1}` of them per digit value `E`, each with
/// left jump `delta_k(E)/(q_1...q_k) - sum_{j=k+1}^t m_j/(q_1...q_j) - 1/(q_1...q_t)`,
/// `m_j = min(p_j-1, q_j-1)`. Adding the linear rise `p_1...p_t / q_1...q_t` and
/// the drop `psi_t(1^-)` at 1 gives the variation.
pub fn variation_exact(p: &BasicSeq, q: &BasicSeq, t: u64) -> Result<VariationReport> {
    let pv = p.prefix(t)?;
    let qv = q.prefix(t)?;
    let upper_bound = variation_upper_bound(&pv, &qv);
    let cells: Nat = pv.iter().product();
    let equal_last = t >= 1 && pv[(t - 1) as usize] == qv[(t - 1) as usize];
    if equal_last && cells <= Nat::from(BREAKPOINT_LIMIT) {
        let v = variation_breakpoints_with(&pv, &qv)?;
        return Ok(VariationReport { v, upper_bound, method: VariationMethod::Breakpoints });
    }
    Ok(VariationReport { v: variation_formula(&pv, &qv), upper_bound, method: VariationMethod::Formula })
}

fn variation_formula(pv: &[Nat], qv: &[Nat]) -> Rat {
    let t = pv.len();
    let mut qpre = Vec::with_capacity(t + 1);
    qpre.push(Nat::one());
    for b in qv {
        let last = qpre.last().unwrap() * b;
        qpre.push(last);
    }
    let qt = Rat::from_integer(BigInt::from(qpre[t].clone()));
    let inv_qt = qt.recip();
    let m: Vec<Rat> = (0..t).map(|j| rat(&(&pv[j] - 1u8).min(&qv[j] - 1u8), &qpre[j + 1])).collect();
    // suffix[k] = sum_{j>k} m_j / Q_j (0-based)
    let mut suffix = vec![Rat::zero(); t + 1];
    for j in (0..t).rev() {
        suffix[j] = &suffix[j + 1] + &m[j];
    }
    let mut v = Rat::zero();
    let mut ppre = Nat::one();
    for k in 0..t {
        let base = &suffix[k + 1] + &inv_qt;
        let top = &qv[k] - 1u8;
        let qk = Rat::from_integer(BigInt::from(qpre[k + 1].clone()));
        // delta_k(E) is 1 for E < q_k and 0 afterwards.
        let up = (Rat::one() / &qk - &base).abs();
        let n_up = pv[k].clone().min(top.clone() + 1u8) - 1u8;
        let n_flat = &pv[k] - 1u8 - &n_up;
        let per = Rat::from_integer(BigInt::from(n_up)) * up + Rat::from_integer(BigInt::from(n_flat)) * &base;
        v += Rat::from_integer(BigInt::from(ppre.clone())) * per;
        ppre *= &pv[k];
    }
    let psi_one_minus = &suffix[0] + &inv_qt;
    v + psi_one_minus + rat(&ppre, &qpre[t])
}

/// `2 sum_k sum_{j=k+1}^t p_k (p_j + q_j) / (q_1...q_j) + 2 p_1...p_t / q_1...q_t + 1`.
fn variation_upper_bound(pv: &[Nat], qv: &[Nat]) -> Rat {
    let t = pv.len();
    let mut s = Rat::zero();
    let mut qq = Nat::one();
    let mut psum = Nat::zero();
    for j in 0..t {
        qq *= &qv[j];
        s += rat(&(&psum * (&pv[j] + &qv[j])), &qq);
        psum += &pv[j];
    }
    let two = Rat::from_integer(BigInt::from(2));
    let pp: Nat = pv.iter().product();
    &two * s + &two * rat(&pp, &qq) + Rat::one()
}

/// Variation by walking all `p_1...p_t` cells of level `t`.
pub fn variation_breakpoints(p: &BasicSeq, q: &BasicSeq, t: u64) -> Result<Rat> {
    variation_breakpoints_with(&p.prefix(t)?, &q.prefix(t)?)
}

fn variation_breakpoints_with(pv: &[Nat], qv: &[Nat]) -> Result<Rat> {
    let t = pv.len();
    let cells = pv.iter().product::<Nat>().to_u64().ok_or_else(|| invalid("too many cells to enumerate"))?;
    let qt: Nat = qv.iter().product();
    let pt: Nat = pv.iter().product();
    let rise = rat(&Nat::one(), &qt);
    let p_small: Vec<u64> = pv.iter().map(|v| v.to_u64().unwrap_or(u64::MAX)).collect();
    let mut digits = vec![0u64; t];
    let mut v = rat(&pt, &qt);
    let mut prev_end: Option<Rat> = None;
    for _ in 0..cells {
        let d: Vec<Nat> = digits.iter().map(|&e| Nat::from(e)).collect();
        let start = value_of(&psi_digits(&d, qv), qv);
        if let Some(end) = prev_end.take() {
            v += (&start - end).abs();
        }
        prev_end = Some(start + &rise);
        for k in (0..t).rev() {
            digits[k] += 1;
            if digits[k] < p_small[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    // psi_t(1) = 0
    v += prev_end.unwrap_or_default().abs();
    Ok(v)
}

/// Verdict of [`bv_check`]; the condition is sufficient only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BvVerdict {
    ConditionMet,
    NotProven,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BvReport {
    /// `(j, sum_{k<j'} sum_{j'<=j} p_k (p_j' + q_j') / (q_1...q_j'))` at checkpoints.
    pub double_sum_partials: Vec<(u64, Rat)>,
    /// Certified bound on the rest of the double series, when available.
    pub tail_bound: Option<Rat>,
    /// Minimum over the horizon of `ln(p_1...p_n / q_1...q_n)`.
    pub prod_ratio_running_min: f64,
    /// `ln(p_1...p_n / q_1...q_n)` at the horizon.
    pub prod_ratio_last: f64,
    /// The product ratio is certified bounded (periodic cycle ratio at most 1).
    pub ratio_bounded: bool,
    pub verdict: BvVerdict,
    pub notes: Vec<String>,
}

/// Partial sums of the bounded-variation double series with a certified tail
/// bound for eventually periodic bases.
pub fn bv_check(p: &BasicSeq, q: &BasicSeq, horizon: u64, checkpoints: &[u64]) -> Result<BvReport> {
    let pv = p.prefix(horizon)?;
    let qv = q.prefix(horizon)?;
    let mut a = Nat::zero();
    let mut qq = Nat::one();
    let mut psum = Nat::zero();
    let mut partials = Vec::new();
    let mut lr = LogSum::new();
    let mut running_min = 0.0f64;
    for j in 0..horizon as usize {
        a = a * &qv[j] + &psum * (&pv[j] + &qv[j]);
        qq *= &qv[j];
        psum += &pv[j];
        lr.push(ln_nat(&pv[j]).sub(ln_nat(&qv[j])));
        running_min = running_min.min(lr.value().mid);
        let n = j as u64 + 1;
        if checkpoints.contains(&n) || n == horizon {
            partials.push((n, rat(&a, &qq)));
        }
    }
    let mut notes = Vec::new();
    let (mut tail_bound, mut ratio_bounded) = (None, false);
    match (p.eventual_period(), q.eventual_period()) {
        (Some(ep), Some(eq)) if horizon as usize >= ep.prefix.len().max(eq.prefix.len()) => {
            let pmax = ep.cycle.iter().max().cloned().unwrap_or_default();
            let qmax = eq.cycle.iter().max().cloned().unwrap_or_default();
            let qmin = eq.cycle.iter().min().cloned().unwrap_or_default();
            // sum_{m>=1} (S_H + (m-1) pmax) r^m with r = 1/qmin
            let r = rat(&Nat::one(), &qmin);
            let one = Rat::one();
            let g1 = &r / (&one - &r);
            let g2 = &r * &r / ((&one - &r) * (&one - &r));
            let big = |v: &Nat| Rat::from_integer(BigInt::from(v.clone()));
            let tb = big(&(&pmax + &qmax)) / big(&qq) * (big(&psum) * g1 + big(&pmax) * g2);
            tail_bound = Some(tb);
            let l = ep.cycle.len().lcm(&eq.cycle.len());
            let pc: Nat = (0..l).map(|i| ep.cycle[i % ep.cycle.len()].clone()).product();
            let qc: Nat = (0..l).map(|i| eq.cycle[i % eq.cycle.len()].clone()).product();
            ratio_bounded = pc <= qc;
            if !ratio_bounded {
                notes.push(String::from("cycle product of P exceeds that of Q: the product ratio diverges"));
            }
        }
        _ => notes.push(String::from("bases not recognisably eventually periodic: tail not certified")),
    }
    let verdict = if tail_bound.is_some() && ratio_bounded { BvVerdict::ConditionMet } else { BvVerdict::NotProven };
    Ok(BvReport {
        double_sum_partials: partials,
        tail_bound,
        prod_ratio_running_min: running_min,
        prod_ratio_last: lr.value().mid,
        ratio_bounded,
        verdict,
        notes,
    })
}

/// Explicit non-monotonicity witness inside a cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub m: u64,
    pub c: Rat,
    pub x: Rat,
    pub y: Rat,
    pub psi_c: Rat,
    pub psi_x: Rat,
    pub psi_y: Rat,
}

/// Searches `m` beyond the cell with `p_m > q_m` and returns the points
/// `c` (cell start), `x = c + (q_m - 1)/(p_1...p_m) + 1/(p_1...p_{m+1})` and
/// `y = c + q_m/(p_1...p_m)`, which satisfy `psi(c) < psi(x)`, `x < y` and
/// `psi(x) > psi(y)`.
pub fn monotonicity_witness(p: &BasicSeq, q: &BasicSeq, cell: &[Nat], horizon: u64) -> Result<Option<Witness>> {
    let c_len = cell.len() as u64;
    let pv = p.prefix(horizon.max(c_len) + 1)?;
    let qv = q.prefix(horizon.max(c_len) + 1)?;
    for (i, d) in cell.iter().enumerate() {
        if d >= &pv[i] {
            return Err(Error::DigitOutOfRange { index: i as u64 + 1, digit: d.clone(), base: pv[i].clone() });
        }
    }
    let Some(m) = (c_len + 1..=horizon).find(|&m| pv[(m - 1) as usize] > qv[(m - 1) as usize]) else {
        return Ok(None);
    };
    let mi = m as usize;
    let mut dc = cell.to_vec();
    dc.resize(mi + 1, Nat::zero());
    let mut dx = dc.clone();
    dx[mi - 1] = &qv[mi - 1] - 1u8;
    dx[mi] = Nat::one();
    let mut dy = dc.clone();
    dy[mi - 1] = qv[mi - 1].clone();
    let (ps, qs) = (&pv[..=mi], &qv[..=mi]);
    let val = |d: &[Nat]| value_of(d, ps);
    let psi = |d: &[Nat]| value_of(&psi_digits(d, qs), qs);
    let w = Witness { m, c: val(&dc), x: val(&dx), y: val(&dy), psi_c: psi(&dc), psi_x: psi(&dx), psi_y: psi(&dy) };
    if !(w.psi_c < w.psi_x && w.x < w.y && w.psi_x > w.psi_y) {
        return Err(invalid("witness failed exact verification"));
    }
    Ok(Some(w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HolderVerdict {
    BoundedSoFar,
    Diverging,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    /// `liminf min(p_n, q_n) >= 3`, judged on the last half of the horizon.
    pub hypothesis_ok: bool,
    pub warnings: Vec<String>,
    /// log10 of the running supremum of each expression.
    pub sup1: Bracket,
    pub sup2: Bracket,
    /// `(n, log10 term)` at checkpoints.
    pub trend1: Vec<(u64, f64)>,
    pub trend2: Vec<(u64, f64)>,
    pub verdict1: HolderVerdict,
    pub verdict2: HolderVerdict,
    pub verdict: HolderVerdict,
}

/// Evaluates the two Hölder expressions
/// `(p_1...p_n)^a / (q_1...q_n) * min(p_n, q_n)^{1-a}` and
/// `(p_1...p_{n+k})^a / (q_1...q_n) * (p_{n+k+1} / max(1, p_{n+k+1} - q_{n+k+1}))^a`
/// up to the horizon.
///
/// Suprema are certified log brackets. A verdict is `Diverging` when every
/// step over the last tenth of the horizon increases the expression, decided
/// exactly by comparing `v`-th powers for `a = u/v`.
pub fn holder_report(p: &BasicSeq, q: &BasicSeq, k: u64, alpha: &Rat, horizon: u64, checkpoints: &[u64]) -> Result<HolderReport> {
    if !alpha.is_positive() || alpha > &Rat::one() {
        return Err(invalid("alpha must lie in (0, 1]"));
    }
    if horizon < 2 {
        return Err(invalid("horizon must be at least 2"));
    }
    let u = alpha.numer().magnitude().to_u32().ok_or_else(|| invalid("alpha numerator too large"))?;
    let v = alpha.denom().magnitude().to_u32().ok_or_else(|| invalid("alpha denominator too large"))?;
    let a = alpha.to_f64().unwrap_or(1.0);
    let len = horizon + k + 2;
    let pv = p.prefix(len)?;
    let qv = q.prefix(len)?;
    let mins: Vec<Nat> = pv.iter().zip(&qv).map(|(a, b)| a.min(b).clone()).collect();
    let dv: Vec<Nat> = pv.iter().zip(&qv).map(|(a, b)| if a > b { a - b } else { Nat::one() }).collect();

    let mut warnings = Vec::new();
    let half = (horizon / 2) as usize;
    let three = Nat::from(3u8);
    let hypothesis_ok = mins[half..horizon as usize].iter().all(|m| m >= &three);
    if let Some(j) = mins[..half].iter().position(|m| m < &three) {
        warnings.push(format!("min(p_n, q_n) < 3 at n = {} (early indices only affect constants)", j + 1));
    }
    if !hypothesis_ok {
        warnings.push(String::from("min(p_n, q_n) < 3 in the last half of the horizon"));
    }

    let ln: Vec<Bracket> = pv.iter().map(ln_nat).collect();
    let lq: Vec<Bracket> = qv.iter().map(ln_nat).collect();
    let mut sp = LogSum::new();
    let mut sq = LogSum::new();
    for j in 0..k as usize {
        sp.push(ln[j]);
    }
    let (mut sup1, mut sup2) = (Bracket::exact(f64::NEG_INFINITY), Bracket::exact(f64::NEG_INFINITY));
    let (mut trend1, mut trend2) = (Vec::new(), Vec::new());
    let mut sp1 = LogSum::new();
    for n in 1..=horizon as usize {
        sp1.push(ln[n - 1]);
        sp.push(ln[n + k as usize - 1]);
        sq.push(lq[n - 1]);
        let t1 = sp1.value().scale(a).sub(sq.value()).add(ln_nat(&mins[n - 1]).scale(1.0 - a)).to_log10();
        let r = ln[n + k as usize].sub(ln_nat(&dv[n + k as usize]));
        let t2 = sp.value().scale(a).sub(sq.value()).add(r.scale(a)).to_log10();
        if t1.mid > sup1.mid {
            sup1 = t1;
        }
        if t2.mid > sup2.mid {
            sup2 = t2;
        }
        if checkpoints.contains(&(n as u64)) || n as u64 == horizon {
            trend1.push((n as u64, t1.mid));
            trend2.push((n as u64, t2.mid));
        }
    }

    let from = ((horizon * 9).div_ceil(10)).max(1) as usize;
    let mut inc1 = true;
    let mut inc2 = true;
    for n in from..horizon as usize {
        // 1-based step n -> n+1, 0-based arrays
        let (pn1, qn1) = (&pv[n], &qv[n]);
        let lhs = pn1.pow(u) * mins[n].pow(v - u);
        let rhs = qn1.pow(v) * mins[n - 1].pow(v - u);
        inc1 &= lhs > rhs;
        let i = n + k as usize;
        let lhs = (&pv[i] * &dv[i - 1]).pow(u);
        let rhs = qv[n].pow(v) * dv[i].pow(u);
        inc2 &= lhs > rhs;
    }
    let verdict_of = |inc: bool| if inc { HolderVerdict::Diverging } else { HolderVerdict::BoundedSoFar };
    let (verdict1, verdict2) = (verdict_of(inc1), verdict_of(inc2));
    let verdict = if inc1 || inc2 { HolderVerdict::Diverging } else { HolderVerdict::BoundedSoFar };
    Ok(HolderReport { hypothesis_ok, warnings, sup1, sup2, trend1, trend2, verdict1, verdict2, verdict })
}

/// `integral_0^1 psi_{P_t,Q_t} = 1/(2 q_1...q_t) + sum_{n<=t} M_n / (p_n q_1...q_n)`
/// with `M_n = sum_{E<p_n} min(E, q_n - 1)`.
pub fn integral_approximant(p: &BasicSeq, q: &BasicSeq, t: u64) -> Result<Rat> {
    let pv = p.prefix(t)?;
    let qv = q.prefix(t)?;
    let mut qq = Nat::one();
    let mut s = Rat::zero();
    for (pn, qn) in pv.iter().zip(&qv) {
        qq *= qn;
        let m = digit_min_sum(pn, qn);
        s += rat(&m, &(pn * &qq));
    }
    Ok(s + rat(&Nat::one(), &(Nat::from(2u8) * qq)))
}

/// `sum_{E=0}^{p-1} min(E, q-1)`.
fn digit_min_sum(p: &Nat, q: &Nat) -> Nat {
    let c = p.min(q).clone();
    // 0 + 1 + ... + (c-1), then (p - c) copies of q-1 when p > q.
    let tri = &c * (&c - 1u8) / 2u8;
    if p > q {
        tri + (p - q) * (q - 1u8)
    } else {
        tri
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{canonicalize, expand_rational, Tail};
    use crate::seq::default_checkpoints;

    fn n(v: u64) -> Nat {
        Nat::from(v)
    }

    fn r(a: i64, b: i64) -> Rat {
        Rat::new(a.into(), b.into())
    }

    fn c(b: u64) -> BasicSeq {
        BasicSeq::constant(b).unwrap()
    }

    fn point(p: &BasicSeq, d: &[u64]) -> DigitStream {
        DigitStream::from_digits(p.clone(), BigInt::zero(), d.iter().map(|&v| n(v)).collect(), Tail::Zeros).unwrap()
    }

    #[test]
    fn footnote_image_is_one() {
        let x = expand_rational(&r(7, 8), &c(3), 10).unwrap();
        let q = BasicSeq::periodic(vec![n(3), n(2)]).unwrap();
        let y = psi_map(&x, &q).unwrap();
        assert_eq!(y.prefix(4).unwrap(), [2u64, 1, 2, 1].map(n).to_vec());
        assert_eq!(y.canonicity(), &Canonicity::MaxTail { from: 1 });
        assert_eq!(y.value_exact(), Some(r(1, 1)));
        let one = canonicalize(&y).unwrap().stream;
        assert_eq!(one.int_part(), &BigInt::from(1));
    }

    #[test]
    fn identity_and_e_minus_two() {
        let p = c(3);
        let x = expand_rational(&r(5, 17), &p, 50).unwrap();
        let y = psi_map(&x, &p).unwrap();
        assert_eq!(y.prefix(200).unwrap(), x.prefix(200).unwrap());
        let ones = DigitStream::from_fn(p, "ones", |_| n(1));
        let img = psi_map(&ones, &BasicSeq::affine(1, 1u8).unwrap()).unwrap();
        let e = crate::digits::enclose_prefix(&img, 25).unwrap();
        let e_minus_2 = core::f64::consts::E - 2.0;
        assert!((e.mid_f64() - e_minus_2).abs() < 1e-15);
        assert!(e.width() < r(1, 1_000_000_000_000_000_000));
    }

    #[test]
    fn chain_identity_and_net_min() {
        let q = BasicSeq::affine(2, 1u8).unwrap();
        let x = DigitStream::from_fn(q.clone(), "n mod q", |m| n(m % (m + 3)));
        let same = compose_chain(&[q.clone(), q.clone()], &x).unwrap();
        assert_eq!(same.prefix(50).unwrap(), x.prefix(50).unwrap());
        let p = q.map("half", |v| (v / 2u8).max(n(2)));
        let y = compose_chain(&[q.clone(), p.clone(), q.clone()], &x).unwrap();
        let pv = p.prefix(50).unwrap();
        let expect: Vec<Nat> = x.prefix(50).unwrap().iter().zip(&pv).map(|(e, p)| e.min(&(p - 1u8)).clone()).collect();
        assert_eq!(y.prefix(50).unwrap(), expect);
    }

    #[test]
    fn approximant_examples() {
        let p = BasicSeq::explicit(vec![n(3)], c(2)).unwrap();
        assert_eq!(approximant_eval(&p, &c(2), 1, &r(1, 2)).unwrap(), r(3, 4));
        let q = c(7);
        for t in 0..6 {
            assert_eq!(approximant_eval(&q, &q, t, &r(23, 10)).unwrap(), r(3, 10));
        }
    }

    #[test]
    fn continuity_worked_cases() {
        let (p5, q3) = (c(5), c(3));
        let rep = classify_continuity(&p5, &q3, &point(&p5, &[3]), 50).unwrap();
        assert_eq!(rep.status, Status::Jump);
        assert_eq!(rep.jump, Some(r(-1, 3)));
        assert_eq!(rep.set_tag, SetTag::A { t: 1 });
        let (p2, q10) = (c(2), c(10));
        let rep = classify_continuity(&p2, &q10, &point(&p2, &[1]), 50).unwrap();
        assert_eq!(rep.jump, Some(r(4, 45)));
        assert_eq!(rep.set_tag, SetTag::B { s: 2 });
        let rep = classify_continuity(&q3, &q3, &point(&q3, &[1, 2, 1]), 50).unwrap();
        assert_eq!(rep.status, Status::Continuous);
        assert_eq!(rep.jump, Some(Rat::zero()));
        assert_eq!(rep.set_tag, SetTag::None);
        let int = classify_continuity(&q3, &q3, &point(&q3, &[]), 50).unwrap();
        assert_eq!(int.set_tag, SetTag::IntegerPoint);
        assert_eq!(int.jump, Some(r(-1, 1)));
    }

    #[test]
    fn continuity_undecided_without_periodic_tail() {
        // p_j >= q_j as far as the horizon sees, but the bases are not periodic.
        let p = BasicSeq::affine(3, 1u8).unwrap();
        let q = BasicSeq::affine(2, 1u8).unwrap();
        let rep = classify_continuity(&p, &q, &point(&p, &[1]), 30).unwrap();
        assert_eq!(rep.status, Status::Undecided);
        assert!(rep.jump.is_none());
        let q2 = BasicSeq::affine(4, 1u8).unwrap();
        let rep = classify_continuity(&p, &q2, &point(&p, &[1]), 30).unwrap();
        assert_eq!(rep.status, Status::Jump);
        assert_eq!(rep.set_tag, SetTag::B { s: 2 });
    }

    #[test]
    fn variation_small_cases() {
        let rep = variation_exact(&c(3), &c(2), 1).unwrap();
        assert_eq!(rep.v, r(3, 1));
        assert!(rep.v <= rep.upper_bound);
        for t in 1..5 {
            let rep = variation_exact(&c(4), &c(4), t).unwrap();
            assert_eq!(rep.v, r(2, 1));
            assert_eq!(rep.method, VariationMethod::Breakpoints);
        }
        for (a, b) in [(2u64, 3u64), (5, 2), (3, 4)] {
            for t in 1..4 {
                let f = variation_exact(&c(a), &c(b), t).unwrap().v;
                assert_eq!(f, variation_breakpoints(&c(a), &c(b), t).unwrap());
            }
        }
    }

    #[test]
    fn bv_examples() {
        let rep = bv_check(&c(2), &c(3), 60, &[]).unwrap();
        assert_eq!(rep.verdict, BvVerdict::ConditionMet);
        assert_eq!(bv_check(&c(3), &c(2), 60, &[]).unwrap().verdict, BvVerdict::NotProven);
        let rep = bv_check(&c(2), &c(2), 60, &[10, 30]).unwrap();
        assert_eq!(rep.verdict, BvVerdict::ConditionMet);
        // sum_{j>=2} 8(j-1)/2^j = 8
        let (_, last) = rep.double_sum_partials.last().unwrap();
        let tb = rep.tail_bound.clone().unwrap();
        assert!(last < &r(8, 1) && &(last + tb) >= &r(8, 1));
        let aff = bv_check(&c(2), &BasicSeq::affine(2, 1u8).unwrap(), 30, &[]).unwrap();
        assert_eq!(aff.verdict, BvVerdict::NotProven);
    }

    #[test]
    fn witness_worked_case() {
        let w = monotonicity_witness(&c(5), &c(3), &[], 10).unwrap().unwrap();
        assert_eq!((w.m, w.x.clone(), w.y.clone()), (1, r(11, 25), r(3, 5)));
        assert_eq!((w.psi_x, w.psi_y), (r(7, 9), r(2, 3)));
        assert!(monotonicity_witness(&c(2), &c(3), &[n(1)], 30).unwrap().is_none());
        assert!(monotonicity_witness(&c(5), &c(3), &[n(5)], 30).is_err());
    }

    #[test]
    fn holder_examples() {
        let cps = default_checkpoints(2000);
        let b = c(5);
        let rep = holder_report(&b, &b, 2, &r(1, 1), 2000, &cps).unwrap();
        assert_eq!(rep.verdict, HolderVerdict::BoundedSoFar);
        assert!(rep.hypothesis_ok);
        let q = BasicSeq::geometric(2u8, 2u8).unwrap();
        let p = q.map("minus1", |v| v - 1u8);
        let rep = holder_report(&p, &q, 0, &r(3, 4), 2000, &cps).unwrap();
        assert_eq!(rep.verdict, HolderVerdict::BoundedSoFar);
        let p = BasicSeq::geometric(1u8, 2u8).unwrap();
        let q = BasicSeq::affine(1, 1u8).unwrap();
        let rep = holder_report(&p, &q, 0, &r(1, 1), 2000, &cps).unwrap();
        assert_eq!(rep.verdict1, HolderVerdict::Diverging);
        assert!(rep.hypothesis_ok);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn integral_examples() {
        let b = c(6);
        for t in 0..5 {
            assert_eq!(integral_approximant(&b, &b, t).unwrap(), r(1, 2));
        }
        let p = BasicSeq::explicit(vec![n(3)], c(2)).unwrap();
        // cells [0,1/3),[1/3,2/3),[2/3,1) map to slope 3/2 pieces starting at 0, 1/2, 1/2
        let expect = r(1, 3) * (r(0, 1) + r(1, 2) + r(1, 2)) + r(3, 1) * r(3, 2) * r(1, 2) * r(1, 9);
        assert_eq!(integral_approximant(&p, &c(2), 1).unwrap(), expect);
    }

    #[test]
    fn digit_min_sum_matches_loop() {
        for p in 2u64..9 {
            for q in 2u64..9 {
                let direct: u64 = (0..p).map(|e| e.min(q - 1)).sum();
                assert_eq!(digit_min_sum(&n(p), &n(q)), n(direct));
            }
        }
    }
}
