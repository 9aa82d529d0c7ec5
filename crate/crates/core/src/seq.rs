//! Basic sequences: the varying radices `Q = (q_n)`, `q_n >= 2`.

use alloc::{format, string::String, sync::Arc, vec, vec::Vec};
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::logs::{ln_nat, Bracket, LogSum};
use crate::{Nat, Rat};

/// Lazily evaluated base rule used by constructions.
pub trait SeqRule: Send + Sync + fmt::Debug {
    /// `q_n` for `n >= 1`.
    fn value(&self, n: u64) -> Result<Nat>;

    /// `q_from, ..., q_{from+count-1}`; override when sequential access is cheaper.
    fn values(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        (from..from + count as u64).map(|n| self.value(n)).collect()
    }

    fn handle(&self) -> Option<Handle> {
        None
    }
}

/// Named constructions that evaluators may recognise and treat in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Handle {
    Qnex,
    Rdn,
    Kappa,
    Mff,
}

/// IID uniform law on `{lo, ..., hi}` with a fixed seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureSpec {
    pub lo: u64,
    pub hi: u64,
    pub seed: u64,
}

impl MeasureSpec {
    pub fn new(lo: u64, hi: u64, seed: u64) -> Result<Self> {
        if lo < 2 {
            return Err(invalid(format!("iid support starts at {lo}, below 2")));
        }
        if lo > hi {
            return Err(invalid(format!("iid support [{lo}, {hi}] is empty")));
        }
        Ok(MeasureSpec { lo, hi, seed })
    }

    /// The `n`-th draw. Each index owns its own ChaCha block, so access is
    /// random and needs no memo.
    pub fn draw(&self, n: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(n) << 4);
        Uniform::new_inclusive(self.lo, self.hi).sample(&mut rng)
    }

    pub fn sample(&self, n: u64) -> Vec<u64> {
        (1..=n).map(|k| self.draw(k)).collect()
    }

    pub fn mean(&self) -> f64 {
        (self.lo as f64 + self.hi as f64) / 2.0
    }

    pub fn variance(&self) -> f64 {
        let m = (self.hi - self.lo + 1) as f64;
        (m * m - 1.0) / 12.0
    }
}

/// One piece of a concatenated sequence: the first `len` terms of `seq`,
/// repeated `repeat` times (forever when `None`).
#[derive(Clone, Debug)]
pub struct Segment {
    pub seq: BasicSeq,
    pub repeat: Option<Nat>,
    pub len: Nat,
}

#[derive(Debug)]
enum Kind {
    Constant(Nat),
    Affine { a: BigInt, d: Nat },
    Geometric { a: Nat, r: Nat },
    Polynomial(Vec<Nat>),
    Periodic(Vec<Nat>),
    Explicit { prefix: Vec<Nat>, tail: BasicSeq },
    Concat(Vec<Segment>),
    Iid(MeasureSpec),
    Rule(Arc<dyn SeqRule>),
}

/// A basic sequence. Cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct BasicSeq(Arc<Kind>);

impl fmt::Debug for BasicSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

/// `prefix` followed by `cycle` repeated forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventualPeriod {
    pub prefix: Vec<Nat>,
    pub cycle: Vec<Nat>,
}

fn check_base(v: &Nat, what: &str) -> Result<()> {
    if *v < Nat::from(2u8) {
        Err(invalid(format!("{what}: base {v} is below 2")))
    } else {
        Ok(())
    }
}

impl BasicSeq {
    fn wrap(k: Kind) -> Self {
        BasicSeq(Arc::new(k))
    }

    pub fn constant(v: impl Into<Nat>) -> Result<Self> {
        let v = v.into();
        check_base(&v, "constant")?;
        Ok(Self::wrap(Kind::Constant(v)))
    }

    /// `q_n = a + d n`.
    pub fn affine(a: impl Into<BigInt>, d: impl Into<Nat>) -> Result<Self> {
        let (a, d) = (a.into(), d.into());
        if a.clone() + BigInt::from(d.clone()) < BigInt::from(2) {
            return Err(invalid(format!("affine: q_1 = {a} + {d} is below 2")));
        }
        Ok(Self::wrap(Kind::Affine { a, d }))
    }

    /// `q_n = a r^n`.
    pub fn geometric(a: impl Into<Nat>, r: impl Into<Nat>) -> Result<Self> {
        let (a, r) = (a.into(), r.into());
        if r.is_zero() || &a * &r < Nat::from(2u8) {
            return Err(invalid(format!("geometric: q_1 = {a}*{r} is below 2")));
        }
        Ok(Self::wrap(Kind::Geometric { a, r }))
    }

    /// `q_n = sum_k c_k n^k` with nonnegative coefficients (so `q_n` is nondecreasing).
    pub fn polynomial(coeffs: Vec<Nat>) -> Result<Self> {
        let at1: Nat = coeffs.iter().sum();
        if at1 < Nat::from(2u8) {
            return Err(invalid("polynomial: q_1 is below 2"));
        }
        Ok(Self::wrap(Kind::Polynomial(coeffs)))
    }

    pub fn periodic(values: Vec<Nat>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("periodic: empty period"));
        }
        for v in &values {
            check_base(v, "periodic")?;
        }
        Ok(Self::wrap(Kind::Periodic(values)))
    }

    pub fn explicit(prefix: Vec<Nat>, tail: BasicSeq) -> Result<Self> {
        for v in &prefix {
            check_base(v, "explicit prefix")?;
        }
        Ok(Self::wrap(Kind::Explicit { prefix, tail }))
    }

    pub fn concatenated(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("concatenated: no segments"));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.len.is_zero() || s.repeat.as_ref().is_some_and(Zero::is_zero) {
                return Err(invalid(format!("concatenated: segment {i} is empty")));
            }
            if s.repeat.is_none() && i + 1 != segments.len() {
                return Err(invalid(format!("concatenated: unbounded segment {i} is not last")));
            }
        }
        Ok(Self::wrap(Kind::Concat(segments)))
    }

    pub fn iid(m: MeasureSpec) -> Self {
        Self::wrap(Kind::Iid(m))
    }

    pub fn from_rule(rule: Arc<dyn SeqRule>) -> Self {
        Self::wrap(Kind::Rule(rule))
    }

    /// Pointwise image `f(q_n)`; results below 2 surface as errors on access.
    pub fn map<F>(&self, name: &'static str, f: F) -> Self
    where
        F: Fn(&Nat) -> Nat + Send + Sync + 'static,
    {
        Self::from_rule(Arc::new(MapRule { inner: self.clone(), name, f }))
    }

    pub fn handle(&self) -> Option<Handle> {
        match &*self.0 {
            Kind::Rule(r) => r.handle(),
            _ => None,
        }
    }

    /// `q_n`; index 0 is rejected.
    pub fn q_at(&self, n: u64) -> Result<Nat> {
        if n == 0 {
            return Err(Error::IndexZero);
        }
        let v = self.raw(n)?;
        if v < Nat::from(2u8) {
            return Err(Error::BaseBelowTwo { index: n, value: v });
        }
        Ok(v)
    }

    fn raw(&self, n: u64) -> Result<Nat> {
        Ok(match &*self.0 {
            Kind::Constant(v) => v.clone(),
            Kind::Affine { a, d } => (a + BigInt::from(d * n)).to_biguint().unwrap_or_default(),
            Kind::Geometric { a, r } => a * Pow::pow(r, n),
            Kind::Polynomial(c) => {
                let x = Nat::from(n);
                c.iter().rev().fold(Nat::zero(), |acc, ck| acc * &x + ck)
            }
            Kind::Periodic(v) => v[((n - 1) % v.len() as u64) as usize].clone(),
            Kind::Explicit { prefix, tail } => {
                let l = prefix.len() as u64;
                if n <= l {
                    prefix[(n - 1) as usize].clone()
                } else {
                    tail.q_at(n - l)?
                }
            }
            Kind::Concat(segs) => {
                let mut off = Nat::from(n - 1);
                for s in segs {
                    match &s.repeat {
                        Some(r) => {
                            let span = r * &s.len;
                            if off < span {
                                let k = (&off % &s.len).to_u64().ok_or_else(|| invalid("segment offset overflow"))?;
                                return s.seq.q_at(k + 1);
                            }
                            off -= span;
                        }
                        None => {
                            let k = (&off % &s.len).to_u64().ok_or_else(|| invalid("segment offset overflow"))?;
                            return s.seq.q_at(k + 1);
                        }
                    }
                }
                let len: Nat = segs.iter().map(|s| s.repeat.clone().unwrap_or_default() * &s.len).sum();
                return Err(Error::OutOfRange { index: Nat::from(n), len });
            }
            Kind::Iid(m) => Nat::from(m.draw(n)),
            Kind::Rule(r) => r.value(n)?,
        })
    }

    /// `q_from, ..., q_{from+count-1}`.
    pub fn values(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        if from == 0 {
            return Err(Error::IndexZero);
        }
        let out = match &*self.0 {
            Kind::Constant(v) => vec![v.clone(); count],
            Kind::Explicit { prefix, tail } => {
                let l = prefix.len() as u64;
                let mut out = Vec::with_capacity(count);
                let mut n = from;
                while out.len() < count && n <= l {
                    out.push(prefix[(n - 1) as usize].clone());
                    n += 1;
                }
                if out.len() < count {
                    out.extend(tail.values(n - l, count - out.len())?);
                }
                return Ok(out);
            }
            Kind::Rule(r) => r.values(from, count)?,
            _ => (from..from + count as u64).map(|n| self.raw(n)).collect::<Result<_>>()?,
        };
        for (i, v) in out.iter().enumerate() {
            if *v < Nat::from(2u8) {
                return Err(Error::BaseBelowTwo { index: from + i as u64, value: v.clone() });
            }
        }
        Ok(out)
    }

    /// `q_1, ..., q_n`.
    pub fn prefix(&self, n: u64) -> Result<Vec<Nat>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.values(1, n as usize)
    }

    /// `q_1 ... q_n` together with `Q_n^{(k)}` for each requested order.
    pub fn prefix_products(&self, n: u64, ks: &[u32]) -> Result<PrefixProducts> {
        if ks.contains(&0) {
            return Err(invalid("block order k must be at least 1"));
        }
        let kmax = ks.iter().copied().max().unwrap_or(1) as u64;
        let q = self.prefix(n + kmax - 1)?;
        let prod = q[..n as usize].iter().fold(Nat::one(), |a, b| a * b);
        let qnk = ks.iter().map(|&k| (k, qnk_exact(&q, n, k))).collect();
        Ok(PrefixProducts { n, prod, qnk })
    }

    /// `Q_n^{(k)}` in floating point, for horizons where exact sums are too large.
    pub fn qnk_f64(&self, n: u64, k: u32) -> Result<f64> {
        let q = self.prefix(n + k as u64 - 1)?;
        let lq: Vec<f64> = q.iter().map(|v| ln_nat(v).mid).collect();
        let mut s = 0.0;
        let mut w: f64 = lq[..k as usize].iter().sum();
        for j in 0..n as usize {
            if j > 0 {
                w += lq[j + k as usize - 1] - lq[j - 1];
            }
            s += libm::exp(-w);
        }
        Ok(s)
    }

    /// Agrees with `self` up to `t`, constant 2 afterwards.
    pub fn truncate_tail(&self, t: u64) -> Result<Self> {
        let two = Self::constant(2u8)?;
        if t == 0 {
            return Ok(two);
        }
        Self::explicit(self.prefix(t)?, two)
    }

    /// Detects sequences that are structurally eventually periodic.
    pub fn eventual_period(&self) -> Option<EventualPeriod> {
        match &*self.0 {
            Kind::Constant(v) => Some(EventualPeriod { prefix: Vec::new(), cycle: vec![v.clone()] }),
            Kind::Affine { a, d } if d.is_zero() => {
                Some(EventualPeriod { prefix: Vec::new(), cycle: vec![a.to_biguint()?] })
            }
            Kind::Geometric { a, r } if r.is_one() => Some(EventualPeriod { prefix: Vec::new(), cycle: vec![a.clone()] }),
            Kind::Polynomial(c) if c.iter().skip(1).all(Zero::is_zero) => {
                Some(EventualPeriod { prefix: Vec::new(), cycle: vec![c.first()?.clone()] })
            }
            Kind::Periodic(v) => Some(EventualPeriod { prefix: Vec::new(), cycle: v.clone() }),
            Kind::Explicit { prefix, tail } => {
                let t = tail.eventual_period()?;
                let mut p = prefix.clone();
                p.extend(t.prefix);
                Some(EventualPeriod { prefix: p, cycle: t.cycle })
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &*self.0 {
            Kind::Constant(v) => format!("constant({v})"),
            Kind::Affine { a, d } => format!("affine({a},{d})"),
            Kind::Geometric { a, r } => format!("geometric({a},{r})"),
            Kind::Polynomial(c) => format!("polynomial({c:?})"),
            Kind::Periodic(v) => format!("periodic({v:?})"),
            Kind::Explicit { prefix, tail } => format!("explicit({} terms, then {})", prefix.len(), tail.describe()),
            Kind::Concat(s) => format!("concatenated({} segments)", s.len()),
            Kind::Iid(m) => format!("iid({},{},seed {})", m.lo, m.hi, m.seed),
            Kind::Rule(r) => format!("{r:?}"),
        }
    }
}

fn qnk_exact(q: &[Nat], n: u64, k: u32) -> Rat {
    let mut s = Rat::zero();
    for j in 0..n as usize {
        let d = q[j..j + k as usize].iter().fold(Nat::one(), |a, b| a * b);
        s += Rat::new(BigInt::one(), BigInt::from(d));
    }
    s
}

struct MapRule<F> {
    inner: BasicSeq,
    name: &'static str,
    f: F,
}

impl<F> fmt::Debug for MapRule<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.inner.describe())
    }
}

impl<F> SeqRule for MapRule<F>
where
    F: Fn(&Nat) -> Nat + Send + Sync,
{
    fn value(&self, n: u64) -> Result<Nat> {
        Ok((self.f)(&self.inner.q_at(n)?))
    }

    fn values(&self, from: u64, count: usize) -> Result<Vec<Nat>> {
        Ok(self.inner.values(from, count)?.iter().map(&self.f).collect())
    }
}

/// Cumulative product and block sums `Q_n^{(k)} = sum_{j<=n} 1/(q_j ... q_{j+k-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixProducts {
    pub n: u64,
    pub prod: Nat,
    pub qnk: Vec<(u32, Rat)>,
}

impl PrefixProducts {
    pub fn qnk(&self, k: u32) -> Option<&Rat> {
        self.qnk.iter().find(|(kk, _)| *kk == k).map(|(_, v)| v)
    }
}

/// IID uniform sequence for `m`.
pub fn sample_iid(m: MeasureSpec) -> BasicSeq {
    BasicSeq::iid(m)
}

/// Checkpoints 1, 2, 5, 10, 20, 50, ... up to `n`, always ending at `n`.
pub fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut dec = 1u64;
    'outer: loop {
        for m in [1u64, 2, 5] {
            let c = dec.saturating_mul(m);
            if c >= n {
                break 'outer;
            }
            out.push(c);
        }
        dec = dec.saturating_mul(10);
    }
    if n > 0 {
        out.push(n);
    }
    out
}

/// Birkhoff diagnostics at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffPoint {
    pub n: u64,
    pub mean_log_p: f64,
    pub mean_log_q: f64,
    /// `ln(p_1 ... p_n / q_1 ... q_n)`.
    pub log_ratio: Bracket,
    /// Minimum of the log ratio over all indices up to `n`.
    pub running_min: f64,
    /// Partial sum of `sum_j (p_j + q_j)(p_1 + ... + p_{j-1}) / (q_1 ... q_j)`.
    pub double_series: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffReport {
    pub horizon: u64,
    pub points: Vec<BirkhoffPoint>,
}

impl BirkhoffReport {
    pub fn last(&self) -> &BirkhoffPoint {
        self.points.last().expect("horizon is at least 1")
    }
}

/// Ergodic averages of `log p`, `log q` and the product ratio `p_1...p_n / q_1...q_n`.
pub fn birkhoff_report(p: &BasicSeq, q: &BasicSeq, n: u64, checkpoints: &[u64]) -> Result<BirkhoffReport> {
    if n == 0 {
        return Err(Error::IndexZero);
    }
    let pv = p.prefix(n)?;
    let qv = q.prefix(n)?;
    let mut sp = LogSum::new();
    let mut sq = LogSum::new();
    let mut ratio = LogSum::new();
    let mut running_min = 0.0f64;
    let mut psum = Nat::zero();
    let mut double_series = 0.0;
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= n).collect();
    cps.push(n);
    cps.sort_unstable();
    cps.dedup();
    let mut next = cps.iter().peekable();
    let mut points = Vec::with_capacity(cps.len());
    for j in 0..n as usize {
        let (lp, lq) = (ln_nat(&pv[j]), ln_nat(&qv[j]));
        sp.push(lp);
        sq.push(lq);
        ratio.push(lp.sub(lq));
        if j > 0 {
            let term = ln_nat(&(&pv[j] + &qv[j])).mid + ln_nat(&psum).mid - sq.value().mid;
            double_series += libm::exp(term);
        }
        psum += &pv[j];
        let r = ratio.value();
        running_min = running_min.min(r.mid);
        if next.peek().is_some_and(|&&c| c == j as u64 + 1) {
            next.next();
            let m = (j + 1) as f64;
            points.push(BirkhoffPoint {
                n: j as u64 + 1,
                mean_log_p: sp.value().mid / m,
                mean_log_q: sq.value().mid / m,
                log_ratio: r,
                running_min,
                double_series,
            });
        }
    }
    Ok(BirkhoffReport { horizon: n, points })
}

pub(crate) fn rat(num: &Nat, den: &Nat) -> Rat {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}
